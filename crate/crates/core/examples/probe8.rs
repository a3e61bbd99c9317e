//! Scratch: does the coupled branch survive to beta = 1 at smaller a1?

use nlsnorm_core::energy::{energy_j, State, SystemParams};
use nlsnorm_core::flow::project_sphere;
use nlsnorm_core::minimax::{newton_refine, NewtonOptions};
use nlsnorm_core::scalar::{rescale_to_mass, solve_unit_ground, ScalarProblem};
use nlsnorm_core::RadialGrid;
use std::sync::Arc;

fn main() {
    let grid = RadialGrid::uniform(3, 24.0, 4096).unwrap();
    let g1 = solve_unit_ground(ScalarProblem::new(3, 2.5, 1.0).unwrap(), Arc::clone(&grid))
        .unwrap();
    let g2 = solve_unit_ground(ScalarProblem::new(3, 4.0, 1.0).unwrap(), Arc::clone(&grid))
        .unwrap();
    let a2 = 1.0;
    let m2 = g2.energy_at_mass(a2).unwrap();
    let nopts = NewtonOptions { tol: 1e-8, max_iters: 60, ..NewtonOptions::default() };

    for a1 in [560.0_f64, 576.0, 608.0, 640.0, 704.0, 768.0] {
        let m1 = g1.energy_at_mass(a1).unwrap();
        let m_sum = m1 + m2;
        println!("== a1 {a1}  m1 {m1:+.4}  m_sum {m_sum:+.4}");
        if m_sum >= 0.0 {
            println!("   not certified, skip");
            continue;
        }
        let lower =
            project_sphere(&rescale_to_mass(&g1, a1, Arc::clone(&grid)).unwrap().field, a1)
                .unwrap();
        let upper =
            project_sphere(&rescale_to_mass(&g2, a2, Arc::clone(&grid)).unwrap().field, a2)
                .unwrap();
        let mut params = SystemParams {
            dim: 3, p1: 2.5, p2: 4.0, r1: 1.5, r2: 2.5,
            mu1: 1.0, mu2: 1.0, beta: 0.0, a1, a2,
        };

        // Fiber hump at beta = 1 as a path_max proxy.
        params.beta = 1.0;
        let hump = {
            let at = |sig: f64| {
                let u2 = project_sphere(&upper.dilate(sig).unwrap(), a2).unwrap();
                energy_j(&params, &State::new(lower.clone(), u2).unwrap()).unwrap()
            };
            let (mut lo, mut hi) = (-1.5_f64, 1.0_f64);
            for _ in 0..50 {
                let a = lo + (hi - lo) / 3.0;
                let b = hi - (hi - lo) / 3.0;
                if at(a) < at(b) {
                    lo = a;
                } else {
                    hi = b;
                }
            }
            at(0.5 * (lo + hi))
        };
        println!("   fiber hump at beta=1: J {hump:+.4}  (window height {:.4})", -m1 + m_sum);

        params.beta = 0.0;
        let mut st = State::new(lower.clone(), upper.clone()).unwrap();
        match newton_refine(&params, &st, &nopts) {
            Ok(sol) if sol.converged => {
                st = sol.state;
            }
            other => {
                println!("   beta=0 solve failed: {other:?}");
                continue;
            }
        }

        let mut beta = 0.0_f64;
        let mut stride = 0.1_f64;
        let mut ok = true;
        while beta < 1.0 - 1e-12 {
            let next = (beta + stride).min(1.0);
            params.beta = next;
            match newton_refine(&params, &st, &nopts) {
                Ok(sol) if sol.converged && sol.lambda1 < 0.0 && sol.lambda2 < 0.0 => {
                    st = sol.state;
                    beta = next;
                    if stride < 0.1 {
                        stride *= 2.0;
                    }
                }
                _ => {
                    stride *= 0.5;
                    if stride < 1e-3 {
                        println!("   branch lost at beta ~ {beta:.3}");
                        ok = false;
                        break;
                    }
                }
            }
        }
        if !ok {
            continue;
        }
        params.beta = 1.0;
        let sol = newton_refine(&params, &st, &nopts).unwrap();
        println!(
            "   beta=1: conv {} iters {} res {:.1e} J {:+.4} l1 {:+.4} l2 {:+.4} kin2 {:.2} Q {:+.1e}",
            sol.converged, sol.iterations, sol.residual_norm, sol.j_value, sol.lambda1,
            sol.lambda2, sol.state.u2.grad_norm_sq(), sol.q_value
        );
        println!(
            "   window: J - m1 = {:+.4}  m_sum - J = {:+.4}  hump - J = {:+.4}",
            sol.j_value - m1, m_sum - sol.j_value, hump - sol.j_value
        );
    }
}
