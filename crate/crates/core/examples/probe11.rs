//! Scratch: Newton from the two-scale model pass at a1 = 560, beta = 1.

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
    let (a1, a2) = (560.0, 1.0);
    let m1 = g1.energy_at_mass(a1).unwrap();
    println!("m1 {m1:+.4}  m_sum {:+.4}", m1 + g2.energy_at_mass(a2).unwrap());
    let params = SystemParams {
        dim: 3, p1: 2.5, p2: 4.0, r1: 1.5, r2: 2.5,
        mu1: 1.0, mu2: 1.0, beta: 1.0, a1, a2,
    };
    let lower =
        project_sphere(&rescale_to_mass(&g1, a1, Arc::clone(&grid)).unwrap().field, a1).unwrap();
    let upper =
        project_sphere(&rescale_to_mass(&g2, a2, Arc::clone(&grid)).unwrap().field, a2).unwrap();
    let nopts = NewtonOptions { tol: 1e-8, max_iters: 120, ..NewtonOptions::default() };

    // Fine map first: locate the model pass.
    let mut best: Option<(f64, f64, f64)> = None;
    for k1 in 0..13 {
        let s1 = 0.2 + 0.05 * k1 as f64;
        let u1 = project_sphere(&lower.dilate(s1).unwrap(), a1).unwrap();
        // Ridge top over sigma2 by ternary search.
        let at = |s2: f64| {
            let u2 = project_sphere(&upper.dilate(s2).unwrap(), a2).unwrap();
            energy_j(&params, &State::new(u1.clone(), u2).unwrap()).unwrap()
        };
        let (mut lo, mut hi) = (-1.2_f64, 0.4_f64);
        for _ in 0..40 {
            let a = lo + (hi - lo) / 3.0;
            let b = hi - (hi - lo) / 3.0;
            if at(a) < at(b) {
                lo = a;
            } else {
                hi = b;
            }
        }
        let s2 = 0.5 * (lo + hi);
        let j = at(s2);
        println!("s1 {s1:+.2}  ridge s2 {s2:+.3}  J {j:+.3}");
        if best.map_or(true, |(_, _, bj)| j < bj) {
            best = Some((s1, s2, j));
        }
    }
    let (s1, s2, j) = best.unwrap();
    println!("model pass: s1 {s1:+.3} s2 {s2:+.3} J {j:+.3}");

    for (ds1, ds2) in [(0.0, 0.0), (0.0, -0.1), (0.0, 0.1), (-0.05, 0.0), (0.05, 0.0)] {
        let u1 = project_sphere(&lower.dilate(s1 + ds1).unwrap(), a1).unwrap();
        let u2 = project_sphere(&upper.dilate(s2 + ds2).unwrap(), a2).unwrap();
        let st = State::new(u1, u2).unwrap();
        print!("newton from ({:+.3},{:+.3}) -> ", s1 + ds1, s2 + ds2);
        match newton_refine(&params, &st, &nopts) {
            Ok(sol) => println!(
                "conv {} iters {} res {:.1e} J {:+.4} l1 {:+.4} l2 {:+.4} kin1 {:.1} kin2 {:.2} Q {:+.1e}",
                sol.converged, sol.iterations, sol.residual_norm, sol.j_value, sol.lambda1,
                sol.lambda2, sol.state.u1.grad_norm_sq(), sol.state.u2.grad_norm_sq(), sol.q_value
            ),
            Err(e) => println!("error: {e}"),
        }
    }
}
