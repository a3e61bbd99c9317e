//! Scratch: manual beta continuation tracing for the mixed saddle.

use nlsnorm_core::energy::{State, SystemParams};
use nlsnorm_core::flow::project_sphere;
use nlsnorm_core::minimax::{newton_refine, NewtonOptions};
use nlsnorm_core::scalar::{rescale_to_mass, solve_unit_ground, ScalarProblem};
use nlsnorm_core::RadialGrid;
use std::sync::Arc;

fn main() {
    let solve_grid = RadialGrid::uniform(3, 96.0, 8192).unwrap();
    let g1 = solve_unit_ground(ScalarProblem::new(3, 2.5, 1.0).unwrap(), Arc::clone(&solve_grid))
        .unwrap();
    let g2 = solve_unit_ground(ScalarProblem::new(3, 4.0, 1.0).unwrap(), solve_grid).unwrap();
    let (a1, a2) = (1024.0, 1.0);
    let params = SystemParams {
        dim: 3, p1: 2.5, p2: 4.0, r1: 1.5, r2: 2.5,
        mu1: 1.0, mu2: 1.0, beta: 0.0, a1, a2,
    };
    let grid = RadialGrid::uniform(3, 96.0, 8192).unwrap();
    let lower = project_sphere(&rescale_to_mass(&g1, a1, Arc::clone(&grid)).unwrap().field, a1).unwrap();
    let upper = project_sphere(&rescale_to_mass(&g2, a2, Arc::clone(&grid)).unwrap().field, a2).unwrap();
    let init = State::new(lower, upper).unwrap();
    let nopts = NewtonOptions { tol: 1e-8, max_iters: 60, ..NewtonOptions::default() };

    let mut warm = init;
    let mut beta = 0.0_f64;
    let steps = [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5,
                 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 1.0];
    for &b in &steps {
        let p = SystemParams { beta: b, ..params.clone() };
        match newton_refine(&p, &warm, &nopts) {
            Ok(sol) => {
                println!(
                    "beta {b:5.2}  conv {}  iters {:2}  res {:.2e}  J {:+.6}  l1 {:+.4}  l2 {:+.6}  kin2 {:.4}",
                    sol.converged, sol.iterations, sol.residual_norm, sol.j_value,
                    sol.lambda1, sol.lambda2, sol.state.u2.grad_norm_sq()
                );
                if sol.converged {
                    warm = sol.state;
                    beta = b;
                } else {
                    println!("  (not converged; keeping warm state from beta {beta})");
                }
            }
            Err(e) => println!("beta {b:5.2}  error: {e}"),
        }
    }
}
