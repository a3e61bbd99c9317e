//! Scratch: Newton from shell-shaped u2 inits.

use nlsnorm_core::energy::{energy_j, State, SystemParams};
use nlsnorm_core::flow::project_sphere;
use nlsnorm_core::minimax::{newton_refine, NewtonOptions};
use nlsnorm_core::scalar::{rescale_to_mass, solve_unit_ground, ScalarProblem};
use nlsnorm_core::{RadialField, RadialGrid};
use std::sync::Arc;

fn main() {
    let grid = RadialGrid::uniform(3, 24.0, 4096).unwrap();
    let g1 = solve_unit_ground(ScalarProblem::new(3, 2.5, 1.0).unwrap(), Arc::clone(&grid))
        .unwrap();
    let (a1, a2) = (1024.0, 1.0);
    let params = SystemParams {
        dim: 3, p1: 2.5, p2: 4.0, r1: 1.5, r2: 2.5,
        mu1: 1.0, mu2: 1.0, beta: 1.0, a1, a2,
    };
    let lower =
        project_sphere(&rescale_to_mass(&g1, a1, Arc::clone(&grid)).unwrap().field, a1).unwrap();
    let nopts = NewtonOptions { tol: 1e-8, max_iters: 120, ..NewtonOptions::default() };

    for radius in [0.5_f64, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0] {
        for width in [0.5_f64, 1.0, 2.0] {
            let shell = RadialField::from_fn(Arc::clone(&grid), |r| {
                (-(r - radius).powi(2) / (2.0 * width * width)).exp()
            })
            .unwrap();
            let u2 = project_sphere(&shell, a2).unwrap();
            let st = State::new(lower.clone(), u2).unwrap();
            let j0 = energy_j(&params, &st).unwrap();
            print!(
                "R {radius:>4.1} w {width:>3.1}  kin2 {:>8.3}  J0 {j0:+9.3} -> ",
                st.u2.grad_norm_sq()
            );
            match newton_refine(&params, &st, &nopts) {
                Ok(sol) => println!(
                    "conv {} iters {} res {:.1e} J {:+.4} l1 {:+.4} l2 {:+.5} kin2 {:.3} Q {:+.1e}",
                    sol.converged, sol.iterations, sol.residual_norm, sol.j_value, sol.lambda1,
                    sol.lambda2, sol.state.u2.grad_norm_sq(), sol.q_value
                ),
                Err(e) => println!("error: {e}"),
            }
        }
    }
}
