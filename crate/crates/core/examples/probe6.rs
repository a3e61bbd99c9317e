//! Scratch: Newton from spread (halo-like) u2 inits at full coupling.

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
    let (a1, a2) = (1024.0, 1.0);
    let params = SystemParams {
        dim: 3, p1: 2.5, p2: 4.0, r1: 1.5, r2: 2.5,
        mu1: 1.0, mu2: 1.0, beta: 1.0, a1, a2,
    };
    let lower =
        project_sphere(&rescale_to_mass(&g1, a1, Arc::clone(&grid)).unwrap().field, a1).unwrap();
    let upper =
        project_sphere(&rescale_to_mass(&g2, a2, Arc::clone(&grid)).unwrap().field, a2).unwrap();
    let nopts = NewtonOptions { tol: 1e-8, max_iters: 120, ..NewtonOptions::default() };

    for tenth in 20..=60 {
        let sig = -(tenth as f64) / 10.0;
        let u2 = project_sphere(&upper.dilate(sig).unwrap(), a2).unwrap();
        let st = State::new(lower.clone(), u2).unwrap();
        let j0 = energy_j(&params, &st).unwrap();
        print!("sigma {sig:+.1}  kin2 {:.3}  J0 {j0:+.3} -> ", st.u2.grad_norm_sq());
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
