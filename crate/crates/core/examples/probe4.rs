//! Scratch: Newton from the left-flank kinetic-minimum sample.

use nlsnorm_core::energy::{energy_j, State, SystemParams};
use nlsnorm_core::flow::project_sphere;
use nlsnorm_core::minimax::{newton_refine, NewtonOptions};
use nlsnorm_core::scalar::{rescale_to_mass, solve_unit_ground, ScalarProblem};
use nlsnorm_core::RadialGrid;
use std::sync::Arc;

fn main() {
    let solve_grid = RadialGrid::uniform(3, 128.0, 4096).unwrap();
    let g1 = solve_unit_ground(ScalarProblem::new(3, 2.5, 1.0).unwrap(), Arc::clone(&solve_grid))
        .unwrap();
    let g2 = solve_unit_ground(ScalarProblem::new(3, 4.0, 1.0).unwrap(), solve_grid).unwrap();
    let (a1, a2) = (128.0, 16.0);
    let params = SystemParams {
        dim: 3, p1: 2.5, p2: 4.0, r1: 1.5, r2: 2.5,
        mu1: 1.0, mu2: 1.0, beta: 1.0, a1, a2,
    };
    let grid = RadialGrid::uniform(3, 128.0, 4096).unwrap();
    let lower = project_sphere(&rescale_to_mass(&g1, a1, Arc::clone(&grid)).unwrap().field, a1).unwrap();
    let upper = project_sphere(&rescale_to_mass(&g2, a2, Arc::clone(&grid)).unwrap().field, a2).unwrap();

    // scan the left flank for the kinetic minimum of u2
    let s_left = 3.8416_f64;
    let mut best: Option<(f64, f64)> = None;
    let mut sig = -s_left;
    while sig < 0.0 {
        let u2 = project_sphere(&upper.dilate(sig).unwrap(), a2).unwrap();
        let kin = u2.grad_norm_sq();
        if best.map_or(true, |(_, bk)| kin < bk) {
            best = Some((sig, kin));
        }
        sig += s_left / 40.0;
    }
    let (sig_min, kin_min) = best.unwrap();
    println!("kin2 minimum at sigma = {sig_min:.4}, kin2 = {kin_min:.5}");

    let u2 = project_sphere(&upper.dilate(sig_min).unwrap(), a2).unwrap();
    let st = State::new(lower.clone(), u2).unwrap();
    println!("init J = {}", energy_j(&params, &st).unwrap());
    for max_iters in [60, 200] {
        let nopts = NewtonOptions { tol: 1e-8, max_iters, ..NewtonOptions::default() };
        match newton_refine(&params, &st, &nopts) {
            Ok(sol) => {
                println!(
                    "newton({max_iters}): conv {} iters {} res {:.2e} J {:+.6} l1 {:+.4} l2 {:+.6} Q {:+.3e} kin2 {:.4}",
                    sol.converged, sol.iterations, sol.residual_norm, sol.j_value,
                    sol.lambda1, sol.lambda2, sol.q_value, sol.state.u2.grad_norm_sq()
                );
            }
            Err(e) => println!("newton({max_iters}) error: {e}"),
        }
    }
}
