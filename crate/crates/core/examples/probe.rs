//! Scratch diagnostics for the mixed-regime path + Newton pipeline.

use nlsnorm_core::energy::{energy_j, State, SystemParams};
use nlsnorm_core::minimax::{build_path, gamma_estimate, path_max, NewtonOptions, PathOptions};
use nlsnorm_core::scalar::{solve_unit_ground, ScalarProblem};
use nlsnorm_core::{RadialGrid};
use std::sync::Arc;

fn main() {
    let solve_grid = RadialGrid::uniform(3, 24.0, 4096).unwrap();
    let g1 = solve_unit_ground(ScalarProblem::new(3, 2.5, 1.0).unwrap(), Arc::clone(&solve_grid))
        .unwrap();
    let g2 = solve_unit_ground(ScalarProblem::new(3, 4.0, 1.0).unwrap(), solve_grid).unwrap();
    println!("g1: mass {} energy {}", g1.mass, g1.energy());
    println!("g2: mass {} energy {}", g2.mass, g2.energy());
    let a2 = 1.0;
    let m2 = g2.energy_at_mass(a2).unwrap();
    let mut a1 = 8.0;
    let (a1, m_sum) = loop {
        let m_sum = g1.energy_at_mass(a1).unwrap() + m2;
        if m_sum < -1.0 {
            break (a1, m_sum);
        }
        a1 *= 2.0;
    };
    println!("a1 = {a1}, a2 = {a2}, m1 = {}, m2 = {m2}, m_sum = {m_sum}", m_sum - m2);

    let params = SystemParams {
        dim: 3,
        p1: 2.5,
        p2: 4.0,
        r1: 1.5,
        r2: 2.5,
        mu1: 1.0,
        mu2: 1.0,
        beta: 1.0,
        a1,
        a2,
    };
    let grid = RadialGrid::uniform(3, 24.0, 4096).unwrap();
    let gn_grid = RadialGrid::uniform(3, 24.0, 4096).unwrap();
    let popts = PathOptions { samples: 41, ..PathOptions::default() };
    let path = build_path(&params, &grid, gn_grid, &popts).unwrap();
    println!("certificate: {:#?}", path.certificate);
    for (t, st) in path.t.iter().zip(&path.states) {
        println!(
            "  t = {t:.3}  J = {:+.6e}  kin2 = {:.4e}",
            energy_j(&params, st).unwrap(),
            st.u2.grad_norm_sq()
        );
    }
    let (t_star, j_max, state) = path_max(&params, &path).unwrap();
    println!("path max: t* = {t_star}, J = {j_max}");
    println!(
        "state*: kin1 {} kin2 {} m1 {} m2 {}",
        state.u1.grad_norm_sq(),
        state.u2.grad_norm_sq(),
        state.u1.mass(),
        state.u2.mass()
    );

    let _ = state;
    let nopts = NewtonOptions { tol: 1e-8, max_iters: 60, ..NewtonOptions::default() };
    let gn_grid2 = RadialGrid::uniform(3, 24.0, 4096).unwrap();
    match gamma_estimate(&params, &grid, gn_grid2, &popts, &nopts) {
        Ok(est) => {
            let sol = &est.solution;
            println!(
                "estimate: gamma_upper {} inf_b {} m_sum {} t* {}",
                est.gamma_upper, est.inf_b_lower, est.m_sum, est.t_star
            );
            println!(
                "solution: conv {} iters {} res {:.3e} J {} l1 {} l2 {} Q {:.3e}",
                sol.converged,
                sol.iterations,
                sol.residual_norm,
                sol.j_value,
                sol.lambda1,
                sol.lambda2,
                sol.q_value
            );
            println!(
                "  kin1 {} kin2 {} mass1 {} mass2 {}",
                sol.state.u1.grad_norm_sq(),
                sol.state.u2.grad_norm_sq(),
                sol.state.u1.mass(),
                sol.state.u2.mass()
            );
        }
        Err(e) => println!("estimate error: {e}"),
    }
}
