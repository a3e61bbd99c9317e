//! Scratch: J along the u2 dilation fiber at fixed u1 for the mixed pair.

use nlsnorm_core::energy::{energy_j, State, SystemParams};
use nlsnorm_core::flow::project_sphere;
use nlsnorm_core::scalar::{rescale_to_mass, solve_unit_ground, ScalarProblem};
use nlsnorm_core::RadialGrid;
use std::sync::Arc;

fn main() {
    let solve_grid = RadialGrid::uniform(3, 24.0, 4096).unwrap();
    let g1 = solve_unit_ground(ScalarProblem::new(3, 2.5, 1.0).unwrap(), Arc::clone(&solve_grid))
        .unwrap();
    let g2 = solve_unit_ground(ScalarProblem::new(3, 4.0, 1.0).unwrap(), solve_grid).unwrap();
    let (a1, a2) = (1024.0, 1.0);
    let m1 = g1.energy_at_mass(a1).unwrap();
    let m2 = g2.energy_at_mass(a2).unwrap();
    println!("m1 {m1}  m2 {m2}  m_sum {}", m1 + m2);

    let params = SystemParams {
        dim: 3, p1: 2.5, p2: 4.0, r1: 1.5, r2: 2.5,
        mu1: 1.0, mu2: 1.0, beta: 1.0, a1, a2,
    };
    let grid = RadialGrid::uniform(3, 24.0, 4096).unwrap();
    let lower = project_sphere(&rescale_to_mass(&g1, a1, Arc::clone(&grid)).unwrap().field, a1).unwrap();
    let upper = project_sphere(&rescale_to_mass(&g2, a2, Arc::clone(&grid)).unwrap().field, a2).unwrap();
    println!("kin(lower) {}  kin(upper) {}", lower.grad_norm_sq(), upper.grad_norm_sq());
    println!("J(lower, upper) = {}", energy_j(&params, &State::new(lower.clone(), upper.clone()).unwrap()).unwrap());

    let mut sigma = -8.0_f64;
    while sigma <= 1.01 {
        let u2 = match upper.dilate(sigma) {
            Ok(v) => match project_sphere(&v, a2) {
                Ok(p) => p,
                Err(e) => { println!("sigma {sigma:+.2}: project failed: {e}"); sigma += 0.125; continue; }
            },
            Err(e) => { println!("sigma {sigma:+.2}: dilate failed: {e}"); sigma += 0.125; continue; }
        };
        let st = State::new(lower.clone(), u2).unwrap();
        let j = energy_j(&params, &st).unwrap();
        println!("sigma {sigma:+.2}  J {j:+.8e}  kin2 {:.5e}  (J - m1 = {:+.5e})",
            st.u2.grad_norm_sq(), j - m1);
        sigma += 0.125;
    }
}
