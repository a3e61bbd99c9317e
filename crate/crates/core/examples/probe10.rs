//! Scratch: two-scale energy landscape at a1 = 560, beta = 1.

use nlsnorm_core::energy::{energy_j, State, SystemParams};
use nlsnorm_core::flow::project_sphere;
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

    // Header: sigma2 columns.
    print!("{:>6}", "s1\\s2");
    let s2_grid: Vec<f64> = (0..15).map(|k| 0.5 - 0.25 * k as f64).collect();
    for s2 in &s2_grid {
        print!(" {s2:>8.2}");
    }
    println!();
    for k1 in 0..9 {
        let s1 = 0.8 - 0.2 * k1 as f64;
        let u1 = match project_sphere(&lower.dilate(s1).unwrap(), a1) {
            Ok(v) => v,
            Err(_) => continue,
        };
        print!("{s1:>6.2}");
        for s2 in &s2_grid {
            let u2 = project_sphere(&upper.dilate(*s2).unwrap(), a2).unwrap();
            let j = energy_j(&params, &State::new(u1.clone(), u2).unwrap()).unwrap();
            print!(" {j:>8.1}");
        }
        println!();
    }
}
