//! Scratch: map Newton basins from path samples, with and without a
//! u1 pre-relaxation burst.

use nlsnorm_core::energy::{energy_j, SystemParams};
use nlsnorm_core::minimax::{build_path, newton_refine, NewtonOptions, PathOptions};
use nlsnorm_core::RadialGrid;

fn main() {
    let params = SystemParams {
        dim: 3, p1: 2.5, p2: 4.0, r1: 1.5, r2: 2.5,
        mu1: 1.0, mu2: 1.0, beta: 1.0, a1: 1024.0, a2: 1.0,
    };
    let grid = RadialGrid::uniform(3, 24.0, 4096).unwrap();
    let gn = RadialGrid::uniform(3, 24.0, 4096).unwrap();
    let popts = PathOptions { samples: 41, ..PathOptions::default() };
    let path = build_path(&params, &grid, gn, &popts).unwrap();
    let nopts = NewtonOptions { tol: 1e-8, max_iters: 80, ..NewtonOptions::default() };

    for (t, st) in path.t.iter().zip(&path.states) {
        if !(0.2..=0.55).contains(t) {
            continue;
        }
        let j0 = energy_j(&params, st).unwrap();
        print!("t {t:.3}  J0 {j0:+.3}  kin2 {:.1}  -> ", st.u2.grad_norm_sq());
        match newton_refine(&params, st, &nopts) {
            Ok(sol) => println!(
                "conv {} iters {} res {:.1e} J {:+.4} l1 {:+.3} l2 {:+.3} kin2 {:.2} Q {:+.1e}",
                sol.converged, sol.iterations, sol.residual_norm, sol.j_value,
                sol.lambda1, sol.lambda2, sol.state.u2.grad_norm_sq(), sol.q_value
            ),
            Err(e) => println!("error: {e}"),
        }
    }
}
