//! Single-component ground states and the closed scaling family they
//! generate.
//!
//! `solve_unit_ground` computes the positive decreasing solution of
//!
//! ```text
//!   -w'' - (N-1)/r w' + w = μ w^(p-1),   w'(0) = 0,  w(∞) = 0,
//! ```
//!
//! by bisection on the shooting parameter w(0). Overshoots cross zero,
//! undershoots turn back upward; both sets are open, so bisection closes
//! in on the separatrix. The profile with any other multiplier λ < 0 is
//! the exact rescaling
//!
//! ```text
//!   u(x) = λ^(1/(p-2)) w(√λ x),   λ = |multiplier|,
//! ```
//!
//! which trades mass against λ. `rescale_to_mass` inverts that relation
//! for a prescribed mass and `level_curve` evaluates the resulting energy
//! m(a) without further solves; away from the mass-critical exponent
//! p = 2 + 4/N the map a ↦ λ(a) is one-to-one.

use crate::error::{Error, Result};
use crate::grid::{RadialField, RadialGrid};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Profile values below `TAIL_EPS`·w(0) are replaced by the analytic decay
/// w(r) ≈ w(r₀)(r₀/r)^((N-1)/2) e^(-(r-r₀)); the raw trajectory drifts off
/// the separatrix at that depth and would blow up exponentially.
const TAIL_EPS: f64 = 1e-6;

const BISECT_REL: f64 = 1e-15;
const MAX_DOUBLINGS: u32 = 60;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScalarProblem {
    pub dim: u32,
    /// Power of the nonlinearity, 2 < p < 2N/(N-2).
    pub p: f64,
    /// Coefficient μ > 0.
    pub mu: f64,
}

impl ScalarProblem {
    pub fn new(dim: u32, p: f64, mu: f64) -> Result<Self> {
        if dim < 1 {
            return Err(Error::InvalidParam("dimension must be at least 1".into()));
        }
        if !(p.is_finite() && p > 2.0) {
            return Err(Error::InvalidParam(format!("exponent p = {p} must exceed 2")));
        }
        if dim >= 3 {
            let sobolev = 2.0 * dim as f64 / (dim as f64 - 2.0);
            if p >= sobolev {
                return Err(Error::InvalidParam(format!(
                    "p = {p} at or above the Sobolev exponent {sobolev}"
                )));
            }
        }
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::InvalidParam(format!("mu = {mu} must be positive")));
        }
        Ok(ScalarProblem { dim, p, mu })
    }

    /// Constant solution of w = μ w^(p-1); ground states start above it.
    fn equilibrium(&self) -> f64 {
        self.mu.powf(-1.0 / (self.p - 2.0))
    }

    /// Odd extension μ|w|^(p-2)w, finite for all w when p > 2.
    fn forcing(&self, w: f64) -> f64 {
        self.mu * w.abs().powf(self.p - 2.0) * w
    }
}

/// Unit-multiplier ground state together with its cached norms.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub problem: ScalarProblem,
    pub profile: RadialField,
    /// w(0), the shooting parameter at the separatrix.
    pub alpha: f64,
    /// ∫ w² dx.
    pub mass: f64,
    /// ∫ |∇w|² dx.
    pub kinetic: f64,
    /// ∫ |w|^p dx.
    pub potential: f64,
}

impl GroundState {
    /// ½∫|∇w|² - (μ/p)∫|w|^p.
    pub fn energy(&self) -> f64 {
        0.5 * self.kinetic - self.problem.mu / self.problem.p * self.potential
    }

    /// Relative defects of the two integral identities every true ground
    /// state satisfies: ∫|∇w|² + ∫w² = μ∫|w|^p and
    /// ∫|∇w|² = N(p-2)/(2p) μ∫|w|^p. Both are emergent, not enforced, so
    /// they measure solver quality.
    pub fn identity_defects(&self) -> (f64, f64) {
        let scale = self.problem.mu * self.potential;
        let nehari = (self.kinetic + self.mass - scale) / scale;
        let nd = self.dim_f();
        let virial = (self.kinetic - nd * (self.problem.p - 2.0) / (2.0 * self.problem.p) * scale)
            / scale;
        (nehari.abs(), virial.abs())
    }

    fn dim_f(&self) -> f64 {
        self.problem.dim as f64
    }

    /// λ(a) in the one-parameter family with mass a. Positive; the PDE
    /// multiplier is its negative.
    pub fn lambda_for_mass(&self, a: f64) -> Result<f64> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidParam(format!("mass a = {a} must be positive")));
        }
        let nd = self.dim_f();
        let p = self.problem.p;
        let denom = 4.0 - nd * (p - 2.0);
        if denom.abs() < 1e-12 {
            return Err(Error::RegimeMismatch {
                op: "mass rescaling",
                required: "p away from 2 + 4/N",
                got: format!("p = {p} at the mass-critical exponent"),
            });
        }
        Ok((a / self.mass).powf(2.0 * (p - 2.0) / denom))
    }

    /// Energy of the family member with mass a, by pure scaling.
    pub fn energy_at_mass(&self, a: f64) -> Result<f64> {
        let lambda = self.lambda_for_mass(a)?;
        let p = self.problem.p;
        Ok(lambda.powf(p / (p - 2.0) - self.dim_f() / 2.0) * self.energy())
    }
}

enum Shot {
    /// w crossed zero: w(0) too large.
    Over,
    /// w turned back upward (or never fell): w(0) too small.
    Under,
}

/// One RK4 pass across the grid with two substeps per cell. Returns the
/// node values, node derivatives, and the index of the first node at or
/// beyond an event (zero crossing or upward turn), if any fired.
fn shoot_once(
    prob: &ScalarProblem,
    grid: &RadialGrid,
    alpha: f64,
) -> (Vec<f64>, Vec<f64>, Option<usize>) {
    let n = grid.len();
    let h = grid.step();
    let nd = prob.dim as f64;
    let rhs = |r: f64, w: f64, v: f64| -> (f64, f64) {
        let acc = w - prob.forcing(w);
        if r == 0.0 {
            (v, acc / nd)
        } else {
            (v, acc - (nd - 1.0) / r * v)
        }
    };

    let mut w = vec![0.0; n];
    let mut v = vec![0.0; n];
    w[0] = alpha;
    let (mut cw, mut cv) = (alpha, 0.0);
    let dt = 0.5 * h;
    for i in 0..n - 1 {
        let mut event = false;
        for sub in 0..2 {
            let r = i as f64 * h + sub as f64 * dt;
            let (k1w, k1v) = rhs(r, cw, cv);
            let (k2w, k2v) = rhs(r + 0.5 * dt, cw + 0.5 * dt * k1w, cv + 0.5 * dt * k1v);
            let (k3w, k3v) = rhs(r + 0.5 * dt, cw + 0.5 * dt * k2w, cv + 0.5 * dt * k2v);
            let (k4w, k4v) = rhs(r + dt, cw + dt * k3w, cv + dt * k3v);
            cw += dt / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
            cv += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            if !(cw.is_finite() && cv.is_finite()) || cw <= 0.0 || cv > 0.0 {
                event = true;
                break;
            }
        }
        w[i + 1] = cw;
        v[i + 1] = cv;
        if event {
            return (w, v, Some(i + 1));
        }
    }
    (w, v, None)
}

fn classify(prob: &ScalarProblem, grid: &RadialGrid, alpha: f64) -> Shot {
    let (w, _, event) = shoot_once(prob, grid, alpha);
    match event {
        Some(i) if w[i] <= 0.0 || !w[i].is_finite() => Shot::Over,
        Some(_) => Shot::Under,
        // No event inside the domain: the trajectory is still positive and
        // falling, which a too-small w(0) produces for every resolvable
        // offset once r_max is a few tens of decay lengths.
        None => Shot::Under,
    }
}

/// Ground state of -w'' - (N-1)/r w' + w = μw^(p-1) on the given grid.
///
/// The grid should extend a few tens of decay lengths (r_max around 30
/// to 40); the profile decays like e^(-r), so a short domain starves the
/// bisection of usable events.
pub fn solve_unit_ground(prob: ScalarProblem, grid: Arc<RadialGrid>) -> Result<GroundState> {
    let eq = prob.equilibrium();
    let mut lo = eq;
    let mut hi = 2.0 * eq;
    let mut doublings = 0;
    loop {
        match classify(&prob, &grid, hi) {
            Shot::Over => break,
            Shot::Under => {
                lo = hi;
                hi *= 2.0;
                doublings += 1;
                if doublings > MAX_DOUBLINGS {
                    return Err(Error::NoBracket { max: hi });
                }
            }
        }
    }

    let mut iters = 0;
    while hi - lo > BISECT_REL * hi && iters < 200 {
        let mid = 0.5 * (lo + hi);
        match classify(&prob, &grid, mid) {
            Shot::Over => hi = mid,
            Shot::Under => lo = mid,
        }
        iters += 1;
    }

    let alpha = 0.5 * (lo + hi);
    let (mut w, v, event) = shoot_once(&prob, &grid, alpha);
    let n = grid.len();

    // splice in the analytic tail from the first node that is either deep
    // enough or past an event
    let mut anchor: Option<usize> = None;
    for i in 1..n {
        let deep = w[i] <= TAIL_EPS * alpha;
        let bad = event == Some(i) || w[i] <= 0.0 || v[i] > 0.0;
        if deep || bad {
            anchor = Some(if w[i] > 0.0 && !bad { i } else { i - 1 });
            break;
        }
    }
    if let Some(j) = anchor {
        if w[j] <= 0.0 {
            return Err(Error::Resolution(format!(
                "shooting trajectory lost positivity at node {j}; refine the grid"
            )));
        }
        let rj = grid.nodes()[j];
        let decay_pow = (prob.dim as f64 - 1.0) / 2.0;
        for i in j + 1..n {
            let r = grid.nodes()[i];
            w[i] = w[j] * (rj / r).powf(decay_pow) * (rj - r).exp();
        }
    }

    let profile = RadialField::new(grid, w)?;
    let mass = profile.mass();
    let kinetic = profile.grad_norm_sq();
    let potential = profile.lp_norm_pow(prob.p)?;
    Ok(GroundState {
        problem: prob,
        profile,
        alpha,
        mass,
        kinetic,
        potential,
    })
}

/// A ground-state family member pinned to a prescribed mass.
#[derive(Debug, Clone)]
pub struct Rescaled {
    pub field: RadialField,
    /// Multiplier λ in -Δu = λu + μ|u|^(p-2)u; negative.
    pub multiplier: f64,
    /// Energy ½∫|∇u|² - (μ/p)∫|u|^p predicted by scaling.
    pub energy: f64,
}

/// Realize the family member with mass `a` on `target`, interpolating the
/// unit profile. The target grid only needs to cover the rescaled support:
/// width scales like λ(a)^(-1/2).
pub fn rescale_to_mass(gs: &GroundState, a: f64, target: Arc<RadialGrid>) -> Result<Rescaled> {
    if target.dim() != gs.problem.dim {
        return Err(Error::GridMismatch);
    }
    let lambda = gs.lambda_for_mass(a)?;
    let energy = gs.energy_at_mass(a)?;
    let amp = lambda.powf(1.0 / (gs.problem.p - 2.0));
    let scale = lambda.sqrt();
    let (src, src_grid) = (gs.profile.values(), gs.profile.grid());
    let interp = crate::interp::CubicInterp::new(src_grid.step(), src);
    let vals: Vec<f64> = target.nodes().iter().map(|&r| amp * interp.eval(scale * r)).collect();
    let field = RadialField::new(target, vals)?;
    Ok(Rescaled {
        field,
        multiplier: -lambda,
        energy,
    })
}

/// One point of the mass-energy curve a ↦ (λ(a), m(a)).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LevelPoint {
    pub mass: f64,
    /// PDE multiplier, negative.
    pub multiplier: f64,
    pub energy: f64,
}

/// Evaluate the closed-form level curve at the given masses.
pub fn level_curve(gs: &GroundState, masses: &[f64]) -> Result<Vec<LevelPoint>> {
    masses
        .iter()
        .map(|&a| {
            Ok(LevelPoint {
                mass: a,
                multiplier: -gs.lambda_for_mass(a)?,
                energy: gs.energy_at_mass(a)?,
            })
        })
        .collect()
}
