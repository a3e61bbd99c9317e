//! The constrained energy of the two-component system and the functionals
//! built from it.
//!
//! For a state (u₁, u₂) the energy is
//!
//! ```text
//!   J = ½(|∇u₁|₂² + |∇u₂|₂²) - (μ₁/p₁)|u₁|_{p₁}^{p₁} - (μ₂/p₂)|u₂|_{p₂}^{p₂}
//!       - β ∫ |u₁|^{r₁} |u₂|^{r₂}
//! ```
//!
//! restricted to the product of mass spheres |uᵢ|₂² = aᵢ. The dilation
//! (s★u)(x) = e^{sN/2}u(e^s x) preserves the constraint and turns every
//! norm into an explicit exponential in s, so the fiber map s ↦ J(s★u₁,
//! s★u₂) and its derivative Q come out in closed form from cached norms;
//! Q = 0 is the natural constraint every solution must satisfy.

use crate::error::{Error, Result};
use crate::grid::{mixed_term, RadialField, RadialGrid};
use crate::scalar::{solve_unit_ground, ScalarProblem};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub dim: u32,
    pub p1: f64,
    pub p2: f64,
    pub r1: f64,
    pub r2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub beta: f64,
    pub a1: f64,
    pub a2: f64,
}

impl SystemParams {
    /// 2N/(N-2) for N ≥ 3, +∞ below.
    pub fn sobolev(&self) -> f64 {
        if self.dim <= 2 {
            f64::INFINITY
        } else {
            2.0 * self.dim as f64 / (self.dim as f64 - 2.0)
        }
    }

    /// The mass-critical exponent 2 + 4/N.
    pub fn mass_critical(&self) -> f64 {
        2.0 + 4.0 / self.dim as f64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParam(msg));
        if self.dim < 1 {
            return bad("dimension must be at least 1".into());
        }
        let sob = self.sobolev();
        for (name, p) in [("p1", self.p1), ("p2", self.p2)] {
            if !(p.is_finite() && p > 2.0 && p < sob) {
                return bad(format!("{name} = {p} outside (2, {sob})"));
            }
        }
        for (name, r) in [("r1", self.r1), ("r2", self.r2)] {
            if !(r.is_finite() && r > 0.0) {
                return bad(format!("{name} = {r} must be positive"));
            }
        }
        let rsum = self.r1 + self.r2;
        if !(rsum >= 2.0 && rsum < sob) {
            return bad(format!("r1 + r2 = {rsum} outside [2, {sob})"));
        }
        for (name, mu) in [("mu1", self.mu1), ("mu2", self.mu2)] {
            if !(mu.is_finite() && mu > 0.0) {
                return bad(format!("{name} = {mu} must be positive"));
            }
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return bad(format!("beta = {} must be nonnegative", self.beta));
        }
        for (name, a) in [("a1", self.a1), ("a2", self.a2)] {
            if !(a.is_finite() && a > 0.0) {
                return bad(format!("{name} = {a} must be positive"));
            }
        }
        Ok(())
    }

    /// Component labels swapped; J and Q are invariant under applying this
    /// together with swapping the state.
    pub fn swapped(&self) -> SystemParams {
        SystemParams {
            dim: self.dim,
            p1: self.p2,
            p2: self.p1,
            r1: self.r2,
            r2: self.r1,
            mu1: self.mu2,
            mu2: self.mu1,
            beta: self.beta,
            a1: self.a2,
            a2: self.a1,
        }
    }

    pub fn scalar1(&self) -> Result<ScalarProblem> {
        ScalarProblem::new(self.dim, self.p1, self.mu1)
    }

    pub fn scalar2(&self) -> Result<ScalarProblem> {
        ScalarProblem::new(self.dim, self.p2, self.mu2)
    }
}

/// Hypothesis patterns the solvers distinguish.
///
/// `SubcriticalMin`: every growth exponent below 2 + 4/N, so J is bounded
/// below on the constraint and global minimization applies (for N ≥ 5 this
/// tag also covers exponents between 2 + 2/(N-2) and 2 + 4/N, where
/// boundedness is expected but unproven; results there are experiments).
/// `SubcriticalMinHighDim`: the N ≥ 5 variant with pᵢ < 2 + 2/(N-2).
/// `Mixed`: p₁ subcritical, p₂ and r₁+r₂ supercritical with r₂ > 2
/// (r₂ > 4 when N = 1); mountain-pass geometry in the second component.
/// `Supercritical`: p₁, p₂, r₁+r₂ all above 2 + 4/N.
/// `CriticalUnsupported`: an exponent sits at 2 + 4/N (no scaling
/// direction) or the pattern matches no supported theorem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    SubcriticalMin,
    SubcriticalMinHighDim,
    Mixed,
    Supercritical,
    CriticalUnsupported,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Regime::SubcriticalMin => "subcritical-min",
            Regime::SubcriticalMinHighDim => "subcritical-min-highdim",
            Regime::Mixed => "mixed",
            Regime::Supercritical => "supercritical",
            Regime::CriticalUnsupported => "critical-unsupported",
        };
        f.write_str(s)
    }
}

const CRITICAL_EPS: f64 = 1e-12;

pub fn classify_regime(params: &SystemParams) -> Regime {
    let crit = params.mass_critical();
    let rsum = params.r1 + params.r2;
    for x in [params.p1, params.p2, rsum] {
        if (x - crit).abs() < CRITICAL_EPS {
            return Regime::CriticalUnsupported;
        }
    }
    let all_below = params.p1 < crit && params.p2 < crit && rsum < crit;
    let all_above = params.p1 > crit && params.p2 > crit && rsum > crit;
    if all_below {
        if params.dim >= 5 {
            let hd = 2.0 + 2.0 / (params.dim as f64 - 2.0);
            if params.p1 < hd && params.p2 < hd {
                return Regime::SubcriticalMinHighDim;
            }
        }
        return Regime::SubcriticalMin;
    }
    if all_above {
        return Regime::Supercritical;
    }
    let r2_floor = if params.dim == 1 { 4.0 } else { 2.0 };
    if params.p1 < crit && params.p2 > crit && rsum > crit && params.r2 > r2_floor {
        return Regime::Mixed;
    }
    Regime::CriticalUnsupported
}

/// A pair of radial profiles on one grid.
#[derive(Debug, Clone)]
pub struct State {
    pub u1: RadialField,
    pub u2: RadialField,
}

impl State {
    pub fn new(u1: RadialField, u2: RadialField) -> Result<Self> {
        if !u1.same_grid(&u2) {
            return Err(Error::GridMismatch);
        }
        Ok(State { u1, u2 })
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.u1.grid()
    }

    pub fn masses(&self) -> (f64, f64) {
        (self.u1.mass(), self.u2.mass())
    }

    /// Componentwise dilation (s★u₁, s★u₂) by resampling.
    pub fn dilate(&self, s: f64) -> Result<State> {
        State::new(self.u1.dilate(s)?, self.u2.dilate(s)?)
    }
}

/// The integrals J and Q are built from, cached once per state.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StateNorms {
    pub kinetic1: f64,
    pub kinetic2: f64,
    /// |u₁|_{p₁}^{p₁}
    pub power1: f64,
    /// |u₂|_{p₂}^{p₂}
    pub power2: f64,
    /// ∫ |u₁|^{r₁} |u₂|^{r₂}
    pub mixed: f64,
    pub mass1: f64,
    pub mass2: f64,
}

impl StateNorms {
    pub fn of(params: &SystemParams, state: &State) -> Result<StateNorms> {
        Ok(StateNorms {
            kinetic1: state.u1.grad_norm_sq(),
            kinetic2: state.u2.grad_norm_sq(),
            power1: state.u1.lp_norm_pow(params.p1)?,
            power2: state.u2.lp_norm_pow(params.p2)?,
            mixed: mixed_term(&state.u1, &state.u2, params.r1, params.r2)?,
            mass1: state.u1.mass(),
            mass2: state.u2.mass(),
        })
    }
}

pub fn energy_from_norms(params: &SystemParams, n: &StateNorms) -> f64 {
    0.5 * (n.kinetic1 + n.kinetic2)
        - params.mu1 / params.p1 * n.power1
        - params.mu2 / params.p2 * n.power2
        - params.beta * n.mixed
}

pub fn pohozaev_from_norms(params: &SystemParams, n: &StateNorms) -> f64 {
    let nd = params.dim as f64;
    n.kinetic1 + n.kinetic2
        - params.mu1 / params.p1 * nd * (params.p1 / 2.0 - 1.0) * n.power1
        - params.mu2 / params.p2 * nd * (params.p2 / 2.0 - 1.0) * n.power2
        - nd * params.beta * ((params.r1 + params.r2) / 2.0 - 1.0) * n.mixed
}

pub fn energy_j(params: &SystemParams, state: &State) -> Result<f64> {
    Ok(energy_from_norms(params, &StateNorms::of(params, state)?))
}

/// Derivative of the fiber map s ↦ J(s★state) at s = 0; vanishes at every
/// solution.
pub fn pohozaev_q(params: &SystemParams, state: &State) -> Result<f64> {
    Ok(pohozaev_from_norms(params, &StateNorms::of(params, state)?))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FiberPoint {
    pub s: f64,
    pub j: f64,
    pub q: f64,
}

/// J and Q along the dilation fiber, evaluated exactly from cached norms:
/// kinetic parts scale like e^{2s}, each power term like
/// e^{sN(p-2)/2}, the coupling like e^{sN(r₁+r₂-2)/2}.
pub fn fiber_point(params: &SystemParams, n: &StateNorms, s: f64) -> FiberPoint {
    let nd = params.dim as f64;
    let kin = (2.0 * s).exp() * (n.kinetic1 + n.kinetic2);
    let th1 = nd * (params.p1 - 2.0) / 2.0;
    let th2 = nd * (params.p2 - 2.0) / 2.0;
    let thm = nd * (params.r1 + params.r2 - 2.0) / 2.0;
    let t1 = params.mu1 / params.p1 * (s * th1).exp() * n.power1;
    let t2 = params.mu2 / params.p2 * (s * th2).exp() * n.power2;
    let tm = params.beta * (s * thm).exp() * n.mixed;
    FiberPoint {
        s,
        j: 0.5 * kin - t1 - t2 - tm,
        q: kin - th1 * t1 - th2 * t2 - thm * tm,
    }
}

pub fn fiber_profile(
    params: &SystemParams,
    state: &State,
    s_values: &[f64],
) -> Result<Vec<FiberPoint>> {
    let norms = StateNorms::of(params, state)?;
    Ok(s_values.iter().map(|&s| fiber_point(params, &norms, s)).collect())
}

/// |x|^(e-1) x, continuous at 0 for e > 0.
pub(crate) fn signed_pow(x: f64, e: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.abs().powf(e - 1.0) * x
    }
}

/// Multipliers extracted by pairing each equation with its own component.
///
/// The kinetic part is the discrete pairing ⟨-Δuᵢ, uᵢ⟩ in the residual
/// weights rather than |∇uᵢ|₂² (the two agree to discretization error):
/// with this choice the PDE residual of a converged state is orthogonal
/// to the state itself, so multiplier extraction never reintroduces a
/// residual component along uᵢ.
pub fn lagrange_multipliers(params: &SystemParams, state: &State) -> Result<(f64, f64)> {
    let w = state.grid().residual_weights();
    let (u1, u2) = (state.u1.values(), state.u2.values());
    let lap1 = state.u1.apply_laplacian();
    let lap2 = state.u2.apply_laplacian();
    let mut num1 = 0.0;
    let mut num2 = 0.0;
    let mut den1 = 0.0;
    let mut den2 = 0.0;
    for i in 0..u1.len() {
        let (a, b) = (u1[i], u2[i]);
        let coup = a.abs().powf(params.r1) * b.abs().powf(params.r2);
        let f1 = params.mu1 * a.abs().powf(params.p1 - 2.0) * a * a + params.r1 * params.beta * coup;
        let f2 = params.mu2 * b.abs().powf(params.p2 - 2.0) * b * b + params.r2 * params.beta * coup;
        num1 += w[i] * (lap1.values()[i] * a - f1);
        num2 += w[i] * (lap2.values()[i] * b - f2);
        den1 += w[i] * a * a;
        den2 += w[i] * b * b;
    }
    if den1 <= 0.0 || den2 <= 0.0 {
        return Err(Error::ZeroMass);
    }
    Ok((num1 / den1, num2 / den2))
}

/// Nodewise residuals of the two coupled equations at the given
/// multipliers:
///
/// ```text
///   R₁ = -Δu₁ - λ₁u₁ - μ₁|u₁|^{p₁-2}u₁ - r₁β|u₁|^{r₁-2}|u₂|^{r₂}u₁
/// ```
///
/// and symmetrically for R₂. Callers measure them with
/// `RadialGrid::residual_norm`.
pub fn gradient_residual(
    params: &SystemParams,
    state: &State,
    lambda1: f64,
    lambda2: f64,
) -> Result<(RadialField, RadialField)> {
    let (u1, u2) = (state.u1.values(), state.u2.values());
    let lap1 = state.u1.apply_laplacian();
    let lap2 = state.u2.apply_laplacian();
    let n = u1.len();
    let mut r1 = vec![0.0; n];
    let mut r2 = vec![0.0; n];
    for i in 0..n {
        let (a, b) = (u1[i], u2[i]);
        r1[i] = lap1.values()[i]
            - lambda1 * a
            - params.mu1 * signed_pow(a, params.p1 - 1.0)
            - params.r1 * params.beta * signed_pow(a, params.r1 - 1.0) * b.abs().powf(params.r2);
        r2[i] = lap2.values()[i]
            - lambda2 * b
            - params.mu2 * signed_pow(b, params.p2 - 1.0)
            - params.r2 * params.beta * signed_pow(b, params.r2 - 1.0) * a.abs().powf(params.r1);
    }
    Ok((
        RadialField::new(Arc::clone(state.grid()), r1)?,
        RadialField::new(Arc::clone(state.grid()), r2)?,
    ))
}

/// Sharp constant C(N,p) in |u|_p ≤ C |∇u|₂^α |u|₂^(1-α), α = N(p-2)/(2p),
/// computed from the scalar unit ground state (the optimizer of the
/// quotient).
pub fn gn_constant(dim: u32, p: f64, grid: Arc<RadialGrid>) -> Result<f64> {
    if (p - 2.0).abs() < 1e-14 {
        return Ok(1.0);
    }
    let gs = solve_unit_ground(ScalarProblem::new(dim, p, 1.0)?, grid)?;
    let alpha = dim as f64 * (p - 2.0) / (2.0 * p);
    Ok(gs.potential.powf(1.0 / p)
        / (gs.kinetic.powf(alpha / 2.0) * gs.mass.powf((1.0 - alpha) / 2.0)))
}

/// The kinetic threshold c(u₁) separating the low set A = {|∇u₂|₂² ≤ c}
/// from the barrier sphere B = {|∇u₂|₂² = 2c} in the mixed regime, with
/// all constants prepared once.
///
/// On B the two negative terms of J(u₁,·) are each at most c/8, so
/// J(u₁,u₂) ≥ J(u₁,0) + 3c/4 there while J ≤ J(u₁,0) + c/2 on A; c is
/// the largest value the two bounding branches allow:
///
/// ```text
///   c(u₁) = min{ (8K₁)^(-4/(N(p₂-2)-4)),
///                (8K₂)^(-2/(γ-2)) · |u₁|_{r₁q}^(-2r₁/(γ-2)) }
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Threshold {
    pub q: f64,
    pub q_conj: f64,
    pub gamma: f64,
    pub k1: f64,
    pub k2: f64,
    /// Norm exponent r₁q of u₁ entering the second branch.
    pub r1q: f64,
    /// The u₁-independent first branch (8K₁)^(-4/(N(p₂-2)-4)).
    pub power_branch: f64,
    dim: u32,
    r1: f64,
}

impl Threshold {
    /// Choose q, compute γ and the two Gagliardo-Nirenberg constants.
    /// Requires the mixed regime; `gn_grid` hosts the two unit ground
    /// states behind the sharp constants.
    pub fn prepare(params: &SystemParams, gn_grid: Arc<RadialGrid>) -> Result<Threshold> {
        params.validate()?;
        let regime = classify_regime(params);
        if regime != Regime::Mixed {
            return Err(Error::RegimeMismatch {
                op: "kinetic threshold",
                required: "mixed",
                got: regime.to_string(),
            });
        }
        let nd = params.dim as f64;
        let sob = params.sobolev();
        // admissible q: max{2/r₁, 2*/(2*-r₂)} ≤ q ≤ min{2*/r₁, 2/(2-r₂)⁺},
        // sharpened by q < 2N/(2N-r₂N+4) so that γ > 2
        let lo = (2.0 / params.r1).max(if sob.is_finite() { sob / (sob - params.r2) } else { 1.0 });
        let mut hi = if sob.is_finite() { sob / params.r1 } else { f64::INFINITY };
        if params.r2 < 2.0 {
            hi = hi.min(2.0 / (2.0 - params.r2));
        }
        let cap_den = nd * (2.0 - params.r2) + 4.0;
        if cap_den > 0.0 {
            hi = hi.min(2.0 * nd / cap_den);
        }
        if !(lo < hi) {
            return Err(Error::RegimeMismatch {
                op: "kinetic threshold",
                required: "nonempty admissible q interval",
                got: format!("[{lo}, {hi}] empty at r1={}, r2={}", params.r1, params.r2),
            });
        }
        let q = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * lo };
        let q_conj = q / (q - 1.0);
        let gamma = nd * (params.r2 * q_conj - 2.0) / (2.0 * q_conj);
        if gamma <= 2.0 {
            return Err(Error::Geometry(format!(
                "gamma = {gamma} not above 2 for q = {q}"
            )));
        }
        let c_p2 = gn_constant(params.dim, params.p2, Arc::clone(&gn_grid))?;
        let c_mix = gn_constant(params.dim, params.r2 * q_conj, gn_grid)?;
        let k1 = params.mu2 / params.p2
            * c_p2.powf(params.p2)
            * params.a2.powf((params.p2 - nd * (params.p2 - 2.0) / 2.0) / 2.0)
            * 2.0_f64.powf(nd * (params.p2 - 2.0) / 4.0);
        let k2 = params.beta
            * c_mix.powf(params.r2)
            * 2.0_f64.powf(gamma / 2.0)
            * params.a2.powf((params.r2 - gamma) / 2.0);
        let power_branch = (8.0 * k1).powf(-4.0 / (nd * (params.p2 - 2.0) - 4.0));
        Ok(Threshold {
            q,
            q_conj,
            gamma,
            k1,
            k2,
            r1q: params.r1 * q,
            power_branch,
            dim: params.dim,
            r1: params.r1,
        })
    }

    /// c(u₁) for a concrete first component.
    pub fn value(&self, u1: &RadialField) -> Result<f64> {
        if u1.grid().dim() != self.dim {
            return Err(Error::GridMismatch);
        }
        let norm = u1.lp_norm_pow(self.r1q)?.powf(1.0 / self.r1q);
        let mixed_branch = if self.k2 == 0.0 {
            f64::INFINITY
        } else {
            (8.0 * self.k2).powf(-2.0 / (self.gamma - 2.0))
                * norm.powf(-2.0 * self.r1 / (self.gamma - 2.0))
        };
        let c = self.power_branch.min(mixed_branch);
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::Geometry(format!("threshold c = {c} at |u1|_{{r1 q}} = {norm}")));
        }
        Ok(c)
    }
}

/// One-call form of the threshold for a single u₁; prepares the constants
/// on a default grid each time, so batch callers should hold a
/// [`Threshold`] instead.
pub fn threshold_c(params: &SystemParams, u1: &RadialField) -> Result<f64> {
    let gn_grid = RadialGrid::uniform(params.dim, 40.0, 6144)?;
    Threshold::prepare(params, gn_grid)?.value(u1)
}
