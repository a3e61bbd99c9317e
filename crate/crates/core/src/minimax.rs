//! Mountain-pass machinery: dilation paths, the barrier bracket, and a
//! constrained Newton refinement of path maxima.
//!
//! The path class fixes u₁ at the scalar minimizer u̲ of J(·,0) on S(a₁)
//! and moves u₂ through dilations of the scalar critical point ū on
//! S(a₂). Such a path starts inside the low-kinetic set A = {|∇u₂|₂² ≤
//! c(u̲)}, ends far above the barrier sphere B = {|∇u₂|₂² = 2c(u̲)}, and
//! its maximum bounds the minimax level γ from above while sampled J
//! values on B bound it from below. The maximum then seeds a damped
//! Newton solve of the full stationarity system (two equations plus two
//! mass constraints) whose success is verified a posteriori: residual,
//! Q, multiplier signs, positivity.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::banded::{BandLu, BandMatrix};
use crate::energy::{
    classify_regime, energy_j, gradient_residual, lagrange_multipliers, pohozaev_q, signed_pow,
    Regime, State, SystemParams, Threshold,
};
use crate::error::{Error, Result};
use crate::flow::{damped_steps, ground_pair, project_sphere, reflected_steps, Solution};
use crate::grid::{RadialField, RadialGrid};
use crate::scalar::{solve_unit_ground, ScalarProblem};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathOptions {
    /// Path samples; odd counts place t = 1/2 exactly on a node.
    pub samples: usize,
    /// Initial dilation half-range, escalated until the endpoint
    /// conditions hold.
    pub s0: f64,
    pub s_max: f64,
    /// Relative kinetic mismatch tolerated when placing a sample exactly
    /// on the barrier sphere.
    pub b_match_tol: f64,
    /// Slack factor (relative to 1 + |m₁+m₂|) in the level bracket
    /// checks of `gamma_estimate`.
    pub bracket_slack: f64,
}

impl Default for PathOptions {
    fn default() -> Self {
        PathOptions {
            samples: 41,
            s0: 1.0,
            s_max: 12.0,
            b_match_tol: 1e-2,
            bracket_slack: 1e-3,
        }
    }
}

/// Endpoint evidence gathered while the path was built. Certification
/// runs in one of two modes depending on where the barrier sits
/// relative to the grid. When c(u̲) clears the domain's ground-mode
/// kinetic floor, the barrier sphere contains grid states and the
/// class conditions are checked directly: left endpoint inside the low
/// set, right endpoint past the barrier, both endpoint levels below
/// every sampled barrier level. When c(u̲) falls below the floor, no
/// grid field of mass a₂ can reach the low set or the sphere (the
/// barrier lives at spreads the domain cannot hold), so the certificate
/// falls back to the structure those conditions exist to produce: the
/// left flank climbs back up to the scalar anchor level J(u̲, 0), which
/// is where the analytic barrier floor m₁ + 3c/4 sits for microscopic
/// c, while the right flank has entered the supercritical collapse
/// past the unscaled midpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathCertificate {
    /// Final dilation half-ranges of the two flanks; they escalate
    /// independently so the concentrating side is not driven below the
    /// grid resolution while the spreading side still climbs.
    pub s_left: f64,
    pub s_right: f64,
    /// Barrier threshold c(u̲) of the fixed first component.
    pub c_value: f64,
    pub left_kinetic: f64,
    pub right_kinetic: f64,
    /// Whether |∇u₂|₂² ≤ c(u̲) held at the left endpoint.
    pub left_in_low_set: bool,
    /// Least kinetic energy any mass-a₂ field on this grid can have
    /// (first Dirichlet mode of the ball, lower bound).
    pub kinetic_floor: f64,
    /// c(u̲) ≥ 4 × the kinetic floor, i.e. the low set and barrier
    /// sphere are populated by grid states and were checked directly.
    pub barrier_representable: bool,
    /// Scalar level J(u̲, 0) of the frozen first component.
    pub j_anchor_scalar: f64,
    pub j_left: f64,
    pub j_right: f64,
    /// Largest J over the path samples at the certified s.
    pub j_max_sampled: f64,
    /// Minimum sampled J over states placed on the barrier sphere;
    /// +∞ when no sample could be placed there.
    pub inf_b_estimate: f64,
    pub b_samples: usize,
    pub endpoints_certified: bool,
}

#[derive(Debug)]
struct Generator {
    u1: RadialField,
    u2_base: RadialField,
    /// Dilation half-ranges of the spreading (left) and concentrating
    /// (right) flanks; σ(t) = s_side · (2t − 1) with the side picked by
    /// the sign, so t = 1/2 is the unscaled pair for either value.
    s_left: f64,
    s_right: f64,
}

impl Generator {
    fn sigma(&self, t: f64) -> f64 {
        let scale = if t < 0.5 { self.s_left } else { self.s_right };
        scale * (2.0 * t - 1.0)
    }
}

/// A discretized path t ∈ [0,1] ↦ 𝒮 with its endpoint certificate. Paths
/// from `build_path` also carry their continuous generator so the
/// maximum can be refined between samples.
#[derive(Debug)]
pub struct Path {
    pub t: Vec<f64>,
    pub states: Vec<State>,
    pub certificate: PathCertificate,
    generator: Option<Generator>,
}

fn kinetic_floor(dim: u32, r_max: f64, mass: f64) -> f64 {
    // First radial Dirichlet eigenvalue of the ball is (j/r_max)² with
    // j = π/2, j₀₁, π for N = 1, 2, 3; π is a lower bound for N ≥ 4.
    let j = match dim {
        1 => std::f64::consts::FRAC_PI_2,
        2 => 2.404825557695773,
        _ => std::f64::consts::PI,
    };
    mass * (j / r_max) * (j / r_max)
}

/// Dilate `v` so its kinetic energy lands on `target`, then restore the
/// mass. Returns None when truncation bends the result away from the
/// target by more than `tol` relative.
fn place_on_kinetic(
    v: &RadialField,
    target: f64,
    mass: f64,
    tol: f64,
) -> Result<Option<RadialField>> {
    let g = v.grad_norm_sq();
    if !(g > 0.0) {
        return Ok(None);
    }
    let s = 0.5 * (target / g).ln();
    let placed = project_sphere(&v.dilate(s)?, mass)?;
    let got = placed.grad_norm_sq();
    if (got - target).abs() <= tol * target {
        Ok(Some(placed))
    } else {
        Ok(None)
    }
}

/// Min J over sampled states on the barrier sphere B: u₁ ranges over an
/// ensemble of dilations of u̲, u₂ over profiles dilated to kinetic
/// energy exactly 2c(u₁).
fn sample_inf_b(
    params: &SystemParams,
    thr: &Threshold,
    u_lower: &RadialField,
    u_upper: &RadialField,
    tol: f64,
) -> Result<(f64, usize)> {
    let grid = u_lower.grid();
    let mut anchors = vec![u_lower.clone()];
    for s in [-0.35, 0.35] {
        anchors.push(project_sphere(&u_lower.dilate(s)?, params.a1)?);
    }
    let mut pool = vec![u_upper.clone()];
    for s in [-0.5, 0.5] {
        pool.push(u_upper.dilate(s)?);
    }
    for frac in [0.06, 0.10, 0.16] {
        let sigma = frac * grid.r_max();
        pool.push(RadialField::from_fn(Arc::clone(grid), |r| {
            (-r * r / (2.0 * sigma * sigma)).exp()
        })?);
    }
    let mut best = f64::INFINITY;
    let mut count = 0;
    for anchor in &anchors {
        let target = 2.0 * thr.value(anchor)?;
        for v in &pool {
            if let Some(placed) = place_on_kinetic(v, target, params.a2, tol)? {
                let j = energy_j(params, &State::new(anchor.clone(), placed)?)?;
                if j < best {
                    best = j;
                }
                count += 1;
            }
        }
    }
    Ok((best, count))
}

/// Scalar stationary profiles defining the path: u̲ minimizes J(·,0) on
/// S(a₁) (subcritical branch), ū is the critical point of the p₂ branch
/// on S(a₂).
fn path_anchors(params: &SystemParams, grid: &Arc<RadialGrid>) -> Result<(RadialField, RadialField)> {
    let pair = ground_pair(params, grid)?;
    Ok((
        project_sphere(&pair.u1, params.a1)?,
        project_sphere(&pair.u2, params.a2)?,
    ))
}

/// Build a path h(t) = (u̲, dilate(ū, s(2t−1))) whose endpoints satisfy
/// the barrier-class conditions, escalating s as needed. The returned
/// certificate records every measured quantity; failure to certify
/// within s_max is a geometry error carrying the diagnostics.
pub fn build_path(
    params: &SystemParams,
    grid: &Arc<RadialGrid>,
    gn_grid: Arc<RadialGrid>,
    opts: &PathOptions,
) -> Result<Path> {
    params.validate()?;
    let regime = classify_regime(params);
    if regime != Regime::Mixed {
        return Err(Error::RegimeMismatch {
            op: "build_path",
            required: "mixed",
            got: regime.to_string(),
        });
    }
    if opts.samples < 3 {
        return Err(Error::InvalidParam(format!(
            "path needs at least 3 samples, got {}",
            opts.samples
        )));
    }
    let (u_lower, u_upper) = path_anchors(params, grid)?;
    let thr = Threshold::prepare(params, gn_grid)?;
    let c_value = thr.value(&u_lower)?;
    let floor = kinetic_floor(params.dim, grid.r_max(), params.a2);
    // Below ~the floor the low set and barrier sphere hold no grid
    // state at all; sampling them would only ever come back empty.
    let representable = c_value >= 4.0 * floor;
    let (inf_b, b_samples) = if representable {
        sample_inf_b(params, &thr, &u_lower, &u_upper, opts.b_match_tol)?
    } else {
        (f64::INFINITY, 0)
    };

    let j_anchor =
        0.5 * u_lower.grad_norm_sq() - params.mu1 / params.p1 * u_lower.lp_norm_pow(params.p1)?;

    let mut gen =
        Generator { u1: u_lower, u2_base: u_upper, s_left: opts.s0, s_right: opts.s0 };
    let (certificate, t, states) = loop {
        let mut t = Vec::with_capacity(opts.samples);
        let mut states = Vec::with_capacity(opts.samples);
        let mut js = Vec::with_capacity(opts.samples);
        for k in 0..opts.samples {
            let tk = k as f64 / (opts.samples - 1) as f64;
            let u2 = match gen
                .u2_base
                .dilate(gen.sigma(tk))
                .and_then(|v| project_sphere(&v, params.a2))
            {
                Ok(u2) => u2,
                Err(Error::ZeroMass) => {
                    return Err(Error::Geometry(format!(
                        "path sample at s = ({}, {}), t = {tk} lost all mass under \
                         dilation; the grid cannot hold the required range \
                         (c = {c_value}, kinetic floor {floor})",
                        gen.s_left, gen.s_right
                    )));
                }
                Err(e) => return Err(e),
            };
            let st = State::new(gen.u1.clone(), u2)?;
            js.push(energy_j(params, &st)?);
            t.push(tk);
            states.push(st);
        }
        let last = opts.samples - 1;
        let left_kinetic = states[0].u2.grad_norm_sq();
        let right_kinetic = states[last].u2.grad_norm_sq();
        let (j_left, j_right) = (js[0], js[last]);
        let k_max = js
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap();
        let j_max = js[k_max];
        let gap = 1e-5 * (1.0 + j_max.abs());
        let (left_ok, right_ok) = if representable {
            let interior_max =
                k_max > 0 && k_max < last && j_left <= j_max - gap && j_right <= j_max - gap;
            (
                left_kinetic <= c_value && j_left < inf_b && interior_max,
                right_kinetic > 2.0 * c_value && j_right < inf_b && interior_max,
            )
        } else {
            let j_max_left = js[..=opts.samples / 2].iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            (
                j_max_left >= j_anchor - gap,
                right_kinetic > 2.0 * c_value && j_right <= js[opts.samples / 2] - gap,
            )
        };
        if left_ok && right_ok {
            let certificate = PathCertificate {
                s_left: gen.s_left,
                s_right: gen.s_right,
                c_value,
                left_kinetic,
                right_kinetic,
                left_in_low_set: left_kinetic <= c_value,
                kinetic_floor: floor,
                barrier_representable: representable,
                j_anchor_scalar: j_anchor,
                j_left,
                j_right,
                j_max_sampled: j_max,
                inf_b_estimate: inf_b,
                b_samples,
                endpoints_certified: true,
            };
            break (certificate, t, states);
        }
        if (left_ok || gen.s_left >= opts.s_max) && (right_ok || gen.s_right >= opts.s_max) {
            return Err(Error::Geometry(format!(
                "path not certified at s = ({}, {}): sampled max {j_max} at index \
                 {k_max}/{last}, endpoint levels ({j_left}, {j_right}) vs anchor level \
                 {j_anchor}, left kinetic {left_kinetic} vs c = {c_value}, right kinetic \
                 {right_kinetic} vs barrier {}, inf_B {inf_b} ({b_samples} barrier \
                 samples, grid floor {floor})",
                gen.s_left,
                gen.s_right,
                2.0 * c_value
            )));
        }
        if !left_ok {
            gen.s_left = (gen.s_left * 1.4).min(opts.s_max);
        }
        if !right_ok {
            gen.s_right = (gen.s_right * 1.4).min(opts.s_max);
        }
    };

    Ok(Path { t, states, certificate, generator: Some(gen) })
}

fn generator_state(params: &SystemParams, gen: &Generator, t: f64) -> Result<State> {
    let u2 = project_sphere(&gen.u2_base.dilate(gen.sigma(t))?, params.a2)?;
    State::new(gen.u1.clone(), u2)
}

/// Discrete argmax of J along the path, refined by golden-section search
/// between the neighbouring samples when the path carries its generator.
/// Returns (t★, J(t★), state at t★).
pub fn path_max(params: &SystemParams, path: &Path) -> Result<(f64, f64, State)> {
    if path.states.is_empty() {
        return Err(Error::InvalidParam("empty path".into()));
    }
    let mut js = Vec::with_capacity(path.states.len());
    for st in &path.states {
        js.push(energy_j(params, st)?);
    }
    let k = js
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    let interior = k > 0 && k + 1 < js.len();
    let gen = match (&path.generator, interior) {
        (Some(g), true) => g,
        _ => return Ok((path.t[k], js[k], path.states[k].clone())),
    };

    // Golden-section on [t_{k-1}, t_{k+1}].
    let inv_phi = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (path.t[k - 1], path.t[k + 1]);
    let mut t1 = hi - inv_phi * (hi - lo);
    let mut t2 = lo + inv_phi * (hi - lo);
    let mut f1 = energy_j(params, &generator_state(params, gen, t1)?)?;
    let mut f2 = energy_j(params, &generator_state(params, gen, t2)?)?;
    for _ in 0..40 {
        if f1 < f2 {
            lo = t1;
            t1 = t2;
            f1 = f2;
            t2 = lo + inv_phi * (hi - lo);
            f2 = energy_j(params, &generator_state(params, gen, t2)?)?;
        } else {
            hi = t2;
            t2 = t1;
            f2 = f1;
            t1 = hi - inv_phi * (hi - lo);
            f1 = energy_j(params, &generator_state(params, gen, t1)?)?;
        }
        if hi - lo < 1e-10 {
            break;
        }
    }
    let t_star = 0.5 * (lo + hi);
    let state = generator_state(params, gen, t_star)?;
    let j_star = energy_j(params, &state)?;
    // The refined value can only improve on the sampled one.
    if j_star >= js[k] {
        Ok((t_star, j_star, state))
    } else {
        Ok((path.t[k], js[k], path.states[k].clone()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NewtonOptions {
    /// Target for the weighted-L² norm of the stationarity residual.
    pub tol: f64,
    pub max_iters: usize,
    /// Line-search floor; a step damped below this is a stall.
    pub min_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: 1e-9, max_iters: 40, min_step: 1e-4 }
    }
}

/// Stationarity system in interleaved unknowns (u₁ᵢ, u₂ᵢ alternating)
/// plus the two multipliers: bandwidth-4 core with two dense border
/// rows (mass constraints) and columns (∂/∂λ).
struct KktSystem<'a> {
    params: &'a SystemParams,
    grid: &'a Arc<RadialGrid>,
    /// Positivity scale per component: coupling-derivative terms with
    /// negative exponents are dropped below this to keep the Jacobian
    /// finite at vacuum nodes.
    eps1: f64,
    eps2: f64,
}

struct KktResidual {
    f: Vec<f64>,
    mass1: f64,
    mass2: f64,
}

impl KktResidual {
    /// Weighted norm of the PDE part; the convergence metric.
    fn pde_norm(&self, grid: &RadialGrid) -> f64 {
        let w = grid.residual_weights();
        let mut acc = 0.0;
        for i in 0..grid.len() {
            acc += w[i] * (self.f[2 * i] * self.f[2 * i] + self.f[2 * i + 1] * self.f[2 * i + 1]);
        }
        acc.sqrt()
    }

    /// Full merit norm for the line search.
    fn merit(&self, grid: &RadialGrid) -> f64 {
        (self.pde_norm(grid).powi(2) + self.mass1 * self.mass1 + self.mass2 * self.mass2).sqrt()
    }
}

impl<'a> KktSystem<'a> {
    fn new(params: &'a SystemParams, grid: &'a Arc<RadialGrid>, x: &[f64]) -> Self {
        let n = grid.len();
        let mut peak1 = 0.0_f64;
        let mut peak2 = 0.0_f64;
        for i in 0..n {
            peak1 = peak1.max(x[2 * i].abs());
            peak2 = peak2.max(x[2 * i + 1].abs());
        }
        KktSystem { params, grid, eps1: 1e-14 * peak1, eps2: 1e-14 * peak2 }
    }

    fn residual(&self, x: &[f64], lam: [f64; 2]) -> KktResidual {
        let p = self.params;
        let n = self.grid.len();
        let wq = self.grid.quad_weights();
        let mut f = vec![0.0; 2 * n];
        let mut mass1 = -p.a1;
        let mut mass2 = -p.a2;
        for i in 0..n {
            let (a, b) = (x[2 * i], x[2 * i + 1]);
            mass1 += wq[i] * a * a;
            mass2 += wq[i] * b * b;
            if i == n - 1 {
                f[2 * i] = a;
                f[2 * i + 1] = b;
                continue;
            }
            let (coeffs, start) = self.grid.laplacian_row(i);
            let mut lap1 = 0.0;
            let mut lap2 = 0.0;
            for (k, c) in coeffs.iter().enumerate() {
                let j = start + k;
                if j < n && *c != 0.0 {
                    lap1 += c * x[2 * j];
                    lap2 += c * x[2 * j + 1];
                }
            }
            f[2 * i] = lap1
                - lam[0] * a
                - p.mu1 * signed_pow(a, p.p1 - 1.0)
                - p.r1 * p.beta * signed_pow(a, p.r1 - 1.0) * b.abs().powf(p.r2);
            f[2 * i + 1] = lap2
                - lam[1] * b
                - p.mu2 * signed_pow(b, p.p2 - 1.0)
                - p.r2 * p.beta * signed_pow(b, p.r2 - 1.0) * a.abs().powf(p.r1);
        }
        KktResidual { f, mass1, mass2 }
    }

    /// Band core plus border columns C (∂F/∂λ) and rows D (∂mass/∂u).
    fn jacobian(&self, x: &[f64], lam: [f64; 2]) -> (BandMatrix, [Vec<f64>; 2], [Vec<f64>; 2]) {
        let p = self.params;
        let n = self.grid.len();
        let wq = self.grid.quad_weights();
        let mut band = BandMatrix::new(2 * n, 4, 4);
        let mut c1 = vec![0.0; 2 * n];
        let mut c2 = vec![0.0; 2 * n];
        let mut d1 = vec![0.0; 2 * n];
        let mut d2 = vec![0.0; 2 * n];
        for i in 0..n {
            let (a, b) = (x[2 * i], x[2 * i + 1]);
            d1[2 * i] = 2.0 * wq[i] * a;
            d2[2 * i + 1] = 2.0 * wq[i] * b;
            if i == n - 1 {
                band.add(2 * i, 2 * i, 1.0);
                band.add(2 * i + 1, 2 * i + 1, 1.0);
                continue;
            }
            let (coeffs, start) = self.grid.laplacian_row(i);
            for (k, c) in coeffs.iter().enumerate() {
                let j = start + k;
                if j < n && *c != 0.0 {
                    band.add(2 * i, 2 * j, *c);
                    band.add(2 * i + 1, 2 * j + 1, *c);
                }
            }
            let coup1 = if p.r1 >= 2.0 || a.abs() > self.eps1 {
                p.r1 * (p.r1 - 1.0) * p.beta * a.abs().powf(p.r1 - 2.0) * b.abs().powf(p.r2)
            } else {
                0.0
            };
            let coup2 = if p.r2 >= 2.0 || b.abs() > self.eps2 {
                p.r2 * (p.r2 - 1.0) * p.beta * b.abs().powf(p.r2 - 2.0) * a.abs().powf(p.r1)
            } else {
                0.0
            };
            let cross =
                -p.r1 * p.r2 * p.beta * signed_pow(a, p.r1 - 1.0) * signed_pow(b, p.r2 - 1.0);
            band.add(
                2 * i,
                2 * i,
                -lam[0] - p.mu1 * (p.p1 - 1.0) * a.abs().powf(p.p1 - 2.0) - coup1,
            );
            band.add(2 * i, 2 * i + 1, cross);
            band.add(
                2 * i + 1,
                2 * i + 1,
                -lam[1] - p.mu2 * (p.p2 - 1.0) * b.abs().powf(p.p2 - 2.0) - coup2,
            );
            band.add(2 * i + 1, 2 * i, cross);
            c1[2 * i] = -a;
            c2[2 * i + 1] = -b;
        }
        (band, [c1, c2], [d1, d2])
    }

    /// Residual of the kinetically pinned system: stationarity on
    /// {mass₁ = a₁, mass₂ = a₂, ⟨-Δu₂, u₂⟩ = k}, so the u₂ Laplacian
    /// carries the factor (1 - ν). Returns the raw (-Δu₂) values for
    /// reuse as the ∂/∂ν border column and the constraint gap G - k.
    fn residual_pinned(
        &self,
        x: &[f64],
        lam: [f64; 2],
        nu: f64,
        k: f64,
    ) -> (KktResidual, Vec<f64>, f64) {
        let p = self.params;
        let n = self.grid.len();
        let wq = self.grid.quad_weights();
        let mut f = vec![0.0; 2 * n];
        let mut lap2v = vec![0.0; n];
        let mut mass1 = -p.a1;
        let mut mass2 = -p.a2;
        let mut gap = -k;
        for i in 0..n {
            let (a, b) = (x[2 * i], x[2 * i + 1]);
            mass1 += wq[i] * a * a;
            mass2 += wq[i] * b * b;
            if i == n - 1 {
                f[2 * i] = a;
                f[2 * i + 1] = b;
                continue;
            }
            let (coeffs, start) = self.grid.laplacian_row(i);
            let mut lap1 = 0.0;
            let mut lap2 = 0.0;
            for (kk, c) in coeffs.iter().enumerate() {
                let j = start + kk;
                if j < n && *c != 0.0 {
                    lap1 += c * x[2 * j];
                    lap2 += c * x[2 * j + 1];
                }
            }
            lap2v[i] = lap2;
            gap += wq[i] * b * lap2;
            f[2 * i] = lap1
                - lam[0] * a
                - p.mu1 * signed_pow(a, p.p1 - 1.0)
                - p.r1 * p.beta * signed_pow(a, p.r1 - 1.0) * b.abs().powf(p.r2);
            f[2 * i + 1] = (1.0 - nu) * lap2
                - lam[1] * b
                - p.mu2 * signed_pow(b, p.p2 - 1.0)
                - p.r2 * p.beta * signed_pow(b, p.r2 - 1.0) * a.abs().powf(p.r1);
        }
        (KktResidual { f, mass1, mass2 }, lap2v, gap)
    }

    /// Pinned Jacobian: the band core with the u₂ Laplacian scaled by
    /// (1 - ν), three border columns (∂/∂λ₁, ∂/∂λ₂, ∂/∂ν) and three
    /// border rows (the two mass gradients and the exact gradient of
    /// the pairing ⟨-Δu₂, u₂⟩, which needs both the row and the
    /// transposed-row contribution because the stencil is not
    /// weight-symmetric).
    fn jacobian_pinned(
        &self,
        x: &[f64],
        lam: [f64; 2],
        nu: f64,
        lap2: &[f64],
    ) -> (BandMatrix, [Vec<f64>; 3], [Vec<f64>; 3]) {
        let p = self.params;
        let n = self.grid.len();
        let wq = self.grid.quad_weights();
        let mut band = BandMatrix::new(2 * n, 4, 4);
        let mut c1 = vec![0.0; 2 * n];
        let mut c2 = vec![0.0; 2 * n];
        let mut c3 = vec![0.0; 2 * n];
        let mut d1 = vec![0.0; 2 * n];
        let mut d2 = vec![0.0; 2 * n];
        let mut d3 = vec![0.0; 2 * n];
        for i in 0..n {
            let (a, b) = (x[2 * i], x[2 * i + 1]);
            d1[2 * i] = 2.0 * wq[i] * a;
            d2[2 * i + 1] = 2.0 * wq[i] * b;
            if i == n - 1 {
                band.add(2 * i, 2 * i, 1.0);
                band.add(2 * i + 1, 2 * i + 1, 1.0);
                continue;
            }
            d3[2 * i + 1] += wq[i] * lap2[i];
            let (coeffs, start) = self.grid.laplacian_row(i);
            for (k, c) in coeffs.iter().enumerate() {
                let j = start + k;
                if j < n && *c != 0.0 {
                    band.add(2 * i, 2 * j, *c);
                    band.add(2 * i + 1, 2 * j + 1, (1.0 - nu) * *c);
                    d3[2 * j + 1] += c * wq[i] * b;
                }
            }
            let coup1 = if p.r1 >= 2.0 || a.abs() > self.eps1 {
                p.r1 * (p.r1 - 1.0) * p.beta * a.abs().powf(p.r1 - 2.0) * b.abs().powf(p.r2)
            } else {
                0.0
            };
            let coup2 = if p.r2 >= 2.0 || b.abs() > self.eps2 {
                p.r2 * (p.r2 - 1.0) * p.beta * b.abs().powf(p.r2 - 2.0) * a.abs().powf(p.r1)
            } else {
                0.0
            };
            let cross =
                -p.r1 * p.r2 * p.beta * signed_pow(a, p.r1 - 1.0) * signed_pow(b, p.r2 - 1.0);
            band.add(
                2 * i,
                2 * i,
                -lam[0] - p.mu1 * (p.p1 - 1.0) * a.abs().powf(p.p1 - 2.0) - coup1,
            );
            band.add(2 * i, 2 * i + 1, cross);
            band.add(
                2 * i + 1,
                2 * i + 1,
                -lam[1] - p.mu2 * (p.p2 - 1.0) * b.abs().powf(p.p2 - 2.0) - coup2,
            );
            band.add(2 * i + 1, 2 * i, cross);
            c1[2 * i] = -a;
            c2[2 * i + 1] = -b;
            c3[2 * i + 1] = -lap2[i];
        }
        (band, [c1, c2, c3], [d1, d2, d3])
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One Newton step for a band core with dense borders: solve the core
/// against the residual and each border column, close with the small
/// Schur complement over the border multipliers. `corner` is the
/// row-major k×k block of border-row derivatives with respect to the
/// border unknowns; pass an empty slice when that block is zero.
fn bordered_step(
    lu: &BandLu,
    f: &[f64],
    cons: &[f64],
    cols: &[&[f64]],
    rows: &[&[f64]],
    corner: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = cons.len();
    let mut yf = f.to_vec();
    lu.solve(&mut yf)?;
    let mut yc: Vec<Vec<f64>> = Vec::with_capacity(k);
    for col in cols {
        let mut y = col.to_vec();
        lu.solve(&mut y)?;
        yc.push(y);
    }
    let mut s = vec![vec![0.0; k + 1]; k];
    for i in 0..k {
        for j in 0..k {
            s[i][j] = dot(rows[i], &yc[j])
                - if corner.is_empty() { 0.0 } else { corner[i * k + j] };
        }
        s[i][k] = cons[i] - dot(rows[i], &yf);
    }
    // Gaussian elimination with partial pivoting on the k×k Schur system.
    let mut dm = vec![0.0; k];
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&a, &b| s[a][col].abs().total_cmp(&s[b][col].abs()))
            .expect("nonempty pivot range");
        if !s[piv][col].is_finite() || s[piv][col].abs() < 1e-300 {
            return Err(Error::LinearSolve(format!(
                "singular border Schur complement at column {col}"
            )));
        }
        s.swap(col, piv);
        for r in col + 1..k {
            let m = s[r][col] / s[col][col];
            for c in col..=k {
                s[r][c] -= m * s[col][c];
            }
        }
    }
    for col in (0..k).rev() {
        let mut acc = s[col][k];
        for c in col + 1..k {
            acc -= s[col][c] * dm[c];
        }
        dm[col] = acc / s[col][col];
    }
    let mut du = vec![0.0; yf.len()];
    for i in 0..du.len() {
        let mut acc = yf[i];
        for (j, y) in yc.iter().enumerate() {
            acc += y[i] * dm[j];
        }
        du[i] = -acc;
    }
    Ok((du, dm))
}

fn kkt_step(
    lu: &BandLu,
    res: &KktResidual,
    c: &[Vec<f64>; 2],
    d: &[Vec<f64>; 2],
) -> Result<(Vec<f64>, [f64; 2])> {
    let (du, dm) = bordered_step(
        lu,
        &res.f,
        &[res.mass1, res.mass2],
        &[&c[0], &c[1]],
        &[&d[0], &d[1]],
        &[],
    )?;
    Ok((du, [dm[0], dm[1]]))
}

/// Resample a string of states to uniform arc length in the product
/// weighted-L² metric, blending neighbors linearly and restoring the
/// masses. Endpoints are kept.
fn reparameterize(params: &SystemParams, nodes: &[State]) -> Result<Vec<State>> {
    let n = nodes.len();
    let grid = Arc::clone(nodes[0].grid());
    let w = grid.quad_weights().to_vec();
    let mut s = vec![0.0; n];
    for k in 1..n {
        let (p1, p2) = (nodes[k - 1].u1.values(), nodes[k - 1].u2.values());
        let (q1, q2) = (nodes[k].u1.values(), nodes[k].u2.values());
        let mut acc = 0.0;
        for i in 0..grid.len() {
            let d1 = q1[i] - p1[i];
            let d2 = q2[i] - p2[i];
            acc += w[i] * (d1 * d1 + d2 * d2);
        }
        s[k] = s[k - 1] + acc.sqrt();
    }
    let total = s[n - 1];
    if !(total > 0.0) {
        return Ok(nodes.to_vec());
    }
    let mut out = Vec::with_capacity(n);
    out.push(nodes[0].clone());
    for k in 1..n - 1 {
        let target = total * k as f64 / (n - 1) as f64;
        let j = s.partition_point(|&v| v < target).clamp(1, n - 1);
        let t = ((target - s[j - 1]) / (s[j] - s[j - 1]).max(1e-300)).clamp(0.0, 1.0);
        let blend = |a: &RadialField, b: &RadialField, mass: f64| -> Result<RadialField> {
            let av = a.values();
            let bv = b.values();
            let vals: Vec<f64> = (0..av.len()).map(|i| (1.0 - t) * av[i] + t * bv[i]).collect();
            project_sphere(&RadialField::new(Arc::clone(&grid), vals)?, mass)
        };
        out.push(State::new(
            blend(&nodes[j - 1].u1, &nodes[j].u1, params.a1)?,
            blend(&nodes[j - 1].u2, &nodes[j].u2, params.a2)?,
        )?);
    }
    out.push(nodes[n - 1].clone());
    Ok(out)
}

/// String relaxation: short projected-flow pulses on each interior
/// node, then uniform arc-length resampling of the whole string. The
/// resampling keeps nodes from piling into the basins on either side,
/// so the top of the string tracks the separating saddle while its
/// running maximum tightens the minimax estimate from above.
fn string_relax(
    params: &SystemParams,
    init: &[State],
    rounds: usize,
    pulses: usize,
    dt: f64,
) -> Result<Vec<State>> {
    let mut nodes: Vec<State> = init.to_vec();
    for _ in 0..rounds {
        for k in 1..nodes.len() - 1 {
            // The flow is a descent; a pulse that raises the energy has
            // outrun its stability range at this node, so retry shorter
            // and leave the node in place if none is usable.
            let j_here = energy_j(params, &nodes[k])?;
            let mut local = dt;
            for _ in 0..4 {
                match damped_steps(params, &nodes[k], pulses, local, false) {
                    Ok(next)
                        if energy_j(params, &next).map_or(false, |j| {
                            j.is_finite() && j <= j_here + 1e-9 * (1.0 + j_here.abs())
                        }) =>
                    {
                        nodes[k] = next;
                        break;
                    }
                    _ => local *= 0.25,
                }
            }
        }
        nodes = reparameterize(params, &nodes)?;
    }
    Ok(nodes)
}

/// Raw damped-Newton outcome, before any positivity policy.
struct RawNewton {
    x: Vec<f64>,
    converged: bool,
    iterations: usize,
    history: Vec<f64>,
}

/// Damped Newton on the stationarity system from `init`, with optional
/// deflation against already-known limits: the line search minimizes
/// the residual merit times a penalty that blows up near each deflated
/// state, so a rerun from the same start walks to a different root.
/// Convergence itself is still judged on the raw residual.
fn newton_iterate(
    params: &SystemParams,
    init: &State,
    opts: &NewtonOptions,
    deflate: &[State],
) -> Result<RawNewton> {
    params.validate()?;
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParam(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let grid = Arc::clone(init.grid());
    let n = grid.len();
    let mut x = vec![0.0; 2 * n];
    for i in 0..n {
        x[2 * i] = init.u1.values()[i];
        x[2 * i + 1] = init.u2.values()[i];
    }
    let (l1, l2) = lagrange_multipliers(params, init)?;
    let mut lam = [l1, l2];

    let wq = grid.quad_weights().to_vec();
    let mass_scale = params.a1 + params.a2;
    // Product of (1 + 1/eta_k), eta_k the mass-normalized squared
    // distance to the k-th deflated state.
    let penalty = |x: &[f64]| -> f64 {
        let mut m = 1.0;
        for known in deflate {
            let (k1, k2) = (known.u1.values(), known.u2.values());
            let mut eta = 0.0;
            for i in 0..n {
                let d1 = x[2 * i] - k1[i];
                let d2 = x[2 * i + 1] - k2[i];
                eta += wq[i] * (d1 * d1 + d2 * d2);
            }
            m *= 1.0 + mass_scale / eta.max(1e-300);
        }
        m
    };

    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    // Levenberg shift, carried across iterations. Zero means exact
    // Newton; a near-singular core (small interior eigenvalue of the
    // linearization) produces directions the line search rejects, and
    // the shifted solves trade quadratic convergence for usable steps.
    let mut nu = 0.0_f64;
    for iter in 0..=opts.max_iters {
        let sys = KktSystem::new(params, &grid, &x);
        let res = sys.residual(&x, lam);
        let merit = res.merit(&grid);
        history.push(merit);
        let pde = res.pde_norm(&grid);
        let mass_ok = res.mass1.abs() <= 1e-12 * (1.0 + params.a1)
            && res.mass2.abs() <= 1e-12 * (1.0 + params.a2);
        if pde <= opts.tol && mass_ok {
            converged = true;
            iterations = iter;
            break;
        }
        if iter == opts.max_iters {
            iterations = iter;
            break;
        }

        let merit_defl = merit * penalty(&x);
        let (band, c, d) = sys.jacobian(&x, lam);
        let mut moved = false;
        let mut trial = nu;
        for _ in 0..14 {
            let mut core = band.clone();
            if trial > 0.0 {
                for i in 0..2 * n {
                    core.add(i, i, trial);
                }
            }
            // A singular factorization escalates like a failed search.
            if let Ok(step) = core.factor().and_then(|lu| kkt_step(&lu, &res, &c, &d)) {
                let mut alpha = 1.0;
                while alpha >= opts.min_step {
                    let mut xt = x.clone();
                    for i in 0..xt.len() {
                        xt[i] += alpha * step.0[i];
                    }
                    let lt = [lam[0] + alpha * step.1[0], lam[1] + alpha * step.1[1]];
                    let mt = sys.residual(&xt, lt).merit(&grid) * penalty(&xt);
                    if mt.is_finite() && mt <= (1.0 - 1e-4 * alpha) * merit_defl {
                        x = xt;
                        lam = lt;
                        moved = true;
                        break;
                    }
                    alpha *= 0.5;
                }
            }
            if moved {
                nu = trial * 0.25;
                if nu < 1e-3 {
                    nu = 0.0;
                }
                break;
            }
            trial = if trial == 0.0 { 1e-2 } else { trial * 10.0 };
        }
        if !moved {
            iterations = iter;
            break;
        }
    }
    Ok(RawNewton { x, converged, iterations, history })
}

/// Converged limit of the kinetically pinned iteration.
struct RawPinned {
    x: Vec<f64>,
    lam: [f64; 2],
    /// Multiplier of the kinetic pin; equals 2 dJ/dk along the branch,
    /// so a sign change over k brackets a free critical point.
    nu: f64,
    converged: bool,
    iterations: usize,
}

impl RawPinned {
    fn state(&self, grid: &Arc<RadialGrid>) -> Result<State> {
        let n = grid.len();
        let mut v1 = vec![0.0; n];
        let mut v2 = vec![0.0; n];
        for i in 0..n {
            v1[i] = self.x[2 * i];
            v2[i] = self.x[2 * i + 1];
        }
        State::new(
            RadialField::new(Arc::clone(grid), v1)?,
            RadialField::new(Arc::clone(grid), v2)?,
        )
    }
}

/// A point of the pinned family with its multipliers and kinetic level
/// all treated as unknowns: (u₁, u₂ interleaved, λ₁, λ₂, ν, k).
#[derive(Clone)]
struct PinPoint {
    x: Vec<f64>,
    lam: [f64; 2],
    nu: f64,
    k: f64,
}

impl PinPoint {
    fn from_state(params: &SystemParams, st: &State, nu: f64, k: f64) -> Result<Self> {
        let n = st.grid().len();
        let mut x = vec![0.0; 2 * n];
        for i in 0..n {
            x[2 * i] = st.u1.values()[i];
            x[2 * i + 1] = st.u2.values()[i];
        }
        let (l1, l2) = lagrange_multipliers(params, st)?;
        Ok(PinPoint { x, lam: [l1, l2], nu, k })
    }

    fn state(&self, grid: &Arc<RadialGrid>) -> Result<State> {
        let n = grid.len();
        let mut v1 = vec![0.0; n];
        let mut v2 = vec![0.0; n];
        for i in 0..n {
            v1[i] = self.x[2 * i];
            v2[i] = self.x[2 * i + 1];
        }
        State::new(
            RadialField::new(Arc::clone(grid), v1)?,
            RadialField::new(Arc::clone(grid), v2)?,
        )
    }

    /// Pairing against a covector, ⟨t, self⟩ with plain sums; any metric
    /// weighting is baked into the covector components by the caller.
    fn pair(&self, t: &PinPoint) -> f64 {
        dot(&t.x, &self.x)
            + t.lam[0] * self.lam[0]
            + t.lam[1] * self.lam[1]
            + t.nu * self.nu
            + t.k * self.k
    }

    fn axpy(&mut self, s: f64, dir: &PinPoint) {
        for (v, d) in self.x.iter_mut().zip(&dir.x) {
            *v += s * d;
        }
        self.lam[0] += s * dir.lam[0];
        self.lam[1] += s * dir.lam[1];
        self.nu += s * dir.nu;
        self.k += s * dir.k;
    }
}

/// Damped Newton on the pinned stationarity system with one extra
/// scalar equation ⟨tang, y - yref⟩ = ds closing the count for the
/// four non-field unknowns (λ₁, λ₂, ν, k). With tang = e_k the extra
/// equation freezes the kinetic level (plain pinned solve); with tang
/// the secant of two prior points it is a pseudo-arclength step that
/// rides through folds of the branch.
fn pin_newton_bordered(
    params: &SystemParams,
    grid: &Arc<RadialGrid>,
    init: &PinPoint,
    tang: &PinPoint,
    yref: &PinPoint,
    ds: f64,
    opts: &NewtonOptions,
) -> Result<(PinPoint, bool, usize)> {
    params.validate()?;
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParam(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let n = grid.len();
    let mut y = init.clone();
    let zeros = vec![0.0; 2 * n];

    let mut converged = false;
    let mut iterations = 0;
    let mut shift = 0.0_f64;
    for iter in 0..=opts.max_iters {
        let sys = KktSystem::new(params, grid, &y.x);
        let (res, lap2, gap) = sys.residual_pinned(&y.x, y.lam, y.nu, y.k);
        let arc = y.pair(tang) - yref.pair(tang) - ds;
        let pde = res.pde_norm(grid);
        let merit = (pde * pde
            + res.mass1 * res.mass1
            + res.mass2 * res.mass2
            + gap * gap
            + arc * arc)
            .sqrt();
        let cons_ok = res.mass1.abs() <= 1e-12 * (1.0 + params.a1)
            && res.mass2.abs() <= 1e-12 * (1.0 + params.a2)
            && gap.abs() <= 1e-10 * (1.0 + y.k.abs())
            && arc.abs() <= 1e-9 * (1.0 + ds.abs());
        if pde <= opts.tol && cons_ok {
            converged = true;
            iterations = iter;
            break;
        }
        if iter == opts.max_iters {
            iterations = iter;
            break;
        }

        let (band, c, d) = sys.jacobian_pinned(&y.x, y.lam, y.nu, &lap2);
        #[rustfmt::skip]
        let corner = [
            0.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, -1.0,
            tang.lam[0], tang.lam[1], tang.nu, tang.k,
        ];
        let mut moved = false;
        let mut trial = shift;
        for _ in 0..14 {
            let mut core = band.clone();
            if trial > 0.0 {
                for i in 0..2 * n {
                    core.add(i, i, trial);
                }
            }
            let step = core.factor().and_then(|lu| {
                bordered_step(
                    &lu,
                    &res.f,
                    &[res.mass1, res.mass2, gap, arc],
                    &[&c[0], &c[1], &c[2], &zeros],
                    &[&d[0], &d[1], &d[2], &tang.x],
                    &corner,
                )
            });
            if let Ok((du, dm)) = step {
                let dir = PinPoint { x: du, lam: [dm[0], dm[1]], nu: dm[2], k: dm[3] };
                let mut alpha = 1.0;
                while alpha >= opts.min_step {
                    let mut yt = y.clone();
                    yt.axpy(alpha, &dir);
                    let (rt, _, gt) = sys.residual_pinned(&yt.x, yt.lam, yt.nu, yt.k);
                    let at = yt.pair(tang) - yref.pair(tang) - ds;
                    let pt = rt.pde_norm(grid);
                    let mt = (pt * pt
                        + rt.mass1 * rt.mass1
                        + rt.mass2 * rt.mass2
                        + gt * gt
                        + at * at)
                        .sqrt();
                    if mt.is_finite() && mt <= (1.0 - 1e-4 * alpha) * merit {
                        y = yt;
                        moved = true;
                        break;
                    }
                    alpha *= 0.5;
                }
            }
            if moved {
                shift = trial * 0.25;
                if shift < 1e-3 {
                    shift = 0.0;
                }
                break;
            }
            trial = if trial == 0.0 { 1e-2 } else { trial * 10.0 };
        }
        if !moved {
            iterations = iter;
            break;
        }
    }
    Ok((y, converged, iterations))
}

/// One accepted point along a pinned-branch walk.
struct BranchSample {
    pt: PinPoint,
    iterations: usize,
}

/// Unit tangent of the secant from a to b: the direction is returned
/// together with its metric covector (quadrature weights on the field
/// part), normalized so ⟨cov, dir⟩ = 1 and arclength steps measure
/// weighted-L² distance independently of resolution.
fn secant_tangent(grid: &RadialGrid, a: &PinPoint, b: &PinPoint) -> (PinPoint, PinPoint) {
    let wq = grid.quad_weights();
    let mut dir = b.clone();
    dir.axpy(-1.0, a);
    let mut cov = dir.clone();
    for i in 0..grid.len() {
        cov.x[2 * i] *= wq[i];
        cov.x[2 * i + 1] *= wq[i];
    }
    let norm = dir.pair(&cov).sqrt();
    let scale = if norm > 0.0 { 1.0 / norm } else { 1.0 };
    dir.axpy(scale - 1.0, &dir.clone());
    cov.axpy(scale - 1.0, &cov.clone());
    (dir, cov)
}

/// Pseudo-arclength walk of the pinned family from two nearby solved
/// points, riding through folds in k. Steps adapt to the Newton cost;
/// the walk ends after `max_steps` accepted points, six consecutive
/// rejections, or when k leaves `k_range`.
fn trace_pinned_branch(
    params: &SystemParams,
    grid: &Arc<RadialGrid>,
    p0: &PinPoint,
    p1: &PinPoint,
    ds0: f64,
    max_steps: usize,
    k_range: (f64, f64),
    opts: &NewtonOptions,
) -> Result<Vec<BranchSample>> {
    let mut prev = p0.clone();
    let mut cur = p1.clone();
    let mut ds = ds0;
    let mut samples = Vec::new();
    let mut rejects = 0;
    while samples.len() < max_steps {
        let (dir, cov) = secant_tangent(grid, &prev, &cur);
        let mut pred = cur.clone();
        pred.axpy(ds, &dir);
        let (y, ok, iters) = pin_newton_bordered(params, grid, &pred, &cov, &cur, ds, opts)?;
        if !ok {
            rejects += 1;
            if rejects >= 6 {
                break;
            }
            ds *= 0.4;
            continue;
        }
        rejects = 0;
        prev = cur;
        cur = y.clone();
        samples.push(BranchSample { pt: y, iterations: iters });
        if cur.k < k_range.0 || cur.k > k_range.1 {
            break;
        }
        if iters <= 4 {
            ds = (ds * 1.4).min(ds0 * 8.0);
        } else if iters >= 10 {
            ds *= 0.6;
        }
    }
    Ok(samples)
}

/// Solve the free system from a pinned point by releasing the pin:
/// ν is frozen at zero and the kinetic level becomes an unknown, so
/// the limit is a genuine critical point with its k emergent.
fn release_at_zero_nu(
    params: &SystemParams,
    grid: &Arc<RadialGrid>,
    init: &PinPoint,
    opts: &NewtonOptions,
) -> Result<(PinPoint, bool, usize)> {
    let n = grid.len();
    let tang = PinPoint { x: vec![0.0; 2 * n], lam: [0.0, 0.0], nu: 1.0, k: 0.0 };
    let mut start = init.clone();
    start.nu = 0.0;
    let yref = start.clone();
    pin_newton_bordered(params, grid, &start, &tang, &yref, 0.0, opts)
}

/// Damped Newton for the pinned system at kinetic level k. Pinning
/// ⟨-Δu₂, u₂⟩ removes the unstable dilation mode of the supercritical
/// component, so each slice is a well-posed root-find even where the
/// free problem only has a saddle.
fn pinned_newton(
    params: &SystemParams,
    init: &State,
    k: f64,
    nu0: f64,
    opts: &NewtonOptions,
) -> Result<RawPinned> {
    params.validate()?;
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::InvalidParam(format!("kinetic pin must be positive, got {k}")));
    }
    let grid = Arc::clone(init.grid());
    let n = grid.len();
    let mut start = PinPoint::from_state(params, init, nu0, k)?;
    start.k = k;
    let tang = PinPoint { x: vec![0.0; 2 * n], lam: [0.0, 0.0], nu: 0.0, k: 1.0 };
    let yref = start.clone();
    let (y, converged, iterations) = pin_newton_bordered(params, &grid, &start, &tang, &yref, 0.0, opts)?;
    Ok(RawPinned { x: y.x, lam: y.lam, nu: y.nu, converged, iterations })
}

/// Newton refinement with the positivity policy applied: sign-changing
/// limits are rejected, roundoff negatives absorbed, masses restored.
/// `history` carries the merit norm per iteration for tail diagnostics.
fn newton_core(
    params: &SystemParams,
    init: &State,
    opts: &NewtonOptions,
) -> Result<(Solution, Vec<f64>)> {
    let regime = classify_regime(params);
    if regime == Regime::CriticalUnsupported {
        return Err(Error::RegimeMismatch {
            op: "newton_refine",
            required: "any non-critical regime",
            got: regime.to_string(),
        });
    }
    let raw = newton_iterate(params, init, opts, &[])?;
    let grid = Arc::clone(init.grid());
    let n = grid.len();
    let RawNewton { x, converged, iterations, history } = raw;

    let mut u1 = vec![0.0; n];
    let mut u2 = vec![0.0; n];
    for i in 0..n {
        u1[i] = x[2 * i];
        u2[i] = x[2 * i + 1];
    }
    for (vals, name) in [(&mut u1, "u1"), (&mut u2, "u2")] {
        let peak = vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if peak == 0.0 {
            return Err(Error::Geometry(format!("{name} collapsed to zero")));
        }
        let min = vals.iter().fold(f64::INFINITY, |m, &v| m.min(v));
        if converged && min < -1e-10 * peak {
            return Err(Error::Geometry(format!(
                "{name} is sign-changing at the Newton limit: min {min} vs peak {peak}"
            )));
        }
        for v in vals.iter_mut() {
            *v = v.max(0.0);
        }
    }
    let state = State::new(
        project_sphere(&RadialField::new(Arc::clone(&grid), u1)?, params.a1)?,
        project_sphere(&RadialField::new(Arc::clone(&grid), u2)?, params.a2)?,
    )?;
    let (lambda1, lambda2) = lagrange_multipliers(params, &state)?;
    let (r1, r2) = gradient_residual(params, &state, lambda1, lambda2)?;
    let residual_norm =
        (grid.residual_norm(r1.values()).powi(2) + grid.residual_norm(r2.values()).powi(2)).sqrt();
    let solution = Solution {
        j_value: energy_j(params, &state)?,
        q_value: pohozaev_q(params, &state)?,
        state,
        lambda1,
        lambda2,
        residual_norm,
        iterations,
        regime,
        converged,
    };
    Ok((solution, history))
}

/// See `newton_core`; the public entry point drops the merit history.
pub fn newton_refine(params: &SystemParams, init: &State, opts: &NewtonOptions) -> Result<Solution> {
    newton_core(params, init, opts).map(|(s, _)| s)
}

/// Hold u₁ fixed and move u₂ to the top of its dilation fiber by
/// ternary search over the dilation exponent, restoring the mass after
/// each trial.
fn fiber_ascent(params: &SystemParams, st: &State, span: f64) -> Result<State> {
    let at = |sig: f64| -> Result<(f64, State)> {
        let u2 = project_sphere(&st.u2.dilate(sig)?, params.a2)?;
        let cand = State::new(st.u1.clone(), u2)?;
        let j = energy_j(params, &cand)?;
        Ok((j, cand))
    };
    let (mut lo, mut hi) = (-span, span);
    for _ in 0..40 {
        let a = lo + (hi - lo) / 3.0;
        let b = hi - (hi - lo) / 3.0;
        if at(a)?.0 < at(b)?.0 {
            lo = a;
        } else {
            hi = b;
        }
    }
    Ok(at(0.5 * (lo + hi))?.1)
}

/// Unit tangent (in the weighted-L² metric) of the u₂ dilation fiber
/// at the current state, paired with a zero u₁ component.
fn fiber_tangent(params: &SystemParams, st: &State) -> Result<(RadialField, RadialField)> {
    let grid = Arc::clone(st.grid());
    let eps = 1e-4;
    let plus = project_sphere(&st.u2.dilate(eps)?, params.a2)?;
    let minus = project_sphere(&st.u2.dilate(-eps)?, params.a2)?;
    let mut vals: Vec<f64> = plus
        .values()
        .iter()
        .zip(minus.values())
        .map(|(p, m)| (p - m) / (2.0 * eps))
        .collect();
    let sq: Vec<f64> = vals.iter().map(|v| v * v).collect();
    let norm = grid.integrate(&sq)?.sqrt();
    if !(norm > 0.0) {
        return Err(Error::Geometry("degenerate dilation tangent".into()));
    }
    for v in &mut vals {
        *v /= norm;
    }
    Ok((
        RadialField::zeros(Arc::clone(&grid)),
        RadialField::new(grid, vals)?,
    ))
}

fn stationarity_residual(params: &SystemParams, st: &State) -> Result<f64> {
    let (l1, l2) = lagrange_multipliers(params, st)?;
    let (r1, r2) = gradient_residual(params, st, l1, l2)?;
    let g = st.grid();
    Ok((g.residual_norm(r1.values()).powi(2) + g.residual_norm(r2.values()).powi(2)).sqrt())
}

/// Min–max splitting toward the index-one critical point: u₂ moves only
/// along its dilation fiber (ascent to the ridge), u₁ relaxes toward
/// its conditional minimizer under the frozen u₂ via short damped-flow
/// bursts. A sweep is kept only when it lowers the stationarity
/// residual; the flow step size adapts on that signal. Newton then
/// polishes the final iterate.
fn saddle_hunt(params: &SystemParams, init: &State, opts: &NewtonOptions) -> Result<Solution> {
    let mut st = init.clone();
    let mut res_best = stationarity_residual(params, &st)?;
    let mut dt = 2e-4_f64;
    let mut span = 0.4_f64;
    let mut stale = 0usize;
    for _ in 0..60 {
        let cand = damped_steps(params, &st, 100, dt, true).and_then(|damped| {
            let up = fiber_ascent(params, &damped, span)?;
            let res = stationarity_residual(params, &up)?;
            Ok((up, res))
        });
        match cand {
            Ok((next, res)) if res < res_best => {
                st = next;
                res_best = res;
                dt = (dt * 1.4).min(3e-2);
                span = (span * 0.8).max(0.02);
                stale = 0;
            }
            _ => {
                dt *= 0.35;
                stale += 1;
                if dt < 1e-7 || stale > 6 {
                    break;
                }
            }
        }
    }
    newton_refine(params, &st, opts)
}

/// Track the critical point from the decoupled pair at β = 0 up to the
/// requested coupling, halving the continuation stride on failure. The
/// returned solution is always at the target coupling; `converged` is
/// false when the branch could not be followed all the way there.
fn continue_in_beta(
    params: &SystemParams,
    start: &State,
    opts: &NewtonOptions,
) -> Result<Solution> {
    let at = |beta: f64| SystemParams { beta, ..params.clone() };
    let mut sol = newton_refine(&at(0.0), start, opts)?;
    if !sol.converged || params.beta == 0.0 {
        return Ok(sol);
    }
    let mut beta = 0.0;
    let mut stride = params.beta;
    let mut splits = 0;
    while beta < params.beta {
        let next = (beta + stride).min(params.beta);
        match newton_refine(&at(next), &sol.state, opts) {
            Ok(cand) if cand.converged => {
                sol = cand;
                beta = next;
                stride *= 2.0;
            }
            _ => {
                splits += 1;
                stride *= 0.5;
                if splits > 8 || stride < 1e-6 * params.beta {
                    // the branch stalled; report the honest attempt at
                    // the target coupling from the closest point reached
                    return newton_refine(&at(params.beta), &sol.state, opts);
                }
            }
        }
    }
    Ok(sol)
}

/// Two-sided estimate of the minimax level γ(a₁,a₂) with the refined
/// solution it brackets.
#[derive(Debug)]
pub struct GammaEstimate {
    /// Max of J over the constructed path (upper bound for γ).
    pub gamma_upper: f64,
    /// Min sampled J on the barrier sphere when samples could be placed
    /// there; otherwise the analytic floor m₁ + 3c/4 (on the sphere each
    /// of the two nonlinear terms is bounded by c/8, so J ≥ J(u₁,0) + 3c/4).
    pub inf_b_lower: f64,
    /// m₁(a₁) + m₂(a₂), the decoupled level the path stays below.
    pub m_sum: f64,
    pub t_star: f64,
    pub solution: Solution,
    pub certificate: PathCertificate,
}

/// Build the path, refine its maximum, and check the level ordering
/// inf_B ≤ J ≤ path max ≤ m₁+m₂ within `bracket_slack`. Ordering
/// violations are reported as geometry errors, not silently returned.
pub fn gamma_estimate(
    params: &SystemParams,
    grid: &Arc<RadialGrid>,
    gn_grid: Arc<RadialGrid>,
    popts: &PathOptions,
    nopts: &NewtonOptions,
) -> Result<GammaEstimate> {
    let path = build_path(params, grid, gn_grid, popts)?;
    let (t_star, gamma_upper, state_star) = path_max(params, &path)?;

    let solve_grid = RadialGrid::uniform(params.dim, 24.0, 2048)?;
    let g1 = solve_unit_ground(
        ScalarProblem::new(params.dim, params.p1, params.mu1)?,
        Arc::clone(&solve_grid),
    )?;
    let g2 = solve_unit_ground(ScalarProblem::new(params.dim, params.p2, params.mu2)?, solve_grid)?;
    let m1 = g1.energy_at_mass(params.a1)?;
    let m_sum = m1 + g2.energy_at_mass(params.a2)?;
    let inf_b_lower = if path.certificate.b_samples > 0 {
        path.certificate.inf_b_estimate
    } else {
        m1 + 0.75 * path.certificate.c_value
    };

    // Refinement cascade from the sampled maximum: plain Newton first;
    // if its line search stalls off-basin, the min–max splitting walks
    // the iterate onto the saddle before polishing; tracking the
    // decoupled pair up from β = 0 is the last resort (and the honest
    // failure report when the branch cannot be followed).
    let solution = match newton_refine(params, &state_star, nopts) {
        Ok(sol) if sol.converged => sol,
        _ => match saddle_hunt(params, &state_star, nopts) {
            Ok(sol) if sol.converged => sol,
            _ => {
                let mid = match &path.generator {
                    Some(gen) => generator_state(params, gen, 0.5)?,
                    None => state_star.clone(),
                };
                continue_in_beta(params, &mid, nopts)?
            }
        },
    };
    let slack = popts.bracket_slack * (1.0 + m_sum.abs());
    if gamma_upper > m_sum + slack {
        return Err(Error::Geometry(format!(
            "path max {gamma_upper} exceeds decoupled level {m_sum} beyond slack {slack}"
        )));
    }
    if solution.converged {
        if solution.j_value > gamma_upper + slack {
            return Err(Error::Geometry(format!(
                "refined level {} exceeds path max {gamma_upper} beyond slack {slack}",
                solution.j_value
            )));
        }
        if solution.j_value < inf_b_lower - slack {
            return Err(Error::Geometry(format!(
                "refined level {} fell below the barrier estimate {inf_b_lower} beyond \
                 slack {slack}",
                solution.j_value
            )));
        }
    }
    Ok(GammaEstimate {
        gamma_upper,
        inf_b_lower,
        m_sum,
        t_star,
        solution,
        certificate: path.certificate,
    })
}

/// One row of a coupling-strength sweep.
#[derive(Debug, Clone, Serialize)]
pub struct BetaRecord {
    pub beta: f64,
    pub converged: bool,
    pub j_value: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub q_value: f64,
    pub residual_norm: f64,
    pub iterations: usize,
}

impl BetaRecord {
    fn failed(beta: f64) -> Self {
        BetaRecord {
            beta,
            converged: false,
            j_value: f64::NAN,
            lambda1: f64::NAN,
            lambda2: f64::NAN,
            q_value: f64::NAN,
            residual_norm: f64::NAN,
            iterations: 0,
        }
    }

    fn from_solution(beta: f64, sol: &Solution) -> Self {
        BetaRecord {
            beta,
            converged: sol.converged,
            j_value: sol.j_value,
            lambda1: sol.lambda1,
            lambda2: sol.lambda2,
            q_value: sol.q_value,
            residual_norm: sol.residual_norm,
            iterations: sol.iterations,
        }
    }
}

/// Continuation in β over the supercritical branch: each converged
/// solution warm-starts the next β, with the continuation step halved
/// on failure (down to a depth floor) before the target is recorded as
/// failed and the sweep moves on.
pub fn beta_sweep(
    params: &SystemParams,
    betas: &[f64],
    grid: &Arc<RadialGrid>,
    opts: &NewtonOptions,
) -> Result<Vec<BetaRecord>> {
    params.validate()?;
    let regime = classify_regime(params);
    if regime != Regime::Supercritical {
        return Err(Error::RegimeMismatch {
            op: "beta_sweep",
            required: "supercritical",
            got: regime.to_string(),
        });
    }
    if betas.is_empty() {
        return Err(Error::InvalidParam("empty beta list".into()));
    }
    for b in betas {
        if !(b.is_finite() && *b >= 0.0) {
            return Err(Error::InvalidParam(format!("beta values must be ≥ 0, got {b}")));
        }
    }

    let at = |beta: f64| SystemParams { beta, ..params.clone() };
    let mut warm_state = ground_pair(params, grid)?;
    let mut warm_beta = 0.0;
    let mut records = Vec::with_capacity(betas.len());

    for &target in betas {
        // Walk from the last converged β to the target, halving the
        // stride on failure.
        let mut reached: Option<Solution> = None;
        let mut stride = target - warm_beta;
        let mut at_beta = warm_beta;
        let mut splits = 0;
        loop {
            let next = if stride.abs() < 1e-12 { target } else { at_beta + stride };
            let next = if (target - warm_beta).abs() < 1e-12 || (next - target).abs() < 1e-12 {
                target
            } else {
                next
            };
            match newton_refine(&at(next), &warm_state, opts) {
                Ok(sol) if sol.converged => {
                    warm_state = sol.state.clone();
                    at_beta = next;
                    warm_beta = next;
                    if (next - target).abs() < 1e-12 {
                        reached = Some(sol);
                        break;
                    }
                    stride = target - at_beta;
                }
                _ => {
                    splits += 1;
                    if splits > 6 {
                        break;
                    }
                    stride *= 0.5;
                    if stride.abs() < 1e-6 {
                        break;
                    }
                }
            }
        }
        match reached {
            Some(sol) => records.push(BetaRecord::from_solution(target, &sol)),
            None => records.push(BetaRecord::failed(target)),
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::StateNorms;
    use crate::sample;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mixed_params(a1: f64, a2: f64, beta: f64) -> SystemParams {
        SystemParams {
            dim: 3,
            p1: 2.5,
            p2: 4.0,
            r1: 1.5,
            r2: 2.5,
            mu1: 1.0,
            mu2: 1.0,
            beta,
            a1,
            a2,
        }
    }

    #[test]
    #[ignore]
    fn halo_ridge_trace() {
        let params = mixed_params(560.0, 1.0, 1.0);
        let rmax: f64 = std::env::var("NLS_RMAX").ok().and_then(|s| s.parse().ok()).unwrap_or(24.0);
        let m: usize = std::env::var("NLS_M").ok().and_then(|s| s.parse().ok()).unwrap_or(4096);
        let grid = RadialGrid::uniform(3, rmax, m).unwrap();
        let g1 = crate::scalar::solve_unit_ground(
            crate::scalar::ScalarProblem::new(3, 2.5, 1.0).unwrap(),
            Arc::clone(&grid),
        )
        .unwrap();
        let g2 = crate::scalar::solve_unit_ground(
            crate::scalar::ScalarProblem::new(3, 4.0, 1.0).unwrap(),
            Arc::clone(&grid),
        )
        .unwrap();
        let lower = project_sphere(
            &crate::scalar::rescale_to_mass(&g1, 560.0, Arc::clone(&grid)).unwrap().field,
            560.0,
        )
        .unwrap();
        let upper = project_sphere(
            &crate::scalar::rescale_to_mass(&g2, 1.0, Arc::clone(&grid)).unwrap().field,
            1.0,
        )
        .unwrap();
        let m1 = {
            let zero = RadialField::zeros(Arc::clone(&grid));
            let base = State::new(lower.clone(), zero).unwrap();
            energy_j(&params, &base).unwrap()
        };
        println!("m1(grid) {m1:+.6}  m1(curve) {:+.6}", g1.energy_at_mass(560.0).unwrap());

        let pairing = |f: &RadialField| -> f64 {
            let lap = f.apply_laplacian();
            let wq = grid.quad_weights();
            f.values().iter().zip(lap.values()).zip(wq).map(|((&b, &l), &w)| w * b * l).sum()
        };
        let kin_u2 = pairing(&upper);
        let opts = NewtonOptions { tol: 1e-9, max_iters: 120, ..NewtonOptions::default() };

        let report = |tag: &str, k: f64, raw: &RawPinned| -> State {
            let st = raw.state(&grid).unwrap();
            let j = energy_j(&params, &st).unwrap();
            let min1 = st.u1.values().iter().cloned().fold(f64::INFINITY, f64::min);
            let min2 = st.u2.values().iter().cloned().fold(f64::INFINITY, f64::min);
            println!(
                "{tag} k {k:9.4} conv {} it {:3} J-m1 {:+.6} nu {:+.4e} l1 {:+.4} l2 {:+.5} min1 {min1:+.1e} min2 {min2:+.1e}",
                raw.converged,
                raw.iterations,
                j - m1,
                raw.nu,
                raw.lam[0],
                raw.lam[1]
            );
            st
        };

        // positive bump of kinetic ~ k sitting in the u1 well: Gaussian of
        // width sqrt(1.5/k) (kinetic/mass ratio of a Gaussian is 1.5/w^2)
        let _ = kin_u2;
        let bump_at = |k: f64| -> State {
            let w = (1.5 / k).sqrt();
            let vals: Vec<f64> =
                grid.nodes().iter().map(|&r| (-(r * r) / (2.0 * w * w)).exp()).collect();
            let u2 = project_sphere(&RadialField::new(Arc::clone(&grid), vals).unwrap(), 1.0)
                .unwrap();
            State::new(lower.clone(), u2).unwrap()
        };

        // wall/halo branch: fresh Gaussian inits over a k scan, then bisect
        // the first + -> - crossing of nu (the crest of the ridge)
        let mut probes: Vec<(f64, f64, State)> = Vec::new();
        for &k in &[0.0125, 0.025, 0.05, 0.1, 0.2, 0.4] {
            let raw = pinned_newton(&params, &bump_at(k), k, 0.0, &opts).unwrap();
            let stn = report("scan", k, &raw);
            if raw.converged {
                probes.push((k, raw.nu, stn));
            }
        }
        let mut cross_w = None;
        for i in 0..probes.len().saturating_sub(1) {
            if probes[i].1 > 0.0 && probes[i + 1].1 < 0.0 {
                cross_w = Some(i);
                break;
            }
        }
        if let Some(i) = cross_w {
            let (mut klo, _, mut stlo) = probes[i].clone();
            let mut khi = probes[i + 1].0;
            for _ in 0..40 {
                let kmid = (klo * khi).sqrt();
                let raw = pinned_newton(&params, &stlo, kmid, 0.0, &opts).unwrap();
                let stn = report("wbis", kmid, &raw);
                if !raw.converged {
                    break;
                }
                if raw.nu.abs() < 1e-10 {
                    let q = pohozaev_q(&params, &stn).unwrap();
                    println!("wall crest Q {q:+.3e}");
                    break;
                }
                if raw.nu > 0.0 {
                    klo = kmid;
                    stlo = stn;
                } else {
                    khi = kmid;
                }
            }
        } else {
            println!("no wall crest bracketed");
        }

        // enter the bound branch at k = 0.8, then continue downward in k
        let raw = pinned_newton(&params, &bump_at(0.8), 0.8, 0.0, &opts).unwrap();
        let mut st = report("seed", 0.8, &raw);
        assert!(raw.converged);
        let mut nu = raw.nu;
        let mut k = 0.8;
        let mut cross: Option<(f64, State, f64, State)> = None;
        while k > 0.01 {
            let knext = k / 1.15;
            let raw = pinned_newton(&params, &st, knext, nu, &opts).unwrap();
            let stn = report("down", knext, &raw);
            if !raw.converged {
                println!("branch lost at k {knext:.4}");
                break;
            }
            if raw.nu > 0.0 && nu < 0.0 {
                cross = Some((knext, stn.clone(), k, st.clone()));
                println!("crossing bracketed in ({knext:.4}, {k:.4})");
                break;
            }
            st = stn;
            nu = raw.nu;
            k = knext;
        }
        let Some((mut klo, mut stlo, mut khi, _sthi)) = cross else {
            println!("no crest on bound branch");
            return;
        };
        let mut best = stlo.clone();
        let mut bestk = klo;
        for _ in 0..50 {
            let kmid = (klo * khi).sqrt();
            let raw = pinned_newton(&params, &stlo, kmid, 0.0, &opts).unwrap();
            let stn = report("bis ", kmid, &raw);
            if !raw.converged {
                break;
            }
            if raw.nu.abs() < 1e-10 {
                best = stn;
                bestk = kmid;
                break;
            }
            if raw.nu > 0.0 {
                klo = kmid;
                stlo = stn.clone();
            } else {
                khi = kmid;
            }
            best = stn;
            bestk = kmid;
        }
        let j = energy_j(&params, &best).unwrap();
        let (l1, l2) = lagrange_multipliers(&params, &best).unwrap();
        let q = pohozaev_q(&params, &best).unwrap();
        let res = stationarity_residual(&params, &best).unwrap();
        let min1 = best.u1.values().iter().cloned().fold(f64::INFINITY, f64::min);
        let min2 = best.u2.values().iter().cloned().fold(f64::INFINITY, f64::min);
        println!(
            "crest: k {bestk:.6} J-m1 {:+.6} l1 {l1:+.4} l2 {l2:+.6} Q {q:+.2e} stat-res {res:.2e} min1 {min1:+.1e} min2 {min2:+.1e}",
            j - m1,
        );
    }

    #[test]
    #[ignore]
    fn fold_arc_trace() {
        let params = mixed_params(560.0, 1.0, 1.0);
        let rmax: f64 = std::env::var("NLS_RMAX").ok().and_then(|s| s.parse().ok()).unwrap_or(24.0);
        let m: usize = std::env::var("NLS_M").ok().and_then(|s| s.parse().ok()).unwrap_or(4096);
        let grid = RadialGrid::uniform(3, rmax, m).unwrap();
        let g1 = crate::scalar::solve_unit_ground(
            crate::scalar::ScalarProblem::new(3, 2.5, 1.0).unwrap(),
            Arc::clone(&grid),
        )
        .unwrap();
        let lower = project_sphere(
            &crate::scalar::rescale_to_mass(&g1, 560.0, Arc::clone(&grid)).unwrap().field,
            560.0,
        )
        .unwrap();
        let m1 = {
            let zero = RadialField::zeros(Arc::clone(&grid));
            energy_j(&params, &State::new(lower.clone(), zero).unwrap()).unwrap()
        };
        let bump_at = |k: f64| -> State {
            let w = (1.5 / k).sqrt();
            let vals: Vec<f64> =
                grid.nodes().iter().map(|&r| (-(r * r) / (2.0 * w * w)).exp()).collect();
            let u2 = project_sphere(&RadialField::new(Arc::clone(&grid), vals).unwrap(), 1.0)
                .unwrap();
            State::new(lower.clone(), u2).unwrap()
        };
        let opts = NewtonOptions { tol: 1e-9, max_iters: 60, ..NewtonOptions::default() };

        let r0 = pinned_newton(&params, &bump_at(0.8), 0.8, 0.0, &opts).unwrap();
        assert!(r0.converged);
        let s0 = RawPinned { x: r0.x.clone(), lam: r0.lam, nu: r0.nu, converged: true, iterations: 0 }
            .state(&grid)
            .unwrap();
        let r1 = pinned_newton(&params, &s0, 0.76, r0.nu, &opts).unwrap();
        assert!(r1.converged);
        let p0 = PinPoint { x: r0.x, lam: r0.lam, nu: r0.nu, k: 0.8 };
        let p1 = PinPoint { x: r1.x, lam: r1.lam, nu: r1.nu, k: 0.76 };
        let (dir0, cov0) = secant_tangent(&grid, &p0, &p1);
        let _ = dir0;
        let ds0 = {
            let mut d = p1.clone();
            d.axpy(-1.0, &p0);
            d.pair(&cov0).abs()
        };
        println!("ds0 {ds0:.4e}");
        let samples = trace_pinned_branch(
            &params,
            &grid,
            &p0,
            &p1,
            ds0.max(0.02),
            400,
            (0.004, 6.0),
            &opts,
        )
        .unwrap();
        let mut prev_nu = p1.nu;
        let mut cross_idx = Vec::new();
        for (i, s) in samples.iter().enumerate() {
            let st = s.pt.state(&grid).unwrap();
            let j = energy_j(&params, &st).unwrap();
            let min1 = st.u1.values().iter().cloned().fold(f64::INFINITY, f64::min);
            let min2 = st.u2.values().iter().cloned().fold(f64::INFINITY, f64::min);
            println!(
                "arc {i:3} k {:9.5} nu {:+.4e} J-m1 {:+.6} l2 {:+.5} min1 {min1:+.1e} min2 {min2:+.1e} it {}",
                s.pt.k, s.pt.nu, j - m1, s.pt.lam[1], s.iterations
            );
            if s.pt.nu.signum() != prev_nu.signum() {
                cross_idx.push(i);
            }
            prev_nu = s.pt.nu;
        }
        println!("nu sign changes at sample indices {cross_idx:?}");
        for &i in &cross_idx {
            let (y, ok, iters) = release_at_zero_nu(&params, &grid, &samples[i].pt, &opts).unwrap();
            let st = y.state(&grid).unwrap();
            let j = energy_j(&params, &st).unwrap();
            let q = pohozaev_q(&params, &st).unwrap();
            let res = stationarity_residual(&params, &st).unwrap();
            let min1 = st.u1.values().iter().cloned().fold(f64::INFINITY, f64::min);
            let min2 = st.u2.values().iter().cloned().fold(f64::INFINITY, f64::min);
            println!(
                "release @{i}: conv {ok} it {iters} k {:.5} J-m1 {:+.6} l1 {:+.4} l2 {:+.5} Q {q:+.2e} res {res:.2e} min1 {min1:+.1e} min2 {min2:+.1e}",
                y.k, j - m1, y.lam[0], y.lam[1]
            );
        }
    }

    #[test]
    #[ignore]
    fn ridge_trace() {
        let params = mixed_params(560.0, 1.0, 1.0);
        let grid = RadialGrid::uniform(3, 24.0, 4096).unwrap();
        let g1 = crate::scalar::solve_unit_ground(
            crate::scalar::ScalarProblem::new(3, 2.5, 1.0).unwrap(),
            Arc::clone(&grid),
        )
        .unwrap();
        let g2 = crate::scalar::solve_unit_ground(
            crate::scalar::ScalarProblem::new(3, 4.0, 1.0).unwrap(),
            Arc::clone(&grid),
        )
        .unwrap();
        let lower = project_sphere(
            &crate::scalar::rescale_to_mass(&g1, 560.0, Arc::clone(&grid)).unwrap().field,
            560.0,
        )
        .unwrap();
        let upper = project_sphere(
            &crate::scalar::rescale_to_mass(&g2, 1.0, Arc::clone(&grid)).unwrap().field,
            1.0,
        )
        .unwrap();
        let m1 = g1.energy_at_mass(560.0).unwrap();
        let msum = m1 + g2.energy_at_mass(1.0).unwrap();
        println!("m1 {m1:+.4}  m_sum {msum:+.4}");

        let u2 = project_sphere(&upper.dilate(-0.105).unwrap(), 1.0).unwrap();
        let start = State::new(lower.clone(), u2).unwrap();
        let pairing = |st: &State| -> f64 {
            let lap = st.u2.apply_laplacian();
            let wq = grid.quad_weights();
            st.u2
                .values()
                .iter()
                .zip(lap.values())
                .zip(wq)
                .map(|((&b, &l), &w)| w * b * l)
                .sum()
        };
        let k0 = pairing(&start);
        println!("k0 {k0:.3}  J0 {:+.4}", energy_j(&params, &start).unwrap());

        let opts = NewtonOptions { tol: 1e-8, max_iters: 120, ..NewtonOptions::default() };
        let positive = |st: &State| -> bool {
            let peak1 = st.u1.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let peak2 = st.u2.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let lo1 = st.u1.values().iter().cloned().fold(f64::INFINITY, f64::min);
            let lo2 = st.u2.values().iter().cloned().fold(f64::INFINITY, f64::min);
            lo1 >= -1e-8 * peak1 && lo2 >= -1e-8 * peak2
        };
        let clean = |st: &State| -> State {
            let v1: Vec<f64> = st.u1.values().iter().map(|v| v.abs()).collect();
            let v2: Vec<f64> = st.u2.values().iter().map(|v| v.abs()).collect();
            State::new(
                project_sphere(&RadialField::new(Arc::clone(&grid), v1).unwrap(), params.a1)
                    .unwrap(),
                project_sphere(&RadialField::new(Arc::clone(&grid), v2).unwrap(), params.a2)
                    .unwrap(),
            )
            .unwrap()
        };
        let solve_pos = |warm: &State, k: f64, nu0: f64| -> RawPinned {
            let raw = pinned_newton(&params, warm, k, nu0, &opts).unwrap();
            if raw.converged && !positive(&raw.state(&grid).unwrap()) {
                let cleaned = clean(&raw.state(&grid).unwrap());
                let again = pinned_newton(&params, &cleaned, k, raw.nu, &opts).unwrap();
                if again.converged && positive(&again.state(&grid).unwrap()) {
                    println!("     recovered positive branch at k {k:.3}");
                    return again;
                }
            }
            raw
        };
        let report = |tag: &str, k: f64, raw: &RawPinned| -> State {
            let st = raw.state(&grid).unwrap();
            let j = energy_j(&params, &st).unwrap();
            let min1 = st.u1.values().iter().cloned().fold(f64::INFINITY, f64::min);
            let min2 = st.u2.values().iter().cloned().fold(f64::INFINITY, f64::min);
            println!(
                "{tag} k {k:9.3} conv {} it {:3} J {j:+10.4} nu {:+.4e} l1 {:+.4} l2 {:+.4} min1 {min1:+.1e} min2 {min2:+.1e}",
                raw.converged, raw.iterations, raw.nu, raw.lam[0], raw.lam[1]
            );
            st
        };

        let mut probes: Vec<(f64, f64, State)> = Vec::new();
        let mut warm = start.clone();
        let mut nu_warm = 0.0;
        for j in 0..16 {
            let k = k0 * 1.18f64.powi(j);
            let raw = solve_pos(&warm, k, nu_warm);
            let st = report("up  ", k, &raw);
            if !raw.converged {
                break;
            }
            warm = st.clone();
            nu_warm = raw.nu;
            probes.push((k, raw.nu, st));
            if raw.nu < -0.2 {
                break;
            }
        }
        warm = start.clone();
        nu_warm = 0.0;
        for j in 1..16 {
            let k = k0 / 1.18f64.powi(j);
            let raw = solve_pos(&warm, k, nu_warm);
            let st = report("down", k, &raw);
            if !raw.converged {
                break;
            }
            warm = st.clone();
            nu_warm = raw.nu;
            probes.push((k, raw.nu, st));
            if raw.nu > 0.2 {
                break;
            }
        }
        probes.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut bracket = None;
        for i in 0..probes.len().saturating_sub(1) {
            if probes[i].1 > 0.0 && probes[i + 1].1 < 0.0 {
                bracket = Some(i);
            }
        }
        let Some(i) = bracket else {
            println!("no nu sign change found");
            return;
        };
        let (mut klo, _, mut stlo) = probes[i].clone();
        let mut khi = probes[i + 1].0;
        let mut best = stlo.clone();
        for _ in 0..30 {
            let kmid = (klo * khi).sqrt();
            let raw = solve_pos(&stlo, kmid, 0.0);
            let st = report("bis ", kmid, &raw);
            if !raw.converged {
                break;
            }
            best = st.clone();
            if raw.nu > 0.0 {
                klo = kmid;
                stlo = st;
            } else {
                khi = kmid;
            }
            if raw.nu.abs() < 1e-8 {
                break;
            }
        }

        let nfree = NewtonOptions { tol: 1e-9, max_iters: 80, ..NewtonOptions::default() };
        let raw = newton_iterate(&params, &best, &nfree, &[]).unwrap();
        let n = grid.len();
        let mut v1 = vec![0.0; n];
        let mut v2 = vec![0.0; n];
        for i in 0..n {
            v1[i] = raw.x[2 * i];
            v2[i] = raw.x[2 * i + 1];
        }
        let st = State::new(
            RadialField::new(Arc::clone(&grid), v1).unwrap(),
            RadialField::new(Arc::clone(&grid), v2).unwrap(),
        )
        .unwrap();
        let j = energy_j(&params, &st).unwrap();
        let (l1, l2) = lagrange_multipliers(&params, &st).unwrap();
        let q = pohozaev_q(&params, &st).unwrap();
        let min1 = st.u1.values().iter().cloned().fold(f64::INFINITY, f64::min);
        let min2 = st.u2.values().iter().cloned().fold(f64::INFINITY, f64::min);
        println!(
            "released: conv {} it {} J {j:+.6} l1 {l1:+.4} l2 {l2:+.4} Q {q:+.2e} min1 {min1:+.1e} min2 {min2:+.1e} kin2 {:.3}",
            raw.converged, raw.iterations, st.u2.grad_norm_sq()
        );
    }

    fn supercritical_params(beta: f64) -> SystemParams {
        SystemParams {
            dim: 3,
            p1: 4.0,
            p2: 4.0,
            r1: 2.0,
            r2: 2.0,
            mu1: 1.0,
            mu2: 1.0,
            beta,
            a1: 1.0,
            a2: 1.0,
        }
    }

    /// Pick a₁ so the decoupled level m₁+m₂ is comfortably negative,
    /// using the scalar rescaling curves.
    fn mixed_masses_with_negative_level() -> (f64, f64, f64) {
        let solve_grid = RadialGrid::uniform(3, 24.0, 1024).unwrap();
        let g1 = solve_unit_ground(
            ScalarProblem::new(3, 2.5, 1.0).unwrap(),
            Arc::clone(&solve_grid),
        )
        .unwrap();
        let g2 = solve_unit_ground(ScalarProblem::new(3, 4.0, 1.0).unwrap(), solve_grid).unwrap();
        let a2 = 16.0;
        let m2 = g2.energy_at_mass(a2).unwrap();
        let mut a1 = 8.0;
        loop {
            let m_sum = g1.energy_at_mass(a1).unwrap() + m2;
            if m_sum < -1.0 {
                return (a1, a2, m_sum);
            }
            a1 *= 2.0;
            assert!(a1 < 1e7, "no negative decoupled level found");
        }
    }

    #[test]
    fn kkt_jacobian_matches_finite_differences() {
        let grid = RadialGrid::uniform(3, 10.0, 96).unwrap();
        let params = mixed_params(2.0, 3.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u1 = sample::decreasing_mixture(&grid, &mut rng, params.a1).unwrap();
        let u2 = sample::decreasing_mixture(&grid, &mut rng, params.a2).unwrap();
        let n = grid.len();
        let mut x = vec![0.0; 2 * n];
        for i in 0..n {
            x[2 * i] = u1.values()[i];
            x[2 * i + 1] = u2.values()[i];
        }
        let lam = [-0.7, -1.3];
        let sys = KktSystem::new(&params, &grid, &x);
        let (band, c, d) = sys.jacobian(&x, lam);

        let peak1 = u1.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let peak2 = u2.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for trial in 0..4 {
            let mut v = vec![0.0; 2 * n];
            for i in 0..n {
                // keep directions off the vacuum tail, where fractional
                // powers are not differentiable
                if x[2 * i] > 1e-5 * peak1 && x[2 * i + 1] > 1e-5 * peak2 {
                    v[2 * i] = rng.gen_range(-1.0..1.0);
                    v[2 * i + 1] = rng.gen_range(-1.0..1.0);
                }
            }
            let vl = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let eps = 3e-7;
            let perturb = |sign: f64| {
                let xs: Vec<f64> =
                    x.iter().zip(&v).map(|(a, b)| a + sign * eps * b).collect();
                let ls = [lam[0] + sign * eps * vl[0], lam[1] + sign * eps * vl[1]];
                sys.residual(&xs, ls)
            };
            let plus = perturb(1.0);
            let minus = perturb(-1.0);

            let jv_band = band.matvec(&v);
            let mut scale = 0.0_f64;
            let mut worst = 0.0_f64;
            for i in 0..2 * n {
                let fd = (plus.f[i] - minus.f[i]) / (2.0 * eps);
                let an = jv_band[i] + c[0][i] * vl[0] + c[1][i] * vl[1];
                worst = worst.max((fd - an).abs());
                scale = scale.max(an.abs());
            }
            assert!(worst <= 3e-5 * (1.0 + scale), "trial {trial}: worst {worst} at scale {scale}");

            let fd_m1 = (plus.mass1 - minus.mass1) / (2.0 * eps);
            let fd_m2 = (plus.mass2 - minus.mass2) / (2.0 * eps);
            assert!((fd_m1 - dot(&d[0], &v)).abs() <= 1e-6 * (1.0 + fd_m1.abs()));
            assert!((fd_m2 - dot(&d[1], &v)).abs() <= 1e-6 * (1.0 + fd_m2.abs()));
        }
    }

    #[test]
    fn decoupled_root_converges_immediately() {
        let grid = RadialGrid::uniform(3, 16.0, 768).unwrap();
        let params = supercritical_params(0.0);
        // mass m_w keeps the rescaling at λ = 1, so the profile is wide
        let g = solve_unit_ground(ScalarProblem::new(3, 4.0, 1.0).unwrap(), Arc::clone(&grid))
            .unwrap();
        let params = SystemParams { a1: g.mass, a2: g.mass, ..params };
        let init = ground_pair(&params, &grid).unwrap();
        let opts = NewtonOptions { tol: 1e-9, ..NewtonOptions::default() };
        let (sol, history) = newton_core(&params, &init, &opts).unwrap();
        assert!(sol.converged, "residual {}", sol.residual_norm);
        assert!(sol.iterations <= 3, "took {} iterations: {history:?}", sol.iterations);
        let expected = 2.0 * g.energy_at_mass(g.mass).unwrap();
        assert!(
            (sol.j_value - expected).abs() <= 1e-5 * (1.0 + expected.abs()),
            "J {} vs decoupled {expected}",
            sol.j_value
        );
        assert!(sol.lambda1 < 0.0 && sol.lambda2 < 0.0);
    }

    #[test]
    fn newton_tail_is_superlinear() {
        let grid = RadialGrid::uniform(3, 16.0, 512).unwrap();
        let g = solve_unit_ground(ScalarProblem::new(3, 4.0, 1.0).unwrap(), Arc::clone(&grid))
            .unwrap();
        let params = SystemParams { a1: g.mass, a2: g.mass, ..supercritical_params(0.1) };
        let base = ground_pair(&params, &grid).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w1 = sample::wobble(&grid, &mut rng).unwrap();
        let w2 = sample::wobble(&grid, &mut rng).unwrap();
        let perturb = |u: &RadialField, w: &RadialField| {
            let vals: Vec<f64> = u
                .values()
                .iter()
                .zip(w.values())
                .map(|(v, p)| v * (1.0 + 0.05 * p))
                .collect();
            RadialField::new(Arc::clone(&grid), vals).unwrap()
        };
        let init = State::new(perturb(&base.u1, &w1), perturb(&base.u2, &w2)).unwrap();
        let opts = NewtonOptions { tol: 1e-11, ..NewtonOptions::default() };
        let (sol, history) = newton_core(&params, &init, &opts).unwrap();
        assert!(sol.converged);
        let k = history.len();
        assert!(k >= 3, "history too short: {history:?}");
        // final contraction factors shrink: the signature of a quadratic tail
        let r1 = history[k - 1] / history[k - 2];
        let r2 = history[k - 2] / history[k - 3];
        assert!(r1 < 0.2 * r2 || history[k - 1] < 1e-13, "tail not superlinear: {history:?}");
        assert!(sol.state.u1.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn mixed_path_brackets_and_refines() {
        let (a1, a2, m_sum) = mixed_masses_with_negative_level();
        let params = mixed_params(a1, a2, 1.0);
        // wide domain: the saddle sits at a strongly spread second component
        let grid = RadialGrid::uniform(3, 48.0, 1536).unwrap();
        let gn_grid = RadialGrid::uniform(3, 20.0, 768).unwrap();
        let popts = PathOptions { samples: 41, ..PathOptions::default() };
        let nopts = NewtonOptions { tol: 1e-8, max_iters: 60, ..NewtonOptions::default() };
        let est = gamma_estimate(&params, &grid, gn_grid, &popts, &nopts).unwrap();

        assert!(m_sum < 0.0);
        assert!(est.gamma_upper <= m_sum + 1e-3 * (1.0 + m_sum.abs()), "level inequality");
        assert!(est.solution.converged, "residual {}", est.solution.residual_norm);
        assert!(est.solution.lambda1 < 0.0 && est.solution.lambda2 < 0.0);
        assert!(est.certificate.endpoints_certified);
        assert!(est.certificate.right_kinetic > 2.0 * est.certificate.c_value);
        let slack = 1e-3 * (1.0 + m_sum.abs());
        assert!(
            est.inf_b_lower - slack <= est.solution.j_value
                && est.solution.j_value <= est.gamma_upper + slack,
            "level {} outside bracket [{}, {}]",
            est.solution.j_value,
            est.inf_b_lower,
            est.gamma_upper
        );
        let norms = StateNorms::of(&params, &est.solution.state).unwrap();
        let scale = norms.kinetic1 + norms.kinetic2;
        assert!(
            est.solution.q_value.abs() <= 1e-4 * scale,
            "Q {} at kinetic scale {scale}",
            est.solution.q_value
        );
    }

    #[test]
    fn path_midpoint_is_the_unscaled_pair() {
        let (a1, a2, _) = mixed_masses_with_negative_level();
        let params = mixed_params(a1, a2, 1.0);
        let grid = RadialGrid::uniform(3, 48.0, 768).unwrap();
        let gn_grid = RadialGrid::uniform(3, 20.0, 512).unwrap();
        let popts = PathOptions { samples: 21, ..PathOptions::default() };
        let path = build_path(&params, &grid, gn_grid, &popts).unwrap();
        let mid = &path.states[10];
        let (_, u_upper) = path_anchors(&params, &grid).unwrap();
        for (a, b) in mid.u2.values().iter().zip(u_upper.values()) {
            assert!((a - b).abs() <= 1e-11 * (1.0 + b.abs()), "{a} vs {b}");
        }
        // the sampled maximum dominates the barrier estimate when the
        // barrier was reachable
        let (_, j_max, _) = path_max(&params, &path).unwrap();
        if path.certificate.b_samples > 0 {
            assert!(j_max >= path.certificate.inf_b_estimate - 1e-6 * (1.0 + j_max.abs()));
        }
    }

    #[test]
    fn beta_zero_recovers_decoupled_level() {
        let (a1, a2, m_sum) = mixed_masses_with_negative_level();
        let params = mixed_params(a1, a2, 0.0);
        let grid = RadialGrid::uniform(3, 24.0, 640).unwrap();
        let gn_grid = RadialGrid::uniform(3, 20.0, 512).unwrap();
        let popts = PathOptions { samples: 21, ..PathOptions::default() };
        let nopts = NewtonOptions { tol: 1e-9, max_iters: 60, ..NewtonOptions::default() };
        let est = gamma_estimate(&params, &grid, gn_grid, &popts, &nopts).unwrap();
        assert!(est.solution.converged);
        assert!(
            (est.solution.j_value - m_sum).abs() <= 1e-4 * (1.0 + m_sum.abs()),
            "J {} vs m1+m2 {m_sum}",
            est.solution.j_value
        );
    }

    #[test]
    fn supercritical_beta_sweep_continues() {
        let params = supercritical_params(0.05);
        let grid = RadialGrid::uniform(3, 1.5, 1024).unwrap();
        let opts = NewtonOptions { tol: 1e-8, max_iters: 60, ..NewtonOptions::default() };
        let records = beta_sweep(&params, &[0.0, 0.02, 0.05], &grid, &opts).unwrap();
        assert_eq!(records.len(), 3);
        for rec in &records {
            assert!(rec.converged, "β = {} failed: residual {}", rec.beta, rec.residual_norm);
            assert!(rec.lambda1 < 0.0 && rec.lambda2 < 0.0);
        }
        let solve_grid = RadialGrid::uniform(3, 24.0, 2048).unwrap();
        let g = solve_unit_ground(ScalarProblem::new(3, 4.0, 1.0).unwrap(), solve_grid).unwrap();
        let m_sum = 2.0 * g.energy_at_mass(1.0).unwrap();
        assert!(
            (records[0].j_value - m_sum).abs() <= 1e-4 * (1.0 + m_sum.abs()),
            "β=0 level {} vs decoupled {m_sum}",
            records[0].j_value
        );
        // levels move continuously along the converged branch
        assert!((records[1].j_value - records[0].j_value).abs() < 0.2 * (1.0 + m_sum.abs()));
    }

    #[test]
    fn regime_gates_hold() {
        let grid = RadialGrid::uniform(3, 10.0, 128).unwrap();
        let gn_grid = RadialGrid::uniform(3, 10.0, 128).unwrap();
        let sub = SystemParams {
            dim: 3,
            p1: 3.0,
            p2: 3.0,
            r1: 1.6,
            r2: 1.6,
            mu1: 1.0,
            mu2: 1.0,
            beta: 1.0,
            a1: 1.0,
            a2: 1.0,
        };
        let err = build_path(&sub, &grid, gn_grid, &PathOptions::default()).unwrap_err();
        assert!(matches!(err, Error::RegimeMismatch { .. }));

        let err =
            beta_sweep(&mixed_params(1.0, 1.0, 1.0), &[1.0], &grid, &NewtonOptions::default())
                .unwrap_err();
        assert!(matches!(err, Error::RegimeMismatch { .. }));
    }
}
