//! Projected descent to the constrained minimum of J.
//!
//! One iteration advances the normalized gradient flow by a semi-implicit
//! step, component by component:
//!
//! ```text
//!   (I + dt·(-Δ)) uᵢ⁺ = uᵢ + dt·(λᵢ(u)uᵢ + fᵢ(u))
//! ```
//!
//! then clips transient negatives and renormalizes both masses. Treating
//! -Δ implicitly removes the grid stability limit on dt entirely; the
//! step is bounded only by the nonlinearity and adapts by backtracking
//! on J. Fixed points of the iteration solve the discrete stationary
//! system exactly, independent of dt.

use std::collections::HashMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::banded::{BandLu, BandMatrix};
use crate::energy::{
    classify_regime, energy_from_norms, gradient_residual, lagrange_multipliers,
    pohozaev_from_norms, signed_pow, Regime, State, StateNorms, SystemParams,
};
use crate::error::{Error, Result};
use crate::grid::{RadialField, RadialGrid};
use crate::sample;
use crate::scalar::{rescale_to_mass, solve_unit_ground, ScalarProblem};

/// Initial-state recipes for the multi-start driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartRecipe {
    /// Decoupled scalar ground states rescaled to (a₁, a₂).
    GroundPair,
    /// A shared Gaussian profile projected onto each sphere.
    GaussianPair,
    /// Multiplicative random perturbations of the ground pair; the
    /// `restarts` option controls how many.
    PerturbedGround,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowOptions {
    /// Initial step; the accepted-step size then floats between dt_min
    /// and dt_max under grow/shrink.
    pub dt: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Backtracking factor applied after a rejected step, in (0,1).
    pub shrink: f64,
    /// Growth factor applied after an accepted step, ≥ 1.
    pub grow: f64,
    /// Convergence target for the weighted-L² residual norm.
    pub tol: f64,
    pub max_iters: usize,
    /// Number of perturbed-ground starts in `global_min_estimate`.
    pub restarts: usize,
    pub seed: u64,
    pub recipes: Vec<StartRecipe>,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            dt: 0.25,
            dt_min: 1e-10,
            dt_max: 8.0,
            shrink: 0.4,
            grow: 1.2,
            tol: 1e-8,
            max_iters: 20_000,
            restarts: 2,
            seed: 7,
            recipes: vec![
                StartRecipe::GroundPair,
                StartRecipe::GaussianPair,
                StartRecipe::PerturbedGround,
            ],
        }
    }
}

impl FlowOptions {
    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParam(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParam(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::InvalidParam(format!(
                "shrink factor must lie in (0,1), got {}",
                self.shrink
            )));
        }
        if !(self.grow >= 1.0) {
            return Err(Error::InvalidParam(format!(
                "growth factor must be ≥ 1, got {}",
                self.grow
            )));
        }
        Ok(())
    }
}

/// A stationary point candidate with its diagnostics. `converged` is the
/// only quality flag: an exhausted iteration budget returns the best
/// iterate flagged false rather than an error.
#[derive(Debug, Clone)]
pub struct Solution {
    pub state: State,
    pub lambda1: f64,
    pub lambda2: f64,
    pub j_value: f64,
    pub q_value: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub regime: Regime,
    pub converged: bool,
}

/// Renormalize onto the mass sphere: u·√(a/mass(u)).
pub fn project_sphere(u: &RadialField, a: f64) -> Result<RadialField> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidParam(format!("target mass must be positive, got {a}")));
    }
    let m = u.mass();
    if m <= 0.0 {
        return Err(Error::ZeroMass);
    }
    let s = (a / m).sqrt();
    let vals = u.values().iter().map(|v| v * s).collect();
    RadialField::new(Arc::clone(u.grid()), vals)
}

struct Diagnostics {
    lambda1: f64,
    lambda2: f64,
    residual: f64,
    j: f64,
    q: f64,
}

fn diagnose(params: &SystemParams, state: &State) -> Result<Diagnostics> {
    let (lambda1, lambda2) = lagrange_multipliers(params, state)?;
    let (r1, r2) = gradient_residual(params, state, lambda1, lambda2)?;
    let g = state.grid();
    let residual =
        (g.residual_norm(r1.values()).powi(2) + g.residual_norm(r2.values()).powi(2)).sqrt();
    let norms = StateNorms::of(params, state)?;
    Ok(Diagnostics {
        lambda1,
        lambda2,
        residual,
        j: energy_from_norms(params, &norms),
        q: pohozaev_from_norms(params, &norms),
    })
}

fn clip_negative(u: &RadialField) -> Result<RadialField> {
    let vals = u.values().iter().map(|v| v.max(0.0)).collect();
    RadialField::new(Arc::clone(u.grid()), vals)
}

/// LU factors of (I + dt·(-Δ)), cached per dt so backtracking that
/// revisits a step size pays the factorization once.
fn implicit_factor(
    cache: &mut HashMap<u64, Arc<BandLu>>,
    grid: &Arc<RadialGrid>,
    dt: f64,
) -> Result<Arc<BandLu>> {
    if let Some(f) = cache.get(&dt.to_bits()) {
        return Ok(Arc::clone(f));
    }
    let n = grid.len();
    let mut mat = BandMatrix::new(n, 2, 2);
    for i in 0..n {
        let (coeffs, start) = grid.laplacian_row(i);
        for (k, c) in coeffs.iter().enumerate() {
            let j = start + k;
            if j < n && *c != 0.0 {
                mat.add(i, j, dt * c);
            }
        }
        mat.add(i, i, 1.0);
    }
    let lu = Arc::new(mat.factor()?);
    if cache.len() > 24 {
        cache.clear();
    }
    cache.insert(dt.to_bits(), Arc::clone(&lu));
    Ok(lu)
}

/// One semi-implicit step from `state`; Err means the candidate was
/// unusable (non-finite solve), which the caller treats as a rejection.
fn try_step(
    params: &SystemParams,
    state: &State,
    lambda1: f64,
    lambda2: f64,
    dt: f64,
    lu: &BandLu,
) -> Result<State> {
    let (u1, u2) = (state.u1.values(), state.u2.values());
    let n = u1.len();
    let mut rhs1 = vec![0.0; n];
    let mut rhs2 = vec![0.0; n];
    for i in 0..n {
        let (a, b) = (u1[i], u2[i]);
        let f1 = params.mu1 * signed_pow(a, params.p1 - 1.0)
            + params.r1 * params.beta * signed_pow(a, params.r1 - 1.0) * b.abs().powf(params.r2);
        let f2 = params.mu2 * signed_pow(b, params.p2 - 1.0)
            + params.r2 * params.beta * signed_pow(b, params.r2 - 1.0) * a.abs().powf(params.r1);
        rhs1[i] = a + dt * (lambda1 * a + f1);
        rhs2[i] = b + dt * (lambda2 * b + f2);
    }
    lu.solve(&mut rhs1)?;
    lu.solve(&mut rhs2)?;
    for v in rhs1.iter_mut().chain(rhs2.iter_mut()) {
        *v = v.max(0.0);
    }
    let grid = state.grid();
    let v1 = project_sphere(&RadialField::new(Arc::clone(grid), rhs1)?, params.a1)?;
    let v2 = project_sphere(&RadialField::new(Arc::clone(grid), rhs2)?, params.a2)?;
    State::new(v1, v2)
}

/// A fixed number of projected semi-implicit steps at constant dt, with
/// no regime gate and no energy control. The saddle search uses this to
/// relax the stable directions; with `freeze_u2` the second component
/// is pinned (it only ever moves along its dilation fiber there) and
/// the flow acts on u₁ alone against the frozen profile.
pub(crate) fn damped_steps(
    params: &SystemParams,
    init: &State,
    steps: usize,
    dt: f64,
    freeze_u2: bool,
) -> Result<State> {
    let grid = Arc::clone(init.grid());
    let mut cache: HashMap<u64, Arc<BandLu>> = HashMap::new();
    let lu = implicit_factor(&mut cache, &grid, dt)?;
    let mut u = init.clone();
    for _ in 0..steps {
        let (l1, l2) = lagrange_multipliers(params, &u)?;
        let mut next = try_step(params, &u, l1, l2, dt, &lu)?;
        if freeze_u2 {
            next = State::new(next.u1, u.u2.clone())?;
        }
        u = next;
    }
    Ok(u)
}

/// Projected semi-implicit steps of the gradient flow reflected along
/// `dir`: ẋ = −g + 2⟨g,dir⟩dir, which descends transverse to `dir` and
/// ascends along it. With `dir` aligned to the unstable direction this
/// contracts toward an index-one saddle; `dir` is held fixed for the
/// burst and must be unit in the weighted-L² metric.
pub(crate) fn reflected_steps(
    params: &SystemParams,
    init: &State,
    dir: &(RadialField, RadialField),
    steps: usize,
    dt: f64,
) -> Result<State> {
    let grid = Arc::clone(init.grid());
    let mut cache: HashMap<u64, Arc<BandLu>> = HashMap::new();
    let lu = implicit_factor(&mut cache, &grid, dt)?;
    let mut u = init.clone();
    for _ in 0..steps {
        let (l1, l2) = lagrange_multipliers(params, &u)?;
        let (g1, g2) = gradient_residual(params, &u, l1, l2)?;
        let gv = grid.integrate(&mul(g1.values(), dir.0.values()))?
            + grid.integrate(&mul(g2.values(), dir.1.values()))?;
        let (u1, u2) = (u.u1.values(), u.u2.values());
        let n = u1.len();
        let mut rhs1 = vec![0.0; n];
        let mut rhs2 = vec![0.0; n];
        for i in 0..n {
            let (a, b) = (u1[i], u2[i]);
            let f1 = params.mu1 * signed_pow(a, params.p1 - 1.0)
                + params.r1
                    * params.beta
                    * signed_pow(a, params.r1 - 1.0)
                    * b.abs().powf(params.r2);
            let f2 = params.mu2 * signed_pow(b, params.p2 - 1.0)
                + params.r2
                    * params.beta
                    * signed_pow(b, params.r2 - 1.0)
                    * a.abs().powf(params.r1);
            rhs1[i] = a + dt * (l1 * a + f1 + 2.0 * gv * dir.0.values()[i]);
            rhs2[i] = b + dt * (l2 * b + f2 + 2.0 * gv * dir.1.values()[i]);
        }
        lu.solve(&mut rhs1)?;
        lu.solve(&mut rhs2)?;
        for v in rhs1.iter_mut().chain(rhs2.iter_mut()) {
            *v = v.max(0.0);
        }
        let v1 = project_sphere(&RadialField::new(Arc::clone(&grid), rhs1)?, params.a1)?;
        let v2 = project_sphere(&RadialField::new(Arc::clone(&grid), rhs2)?, params.a2)?;
        u = State::new(v1, v2)?;
    }
    Ok(u)
}

fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

/// Descend J on S(a₁)×S(a₂) from `init`. Non-convergence within the
/// iteration budget is reported in the returned Solution, not thrown;
/// a wrong regime is a configuration error.
pub fn descend(params: &SystemParams, init: &State, opts: &FlowOptions) -> Result<Solution> {
    params.validate()?;
    opts.validate()?;
    let regime = classify_regime(params);
    if !matches!(regime, Regime::SubcriticalMin | Regime::SubcriticalMinHighDim) {
        return Err(Error::RegimeMismatch {
            op: "descend",
            required: "subcritical-min",
            got: regime.to_string(),
        });
    }
    let grid = Arc::clone(init.grid());
    let mut u = State::new(
        project_sphere(&clip_negative(&init.u1)?, params.a1)?,
        project_sphere(&clip_negative(&init.u2)?, params.a2)?,
    )?;

    let mut cache: HashMap<u64, Arc<BandLu>> = HashMap::new();
    let mut dt = opts.dt.min(opts.dt_max);
    let mut diag = diagnose(params, &u)?;
    let mut iterations = 0;

    while diag.residual > opts.tol && iterations < opts.max_iters {
        let mut accepted = None;
        while dt >= opts.dt_min {
            let lu = implicit_factor(&mut cache, &grid, dt)?;
            if let Ok(cand) = try_step(params, &u, diag.lambda1, diag.lambda2, dt, &lu) {
                let j_cand = energy_from_norms(params, &StateNorms::of(params, &cand)?);
                if j_cand <= diag.j + 1e-12 * (1.0 + diag.j.abs()) {
                    accepted = Some(cand);
                    dt = (dt * opts.grow).min(opts.dt_max);
                    break;
                }
            }
            dt *= opts.shrink;
        }
        match accepted {
            Some(next) => u = next,
            // The step size underflowed: J cannot decrease from here at
            // any usable dt, so report the iterate as-is.
            None => break,
        }
        iterations += 1;
        diag = diagnose(params, &u)?;
    }

    Ok(Solution {
        converged: diag.residual <= opts.tol,
        state: u,
        lambda1: diag.lambda1,
        lambda2: diag.lambda2,
        j_value: diag.j,
        q_value: diag.q,
        residual_norm: diag.residual,
        iterations,
        regime,
    })
}

/// Per-start summary kept alongside the winning Solution.
#[derive(Debug, Clone, Serialize)]
pub struct StartReport {
    pub label: String,
    pub j_value: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Multi-start outcome: the winner plus one report per start.
#[derive(Debug)]
pub struct MultiStart {
    pub best: Solution,
    pub runs: Vec<StartReport>,
}

/// Decoupled scalar ground states rescaled to (a₁, a₂) on `grid`. The
/// unit solves run on their own wide grid: the target grid may be far
/// too narrow to host a unit-width profile (concentrated regimes).
pub(crate) fn ground_pair(params: &SystemParams, grid: &Arc<RadialGrid>) -> Result<State> {
    let solve_grid = RadialGrid::uniform(params.dim, 24.0, 2048)?;
    let g1 = solve_unit_ground(
        ScalarProblem::new(params.dim, params.p1, params.mu1)?,
        Arc::clone(&solve_grid),
    )?;
    let g2 = solve_unit_ground(
        ScalarProblem::new(params.dim, params.p2, params.mu2)?,
        solve_grid,
    )?;
    State::new(
        rescale_to_mass(&g1, params.a1, Arc::clone(grid))?.field,
        rescale_to_mass(&g2, params.a2, Arc::clone(grid))?.field,
    )
}

fn gaussian_pair(params: &SystemParams, grid: &Arc<RadialGrid>) -> Result<State> {
    let sigma = 0.12 * grid.r_max();
    let bump = RadialField::from_fn(Arc::clone(grid), |r| (-r * r / (2.0 * sigma * sigma)).exp())?;
    State::new(project_sphere(&bump, params.a1)?, project_sphere(&bump, params.a2)?)
}

fn perturbed_ground(base: &State, params: &SystemParams, seed: u64) -> Result<State> {
    let grid = base.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w1 = sample::wobble(grid, &mut rng)?;
    let w2 = sample::wobble(grid, &mut rng)?;
    // wobble amplitudes are ≤ 1, so 1 + 0.35·w stays positive.
    let mul = |u: &RadialField, w: &RadialField| -> Result<RadialField> {
        let vals = u
            .values()
            .iter()
            .zip(w.values())
            .map(|(v, p)| v * (1.0 + 0.35 * p))
            .collect();
        RadialField::new(Arc::clone(grid), vals)
    };
    State::new(
        project_sphere(&mul(&base.u1, &w1)?, params.a1)?,
        project_sphere(&mul(&base.u2, &w2)?, params.a2)?,
    )
}

/// Run `descend` from every configured recipe and keep the lowest J among
/// converged runs (lowest residual if none converged, flagged). Starts run
/// in parallel; the result is deterministic for a fixed seed.
pub fn global_min_estimate(
    params: &SystemParams,
    grid: &Arc<RadialGrid>,
    opts: &FlowOptions,
) -> Result<MultiStart> {
    params.validate()?;
    opts.validate()?;
    if opts.recipes.is_empty() {
        return Err(Error::InvalidParam("no start recipes configured".into()));
    }

    let mut starts: Vec<(String, State)> = Vec::new();
    let mut ground: Option<State> = None;
    for recipe in &opts.recipes {
        match recipe {
            StartRecipe::GroundPair => {
                let g = ground_pair(params, grid)?;
                ground = Some(g.clone());
                starts.push(("ground-pair".into(), g));
            }
            StartRecipe::GaussianPair => {
                starts.push(("gaussian-pair".into(), gaussian_pair(params, grid)?));
            }
            StartRecipe::PerturbedGround => {
                let base = match &ground {
                    Some(g) => g.clone(),
                    None => {
                        let g = ground_pair(params, grid)?;
                        ground = Some(g.clone());
                        g
                    }
                };
                for k in 0..opts.restarts.max(1) {
                    let seed = opts.seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(k as u64 + 1));
                    starts.push((format!("perturbed-{k}"), perturbed_ground(&base, params, seed)?));
                }
            }
        }
    }

    let outcomes: Vec<(String, Result<Solution>)> = starts
        .into_par_iter()
        .map(|(label, init)| {
            let sol = descend(params, &init, opts);
            (label, sol)
        })
        .collect();

    let mut runs = Vec::new();
    let mut solutions = Vec::new();
    for (label, outcome) in outcomes {
        let sol = outcome?;
        runs.push(StartReport {
            label,
            j_value: sol.j_value,
            residual_norm: sol.residual_norm,
            iterations: sol.iterations,
            converged: sol.converged,
        });
        solutions.push(sol);
    }

    let best_idx = solutions
        .iter()
        .enumerate()
        .filter(|(_, s)| s.converged)
        .min_by(|a, b| a.1.j_value.total_cmp(&b.1.j_value))
        .map(|(i, _)| i)
        .unwrap_or_else(|| {
            solutions
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.residual_norm.total_cmp(&b.1.residual_norm))
                .map(|(i, _)| i)
                .expect("at least one start")
        });
    Ok(MultiStart { best: solutions.swap_remove(best_idx), runs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::energy_j;

    fn subcritical_params(a1: f64, a2: f64, beta: f64) -> SystemParams {
        SystemParams {
            dim: 3,
            p1: 3.0,
            p2: 3.0,
            r1: 1.6,
            r2: 1.6,
            mu1: 1.0,
            mu2: 1.0,
            beta,
            a1,
            a2,
        }
    }

    fn gaussian_state(grid: &Arc<RadialGrid>, a1: f64, a2: f64) -> State {
        let bump =
            RadialField::from_fn(Arc::clone(grid), |r| (-r * r / 8.0).exp()).unwrap();
        State::new(
            project_sphere(&bump, a1).unwrap(),
            project_sphere(&bump, a2).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn projection_is_exact_and_idempotent() {
        let grid = RadialGrid::uniform(3, 10.0, 128).unwrap();
        let u = RadialField::from_fn(grid, |r| (-r * r).exp()).unwrap();
        let p = project_sphere(&u, 2.5).unwrap();
        assert!((p.mass() - 2.5).abs() <= 1e-14 * 2.5);
        let pp = project_sphere(&p, 2.5).unwrap();
        for (a, b) in p.values().iter().zip(pp.values()) {
            assert!((a - b).abs() <= 1e-15 * (1.0 + a.abs()));
        }
        let zero = RadialField::zeros(Arc::clone(p.grid()));
        assert!(matches!(project_sphere(&zero, 1.0), Err(Error::ZeroMass)));
    }

    #[test]
    fn uncoupled_flow_recovers_scalar_ground_pair() {
        let grid = RadialGrid::uniform(3, 16.0, 512).unwrap();
        let gs = solve_unit_ground(
            ScalarProblem::new(3, 3.0, 1.0).unwrap(),
            Arc::clone(&grid),
        )
        .unwrap();
        let a1 = gs.mass;
        let a2 = 1.9 * gs.mass;
        let params = subcritical_params(a1, a2, 0.0);
        let opts = FlowOptions { tol: 1e-7, max_iters: 40_000, ..FlowOptions::default() };

        let init = gaussian_state(&grid, a1, a2);
        let j0 = energy_j(&params, &init).unwrap();
        let sol = descend(&params, &init, &opts).unwrap();
        assert!(sol.converged, "residual {} after {} iters", sol.residual_norm, sol.iterations);
        assert!(sol.j_value <= j0 + 1e-10 * (1.0 + j0.abs()));

        let expected = gs.energy_at_mass(a1).unwrap() + gs.energy_at_mass(a2).unwrap();
        assert!(
            (sol.j_value - expected).abs() <= 1e-5 * (1.0 + expected.abs()),
            "J {} vs decoupled {}",
            sol.j_value,
            expected
        );

        let (m1, m2) = sol.state.masses();
        assert!((m1 - a1).abs() <= 1e-10 * a1);
        assert!((m2 - a2).abs() <= 1e-10 * a2);
        assert!(sol.state.u1.values().iter().all(|&v| v >= 0.0));
        assert!(sol.state.u2.values().iter().all(|&v| v >= 0.0));
        // Q is a difference of norms that are each O(hundreds) at these
        // masses; the discrete defect is relative, not absolute.
        let norms = StateNorms::of(&params, &sol.state).unwrap();
        let scale = norms.kinetic1 + norms.kinetic2;
        assert!(sol.q_value.abs() <= 5e-5 * scale, "Q = {} at scale {scale}", sol.q_value);

        let lam1 = -gs.lambda_for_mass(a1).unwrap();
        let lam2 = -gs.lambda_for_mass(a2).unwrap();
        assert!(sol.lambda1 < 0.0 && sol.lambda2 < 0.0);
        assert!((sol.lambda1 - lam1).abs() <= 1e-4 * lam1.abs(), "{} vs {}", sol.lambda1, lam1);
        assert!((sol.lambda2 - lam2).abs() <= 1e-4 * lam2.abs(), "{} vs {}", sol.lambda2, lam2);
    }

    #[test]
    fn converged_state_is_a_fixed_point() {
        let grid = RadialGrid::uniform(3, 14.0, 256).unwrap();
        let gs = solve_unit_ground(
            ScalarProblem::new(3, 3.0, 1.0).unwrap(),
            Arc::clone(&grid),
        )
        .unwrap();
        let params = subcritical_params(gs.mass, gs.mass, 0.0);
        let opts = FlowOptions { tol: 1e-6, max_iters: 30_000, ..FlowOptions::default() };
        let first = descend(&params, &gaussian_state(&grid, gs.mass, gs.mass), &opts).unwrap();
        assert!(first.converged);
        let again = descend(&params, &first.state, &opts).unwrap();
        assert!(again.converged);
        assert!(again.iterations <= 1, "took {} iterations", again.iterations);
        assert!((again.j_value - first.j_value).abs() <= 1e-9 * (1.0 + first.j_value.abs()));
    }

    #[test]
    fn coupled_subcritical_example_has_negative_multipliers() {
        let grid = RadialGrid::uniform(3, 30.0, 768).unwrap();
        let params = SystemParams {
            dim: 3,
            p1: 2.5,
            p2: 2.5,
            r1: 1.2,
            r2: 1.2,
            mu1: 1.0,
            mu2: 1.0,
            beta: 1.0,
            a1: 1.0,
            a2: 1.0,
        };
        let opts = FlowOptions { tol: 1e-6, max_iters: 60_000, ..FlowOptions::default() };
        let sol = descend(&params, &gaussian_state(&grid, 1.0, 1.0), &opts).unwrap();
        assert!(sol.converged, "residual {} after {}", sol.residual_norm, sol.iterations);
        assert!(sol.lambda1 < 0.0 && sol.lambda2 < 0.0, "{} {}", sol.lambda1, sol.lambda2);

        let gs = solve_unit_ground(
            ScalarProblem::new(3, 2.5, 1.0).unwrap(),
            Arc::clone(&grid),
        )
        .unwrap();
        let decoupled = 2.0 * gs.energy_at_mass(1.0).unwrap();
        assert!(sol.j_value <= decoupled + 1e-8, "J {} vs {}", sol.j_value, decoupled);
    }

    #[test]
    fn multi_start_agrees_and_is_monotone_in_beta() {
        let grid = RadialGrid::uniform(3, 30.0, 512).unwrap();
        let mk = |beta: f64| SystemParams {
            dim: 3,
            p1: 2.5,
            p2: 2.5,
            r1: 1.2,
            r2: 1.2,
            mu1: 1.0,
            mu2: 1.0,
            beta,
            a1: 1.0,
            a2: 1.0,
        };
        let opts = FlowOptions {
            tol: 1e-6,
            max_iters: 60_000,
            restarts: 1,
            ..FlowOptions::default()
        };
        let low = global_min_estimate(&mk(1.0), &grid, &opts).unwrap();
        assert!(low.runs.iter().all(|r| r.converged));
        let jmin = low.runs.iter().map(|r| r.j_value).fold(f64::INFINITY, f64::min);
        let jmax = low.runs.iter().map(|r| r.j_value).fold(f64::NEG_INFINITY, f64::max);
        assert!(jmax - jmin <= 1e-5 * (1.0 + jmin.abs()), "spread [{jmin}, {jmax}]");

        let high = global_min_estimate(&mk(10.0), &grid, &opts).unwrap();
        assert!(high.best.j_value <= low.best.j_value + 1e-6);
    }

    #[test]
    fn wrong_regime_is_rejected() {
        let grid = RadialGrid::uniform(3, 10.0, 128).unwrap();
        let params = SystemParams {
            dim: 3,
            p1: 2.5,
            p2: 4.0,
            r1: 1.75,
            r2: 2.25,
            mu1: 1.0,
            mu2: 1.0,
            beta: 1.0,
            a1: 1.0,
            a2: 1.0,
        };
        let init = gaussian_state(&grid, 1.0, 1.0);
        let err = descend(&params, &init, &FlowOptions::default()).unwrap_err();
        assert!(matches!(err, Error::RegimeMismatch { .. }), "{err}");
    }

    #[test]
    fn exhausted_budget_is_flagged_not_thrown() {
        let grid = RadialGrid::uniform(3, 12.0, 128).unwrap();
        let params = subcritical_params(4.0, 4.0, 0.5);
        let opts = FlowOptions { max_iters: 2, tol: 1e-12, ..FlowOptions::default() };
        let sol = descend(&params, &gaussian_state(&grid, 4.0, 4.0), &opts).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.iterations, 2);
        assert!(sol.residual_norm.is_finite());
    }
}
