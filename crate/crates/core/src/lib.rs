//! Radial solvers for normalized two-component nonlinear Schrodinger
//! systems.
//!
//! The object of study is the coupled system
//!
//! ```text
//!   -Δu₁ = λ₁u₁ + μ₁|u₁|^(p₁-2)u₁ + r₁ β |u₁|^(r₁-2)|u₂|^(r₂) u₁
//!   -Δu₂ = λ₂u₂ + μ₂|u₂|^(p₂-2)u₂ + r₂ β |u₁|^(r₁)|u₂|^(r₂-2) u₂
//! ```
//!
//! on ℝᴺ with both masses ∫uᵢ² prescribed; the multipliers λᵢ are part of
//! the unknown. Everything is reduced to radial profiles on a truncated
//! interval [0, r_max].
//!
//! Module map:
//! - [`grid`]: radial grids, quadrature, stencils, dilation
//! - [`scalar`]: single-component ground states by shooting, mass rescaling
//! - [`energy`]: system energy, constraint functionals, scaling thresholds
//! - [`flow`]: projected gradient descent for the constrained minimization
//! - [`minimax`]: paths, mountain-pass estimates, Newton refinement
//! - [`banded`]: banded LU with partial pivoting for the Newton systems
//! - [`checks`]: self-diagnostics behind the CLI `check` subcommand

pub mod banded;
pub mod energy;
pub mod error;
pub mod flow;
pub mod grid;
mod interp;
pub mod minimax;
pub mod sample;
pub mod scalar;

pub use energy::{
    classify_regime, energy_j, fiber_point, fiber_profile, gn_constant, gradient_residual,
    lagrange_multipliers, pohozaev_q, threshold_c, FiberPoint, Regime, State, StateNorms,
    SystemParams, Threshold,
};
pub use error::{Error, Result};
pub use flow::{
    descend, global_min_estimate, project_sphere, FlowOptions, MultiStart, Solution, StartRecipe,
    StartReport,
};
pub use grid::{mixed_term, RadialField, RadialGrid};
pub use minimax::{
    beta_sweep, build_path, gamma_estimate, newton_refine, path_max, BetaRecord, GammaEstimate,
    NewtonOptions, Path, PathCertificate, PathOptions,
};
pub use scalar::{
    level_curve, rescale_to_mass, solve_unit_ground, GroundState, LevelPoint, Rescaled,
    ScalarProblem,
};
