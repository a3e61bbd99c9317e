//! Deterministic random field generators for diagnostics and tests.
//!
//! The self-check suite and several invariant tests need "generic" smooth
//! radial profiles: positive, decreasing from the origin, decayed well
//! before r_max. Sums of origin-centered Gaussians provide that; seeding
//! is the caller's job so reports stay reproducible.

use crate::error::Result;
use crate::grid::{RadialField, RadialGrid};
use rand::Rng;
use std::sync::Arc;

/// Sum of origin-centered Gaussians with widths between 8% and 16% of
/// r_max, rescaled to the requested mass. Strictly decreasing in r.
pub fn decreasing_mixture(
    grid: &Arc<RadialGrid>,
    rng: &mut impl Rng,
    mass: f64,
) -> Result<RadialField> {
    let r_max = grid.r_max();
    let terms: Vec<(f64, f64)> = (0..3)
        .map(|_| {
            let amp = rng.gen_range(0.3..1.0);
            let sigma = rng.gen_range(0.08..0.16) * r_max;
            (amp, sigma)
        })
        .collect();
    let field = RadialField::from_fn(Arc::clone(grid), |r| {
        terms
            .iter()
            .map(|&(amp, sigma)| amp * (-r * r / (2.0 * sigma * sigma)).exp())
            .sum()
    })?;
    rescale_mass(field, mass)
}

/// Smooth sign-indefinite direction field, supported away from r_max.
pub fn wobble(grid: &Arc<RadialGrid>, rng: &mut impl Rng) -> Result<RadialField> {
    let r_max = grid.r_max();
    let sigma = rng.gen_range(0.08..0.14) * r_max;
    let k = rng.gen_range(1.0..3.0) / sigma;
    let phase = rng.gen_range(0.0..std::f64::consts::PI);
    RadialField::from_fn(Arc::clone(grid), move |r| {
        (-r * r / (2.0 * sigma * sigma)).exp() * (k * r + phase).cos()
    })
}

fn rescale_mass(field: RadialField, mass: f64) -> Result<RadialField> {
    let m = field.mass();
    if m <= 0.0 {
        return Err(crate::error::Error::ZeroMass);
    }
    let scale = (mass / m).sqrt();
    let vals: Vec<f64> = field.values().iter().map(|&v| scale * v).collect();
    RadialField::new(Arc::clone(field.grid()), vals)
}
