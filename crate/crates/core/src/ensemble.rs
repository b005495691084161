//! Seeded random ensembles in Haar coefficient space.
//!
//! Every random draw in the toolkit comes from SplitMix64: the state advances by
//! `0x9e3779b97f4a7c15` and the output is mixed with the multipliers
//! `0xbf58476d1ce4e5b9` and `0x94d049bb133111eb` (shifts 30, 27, 31). A draw is
//! mapped to `[-1, 1)` as `2 (x >> 11) 2^-53 - 1`. A function consumes one draw
//! for its base mean (skipped when mean-zero) and then one per coefficient in
//! the canonical order (level ascending, cube row-major, pattern lexicographic),
//! scaled by `2^{theta * level}`.

use rand_core::{RngCore, SeedableRng};
pub use rand_xoshiro::SplitMix64;

use crate::dyadic::{GridFunction, GridGeometry};
use crate::haar::{inverse_transform, HaarCoefficients};

/// Shape of a random ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSpec {
    pub geometry: GridGeometry,
    /// Level weight exponent: level-`j` coefficients are scaled by `2^{theta j}`.
    pub theta: f64,
    pub mean_zero: bool,
}

impl EnsembleSpec {
    pub fn new(geometry: GridGeometry, theta: f64, mean_zero: bool) -> Self {
        Self {
            geometry,
            theta,
            mean_zero,
        }
    }
}

pub fn rng_from_seed(seed: u64) -> SplitMix64 {
    SplitMix64::seed_from_u64(seed)
}

/// Uniform draw on `[-1, 1)`.
pub fn symmetric_uniform(rng: &mut impl RngCore) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    2.0 * u - 1.0
}

pub fn random_coefficients(rng: &mut impl RngCore, spec: &EnsembleSpec) -> HaarCoefficients {
    let g = spec.geometry;
    let mut c = HaarCoefficients::zeros(g);
    if !spec.mean_zero {
        c.set_base_mean(symmetric_uniform(rng));
    }
    for level in g.coarsest_level()..g.finest_level() {
        let w = 2f64.powf(spec.theta * level as f64);
        for v in c.level_mut(level) {
            *v = w * symmetric_uniform(rng);
        }
    }
    c
}

pub fn random_function(rng: &mut impl RngCore, spec: &EnsembleSpec) -> GridFunction {
    inverse_transform(&random_coefficients(rng, spec))
}

/// `count` functions drawn in sequence from one generator seeded with `seed`.
pub fn random_ensemble(seed: u64, count: usize, spec: &EnsembleSpec) -> Vec<GridFunction> {
    let mut rng = rng_from_seed(seed);
    (0..count)
        .map(|_| random_function(&mut rng, spec))
        .collect()
}

/// Uniform index in `0..count` (`count > 0`), one draw.
pub fn uniform_index(rng: &mut impl RngCore, count: usize) -> usize {
    (rng.next_u64() % count as u64) as usize
}

/// A mean-zero function with `terms` random Haar terms: each term draws a level,
/// a cube of that level, a pattern and a coefficient in `[-1, 1)`, in that order.
/// Terms landing on the same slot are summed.
pub fn random_haar_span(
    rng: &mut impl RngCore,
    geometry: GridGeometry,
    terms: usize,
) -> GridFunction {
    let mut c = HaarCoefficients::zeros(geometry);
    let e = geometry.pattern_count();
    for _ in 0..terms {
        let level = geometry.coarsest_level() + uniform_index(rng, geometry.depth()) as i32;
        let cube = uniform_index(rng, geometry.cubes_at_level(level));
        let pattern = uniform_index(rng, e);
        let value = symmetric_uniform(rng);
        c.level_mut(level)[cube * e + pattern] += value;
    }
    inverse_transform(&c)
}
