//! Empirical operator norms, equivalence constants and compactness diagnostics.
//!
//! Every number reported here is either an exact computation on the grid or a
//! lower bound certified by an explicit input; nothing estimates a true operator
//! norm from above.

use std::fmt;

use crate::dyadic::{DyadicCube, GridFunction};
use crate::error::{Error, Result};
use crate::haar::{
    forward_transform, haar_function, inverse_transform, square_function, HaarCoefficients,
    SignPattern,
};
use crate::norms::{bmo_norm, level_oscillations, lq_norm, morrey_value, SpaceParams};
use crate::operators::{
    commutator_direct, commutator_tail_high, commutator_tail_low, paraproduct, spatial_truncate,
    FractionalParams,
};

/// The input that attains a reported ratio.
#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    None,
    /// Position in the probe ensemble.
    Ensemble(usize),
    /// `h^eps_Q` divided by its Morrey norm.
    Haar {
        eps: SignPattern,
        cube: DyadicCube,
    },
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::None => write!(f, "none"),
            Witness::Ensemble(i) => write!(f, "probe[{i}]"),
            Witness::Haar { eps, cube } => write!(f, "h[{}]{cube}", eps.code()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpNormEstimate {
    pub lower: f64,
    /// Largest ratio seen over the search family.
    pub probe_max: f64,
    pub ensemble_size: usize,
    pub witness: Witness,
}

/// `||T f||_out / ||f||_in`, or `None` when `||f||_in = 0`.
pub fn probe_ratio<T>(
    op: &T,
    f: &GridFunction,
    input: SpaceParams,
    output: SpaceParams,
) -> Result<Option<f64>>
where
    T: Fn(&GridFunction) -> Result<GridFunction> + ?Sized,
{
    let den = morrey_value(f, input);
    if den == 0.0 {
        return Ok(None);
    }
    Ok(Some(morrey_value(&op(f)?, output) / den))
}

/// Largest ratio `||T f||_out / ||f||_in` over the ensemble; zero-norm inputs are
/// skipped and ties keep the first index.
pub fn opnorm_probe<T>(
    op: &T,
    input: SpaceParams,
    output: SpaceParams,
    ensemble: &[GridFunction],
) -> Result<OpNormEstimate>
where
    T: Fn(&GridFunction) -> Result<GridFunction> + ?Sized,
{
    let mut best: Option<(usize, f64)> = None;
    for (i, f) in ensemble.iter().enumerate() {
        if let Some(r) = probe_ratio(op, f, input, output)? {
            if best.is_none_or(|(_, b)| r > b) {
                best = Some((i, r));
            }
        }
    }
    let (index, value) =
        best.ok_or_else(|| Error::Input("every probe function has zero norm".into()))?;
    Ok(OpNormEstimate {
        lower: value,
        probe_max: value,
        ensemble_size: ensemble.len(),
        witness: Witness::Ensemble(index),
    })
}

/// Normalized Haar test function `h^eps_Q / ||h^eps_Q||_{M^p_q}`.
pub fn normalized_haar(
    eps: SignPattern,
    cube: &DyadicCube,
    f_geometry: &crate::dyadic::GridGeometry,
    params: SpaceParams,
) -> Result<GridFunction> {
    let h = haar_function(eps, cube, f_geometry)?;
    Ok(h.scale(1.0 / morrey_value(&h, params)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CubeTesting {
    /// `max_{U, eps} ||[a, I_alpha] (h^eps_U / ||h^eps_U||_{M^p_q})||_{M^s_t}`.
    pub estimate: OpNormEstimate,
    /// `max_U m_U(|sum_eps sum_{Q in U} <a, h^eps_Q> h^eps_Q|)`.
    pub bmo_side: f64,
    pub bmo_side_witness: DyadicCube,
}

/// Commutator tested on every normalized Haar function of the geometry.
pub fn cube_testing_lower(
    a: &GridFunction,
    alpha: f64,
    params: SpaceParams,
) -> Result<CubeTesting> {
    let g = *a.geometry();
    let target = FractionalParams::new(alpha, g.dim())?.target(params)?;
    let mut best = (0.0f64, Witness::None);
    let mut tested = 0;
    for level in g.coarsest_level()..g.finest_level() {
        for cube in g.cubes(level) {
            for eps in SignPattern::all(g.dim()) {
                let f = normalized_haar(eps, &cube, &g, params)?;
                let v = morrey_value(&commutator_direct(a, &f, alpha)?, target);
                tested += 1;
                if v > best.0 {
                    best = (
                        v,
                        Witness::Haar {
                            eps,
                            cube: cube.clone(),
                        },
                    );
                }
            }
        }
    }
    // The Haar part of a below U is (a - m_U a) chi_U, so this is the largest
    // mean oscillation.
    let mut side = (0.0f64, g.base_cube());
    for (l, row) in level_oscillations(a).iter().enumerate() {
        for (lin, &v) in row.iter().enumerate() {
            if v > side.0 {
                side = (v, g.cube_at(g.coarsest_level() + l as i32, lin));
            }
        }
    }
    Ok(CubeTesting {
        estimate: OpNormEstimate {
            lower: best.0,
            probe_max: best.0,
            ensemble_size: tested,
            witness: best.1,
        },
        bmo_side: side.0,
        bmo_side_witness: side.1,
    })
}

/// Ratio columns are `0` when their denominator vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeTestingRow {
    pub bmo: f64,
    pub lower: f64,
    pub probe: f64,
    pub bmo_over_lower: f64,
    pub probe_over_bmo: f64,
}

fn ratio_or_zero(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Per symbol `a`: its BMO norm, the cube-testing lower bound, and the probe
/// maximum of `[a, I_alpha]` over a shared ensemble.
pub fn cube_testing_report(
    symbols: &[GridFunction],
    alpha: f64,
    params: SpaceParams,
    probes: &[GridFunction],
) -> Result<Vec<CubeTestingRow>> {
    let dim = match symbols.first() {
        Some(a) => a.geometry().dim(),
        None => return Ok(Vec::new()),
    };
    let target = FractionalParams::new(alpha, dim)?.target(params)?;
    symbols
        .iter()
        .map(|a| {
            let bmo = bmo_norm(a);
            let lower = cube_testing_lower(a, alpha, params)?.estimate.lower;
            let op = |f: &GridFunction| commutator_direct(a, f, alpha);
            let probe = opnorm_probe(&op, params, target, probes)?.probe_max;
            Ok(CubeTestingRow {
                bmo,
                lower,
                probe,
                bmo_over_lower: ratio_or_zero(bmo, lower),
                probe_over_bmo: ratio_or_zero(probe, bmo),
            })
        })
        .collect()
}

/// Norm used on both sides of a paraproduct ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    Lebesgue(f64),
    Morrey(SpaceParams),
}

impl NormKind {
    pub fn eval(&self, f: &GridFunction) -> Result<f64> {
        match *self {
            NormKind::Lebesgue(q) => lq_norm(f, q, None),
            NormKind::Morrey(params) => Ok(morrey_value(f, params)),
        }
    }
}

/// `max_f ||Pi_a f|| / ||f||` over the ensemble (zero-norm inputs skipped).
pub fn paraproduct_bmo_norm(
    a: &GridFunction,
    norm: NormKind,
    ensemble: &[GridFunction],
) -> Result<f64> {
    let q = match norm {
        NormKind::Lebesgue(q) => q,
        NormKind::Morrey(params) => params.q(),
    };
    if q <= 1.0 {
        return Err(Error::Parameter(format!("q = {q} violates q > 1")));
    }
    let mut best = 0.0f64;
    for f in ensemble {
        let den = norm.eval(f)?;
        if den > 0.0 {
            best = best.max(norm.eval(&paraproduct(a, f)?)? / den);
        }
    }
    Ok(best)
}

/// Measured values over a strictly increasing parameter grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayProfile {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl DecayProfile {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::Shape("grid and values differ in length".into()));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parameter(
                "profile grid is not strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::Input("profile values must be nonnegative".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// No value exceeds its predecessor by more than `rel_tol` of the predecessor
    /// (or of the profile maximum when the predecessor is zero).
    pub fn is_nonincreasing(&self, rel_tol: f64) -> bool {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(*v));
        self.values.windows(2).all(|w| {
            let slack = if w[0] > 0.0 { w[0] } else { scale };
            w[1] <= w[0] + rel_tol * slack
        })
    }

    /// Largest step-up `(v[k+1] - v[k]) / v[k]`, measured against the profile
    /// maximum where `v[k] = 0`; `0` for a nonincreasing profile.
    pub fn max_relative_increase(&self) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(*v));
        self.values.windows(2).fold(0.0f64, |m, w| {
            let base = if w[0] > 0.0 { w[0] } else { scale };
            if base > 0.0 {
                m.max((w[1] - w[0]) / base)
            } else {
                m
            }
        })
    }

    /// First grid point from which every value is exactly zero.
    pub fn zero_from(&self) -> Option<f64> {
        let k = self
            .values
            .iter()
            .rposition(|&v| v != 0.0)
            .map_or(0, |i| i + 1);
        self.grid.get(k).copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompactnessReport {
    /// Probe maximum of `[a, I_alpha]_{>= L}`.
    pub high: DecayProfile,
    /// Probe maximum of `[a, I_alpha]_{<= -L}`.
    pub low: DecayProfile,
    /// `max_nu ||sum_{|m| > R} <a, h_{nu m}> h_{nu m}||_BMO`.
    pub spatial: DecayProfile,
    /// `||a - a_(L)||_BMO`.
    pub vmo_distance: DecayProfile,
}

pub fn compactness_diagnostic(
    a: &GridFunction,
    alpha: f64,
    params: SpaceParams,
    l_grid: &[u32],
    r_grid: &[f64],
    probes: &[GridFunction],
) -> Result<CompactnessReport> {
    let g = *a.geometry();
    let target = FractionalParams::new(alpha, g.dim())?.target(params)?;
    let grid: Vec<f64> = l_grid.iter().map(|&l| l as f64).collect();
    let coeffs = forward_transform(a);
    let mut high = Vec::with_capacity(l_grid.len());
    let mut low = Vec::with_capacity(l_grid.len());
    let mut vmo = Vec::with_capacity(l_grid.len());
    for &cut in l_grid {
        let op_high =
            |f: &GridFunction| Ok(commutator_tail_high(a, f, alpha, cut as i32)?.function);
        high.push(opnorm_probe(&op_high, params, target, probes)?.probe_max);
        let op_low = |f: &GridFunction| Ok(commutator_tail_low(a, f, alpha, cut as i32)?.function);
        low.push(opnorm_probe(&op_low, params, target, probes)?.probe_max);
        vmo.push(bmo_norm(&scale_remainder(&coeffs, cut)));
    }
    let mut spatial = Vec::with_capacity(r_grid.len());
    for &radius in r_grid {
        let mut worst = 0.0f64;
        for level in g.coarsest_level()..g.finest_level() {
            worst = worst.max(bmo_norm(&spatial_truncate(a, level, radius)?));
        }
        spatial.push(worst);
    }
    Ok(CompactnessReport {
        high: DecayProfile::new(grid.clone(), high)?,
        low: DecayProfile::new(grid.clone(), low)?,
        spatial: DecayProfile::new(r_grid.to_vec(), spatial)?,
        vmo_distance: DecayProfile::new(grid, vmo)?,
    })
}

/// `a - a_(L)` built from the discarded coefficients, so it is exactly zero
/// once `[-L, L]` covers every level.
fn scale_remainder(c: &HaarCoefficients, cut: u32) -> GridFunction {
    let cut = cut as i64;
    let mut rest = c.filter(|j, _, _| (j as i64) < -cut || j as i64 > cut);
    rest.set_base_mean(0.0);
    inverse_transform(&rest)
}

/// Smallest and largest of a family of ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioBand {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl RatioBand {
    /// Band of the finite ratios in `values`; `None` when there are none.
    pub fn from_ratios(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let mut band: Option<Self> = None;
        for v in values.into_iter().filter(|v| v.is_finite()) {
            band = Some(match band {
                None => Self {
                    min: v,
                    max: v,
                    count: 1,
                },
                Some(b) => Self {
                    min: b.min.min(v),
                    max: b.max.max(v),
                    count: b.count + 1,
                },
            });
        }
        band
    }

    /// `max / min`.
    pub fn spread(&self) -> f64 {
        self.max / self.min
    }
}

/// `sum_eps ||S^eps f||` in the given norm.
pub fn square_function_sum(f: &GridFunction, norm: NormKind) -> Result<f64> {
    SignPattern::all(f.geometry().dim())
        .into_iter()
        .map(|eps| norm.eval(&square_function(f, eps)))
        .sum()
}

/// `||f|| / sum_eps ||S^eps f||`; `None` when the denominator vanishes.
pub fn square_function_ratio(f: &GridFunction, norm: NormKind) -> Result<Option<f64>> {
    let den = square_function_sum(f, norm)?;
    if den == 0.0 {
        return Ok(None);
    }
    Ok(Some(norm.eval(f)? / den))
}

/// `||f||_{M^p_q} / (sum_eps ||S^eps f||_{M^p_q} + ||f||_{M^p_1})`, the
/// nonhomogeneous square-function comparison; `None` for `f = 0`.
pub fn local_square_function_ratio(f: &GridFunction, params: SpaceParams) -> Result<Option<f64>> {
    let den = square_function_sum(f, NormKind::Morrey(params))?
        + morrey_value(f, SpaceParams::new(params.p(), 1.0)?);
    if den == 0.0 {
        return Ok(None);
    }
    Ok(Some(morrey_value(f, params) / den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::GridGeometry;
    use crate::operators::fractional_integral;

    fn geo(n: usize, j0: i32, j1: i32) -> GridGeometry {
        GridGeometry::new(n, j0, j1).unwrap()
    }

    fn probes(g: GridGeometry) -> Vec<GridFunction> {
        vec![
            GridFunction::from_fn(g, |x| (5.0 * x[0]).sin()),
            GridFunction::zeros(g),
            GridFunction::from_fn(g, |x| x[0] * x[0] - 0.3),
        ]
    }

    #[test]
    fn identity_probe_is_one() {
        let g = geo(1, 0, 5);
        let params = SpaceParams::new(3.0, 2.0).unwrap();
        let id = |f: &GridFunction| Ok(f.clone());
        let est = opnorm_probe(&id, params, params, &probes(g)).unwrap();
        assert!((est.probe_max - 1.0).abs() < 1e-15);
        let twice = |f: &GridFunction| Ok(f.scale(2.0));
        let est2 = opnorm_probe(&twice, params, params, &probes(g)).unwrap();
        assert!((est2.probe_max - 2.0).abs() < 1e-15);
        assert!(opnorm_probe(&id, params, params, &[GridFunction::zeros(g)]).is_err());
    }

    #[test]
    fn fractional_probe_on_haar() {
        let g = geo(1, 0, 6);
        let params = SpaceParams::new(1.6, 1.2).unwrap();
        let alpha = 0.25;
        let target = FractionalParams::new(alpha, 1)
            .unwrap()
            .target(params)
            .unwrap();
        let eps = SignPattern::new(&[1]).unwrap();
        let q = DyadicCube::new(3, vec![5]);
        let h = haar_function(eps, &q, &g).unwrap();
        let op = |f: &GridFunction| fractional_integral(f, alpha);
        let est = opnorm_probe(&op, params, target, std::slice::from_ref(&h)).unwrap();
        let expect = q.measure().powf(alpha) * morrey_value(&h, target) / morrey_value(&h, params);
        assert!((est.probe_max - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn cube_testing_constant_and_scaling() {
        let g = geo(1, 0, 4);
        let params = SpaceParams::new(1.6, 1.2).unwrap();
        let c = cube_testing_lower(&GridFunction::constant(g, 3.0), 0.5, params).unwrap();
        assert!(c.estimate.lower.abs() < 1e-12);
        let eps = SignPattern::new(&[1]).unwrap();
        let u = DyadicCube::new(1, vec![1]);
        let a = haar_function(eps, &u, &g).unwrap();
        let one = cube_testing_lower(&a, 0.5, params).unwrap();
        let two = cube_testing_lower(&a.scale(2.0), 0.5, params).unwrap();
        assert!(one.estimate.lower > 0.0);
        assert!((two.estimate.lower - 2.0 * one.estimate.lower).abs() < 1e-12);
        assert!((one.bmo_side - bmo_norm(&a)).abs() < 1e-14);
    }

    #[test]
    fn cube_testing_zero_row() {
        let g = geo(1, 0, 4);
        let params = SpaceParams::new(1.6, 1.2).unwrap();
        let rows =
            cube_testing_report(&[GridFunction::zeros(g)], 0.25, params, &probes(g)).unwrap();
        assert_eq!(
            rows[0],
            CubeTestingRow {
                bmo: 0.0,
                lower: 0.0,
                probe: 0.0,
                bmo_over_lower: 0.0,
                probe_over_bmo: 0.0
            }
        );
    }

    #[test]
    fn paraproduct_of_constant_symbol() {
        let g = geo(1, 0, 4);
        let v = paraproduct_bmo_norm(
            &GridFunction::constant(g, 2.0),
            NormKind::Lebesgue(2.0),
            &probes(g),
        )
        .unwrap();
        assert_eq!(v, 0.0);
        assert!(
            paraproduct_bmo_norm(&GridFunction::zeros(g), NormKind::Lebesgue(1.0), &probes(g))
                .is_err()
        );
    }

    #[test]
    fn decay_profile_checks() {
        assert!(DecayProfile::new(vec![1.0, 1.0], vec![0.0, 0.0]).is_err());
        let p = DecayProfile::new(vec![0.0, 1.0, 2.0], vec![2.0, 1.0, 0.0]).unwrap();
        assert!(p.is_nonincreasing(0.0));
        assert_eq!(p.zero_from(), Some(2.0));
        let q = DecayProfile::new(vec![0.0, 1.0], vec![1.0, 1.5]).unwrap();
        assert!(!q.is_nonincreasing(1e-12));
        assert_eq!(q.zero_from(), None);
    }

    #[test]
    fn compactness_of_constant_symbol() {
        let g = geo(1, -1, 4);
        let params = SpaceParams::new(1.6, 1.2).unwrap();
        let r = compactness_diagnostic(
            &GridFunction::constant(g, 1.0),
            0.25,
            params,
            &[0, 1, 2],
            &[0.0, 1.0],
            &probes(g),
        )
        .unwrap();
        for prof in [&r.high, &r.low, &r.spatial, &r.vmo_distance] {
            assert!(prof.values().iter().all(|&v| v < 1e-12));
        }
    }
}
