//! Dyadic fractional integral, paraproducts, commutators and their truncations.
//!
//! All operators act in Haar coefficient space and are exact at the finest
//! level: products of grid functions are cellwise, and `I_alpha` is the
//! multiplier `<f, h^eps_Q> -> |Q|^{alpha/n} <f, h^eps_Q>`.

use std::ops::RangeInclusive;

use crate::dyadic::{level_sums, GridFunction, GridGeometry};
use crate::error::{Error, Result};
use crate::haar::{forward_transform, inverse_transform, HaarCoefficients, SignPattern};
use crate::norms::{morrey_value, SpaceParams};

/// Order `0 < alpha < n` of the fractional integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionalParams {
    alpha: f64,
    dim: usize,
}

impl FractionalParams {
    pub fn new(alpha: f64, dim: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < dim as f64) {
            return Err(Error::Parameter(format!(
                "alpha = {alpha} outside (0, n) with n = {dim}"
            )));
        }
        Ok(Self { alpha, dim })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Target exponents `(s, t)` with `1/s = 1/p - alpha/n` and `t/s = q/p`.
    pub fn target(&self, source: SpaceParams) -> Result<SpaceParams> {
        let inv_s = 1.0 / source.p() - self.alpha / self.dim as f64;
        if inv_s <= 0.0 {
            return Err(Error::Parameter(format!(
                "1/s = 1/p - alpha/n = {inv_s} is not positive (p = {}, alpha = {}, n = {})",
                source.p(),
                self.alpha,
                self.dim
            )));
        }
        let s = 1.0 / inv_s;
        let t = s * source.q() / source.p();
        SpaceParams::new(s, t)
    }

    /// `|Q|^{alpha/n}` for a cube of the given level.
    pub fn level_weight(&self, level: i32) -> f64 {
        2f64.powf(-(level as f64) * self.alpha)
    }
}

fn check_alpha(geometry: &GridGeometry, alpha: f64) -> Result<FractionalParams> {
    FractionalParams::new(alpha, geometry.dim())
}

pub(crate) fn fractional_coeffs(c: &HaarCoefficients, frac: FractionalParams) -> HaarCoefficients {
    let mut out = c.map_indexed(|level, _, _, v| frac.level_weight(level) * v);
    out.set_base_mean(0.0);
    out
}

/// `I_{alpha,dyadic} f`; the base mean is sent to zero.
pub fn fractional_integral(f: &GridFunction, alpha: f64) -> Result<GridFunction> {
    let frac = check_alpha(f.geometry(), alpha)?;
    Ok(inverse_transform(&fractional_coeffs(
        &forward_transform(f),
        frac,
    )))
}

/// `I_alpha(|Q|^{-1} chi_Q)` split into its constant value on `Q` and what leaks
/// outside `Q` through the sibling halves of the ancestors.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpProfile {
    /// Value on `Q` from the direct transform.
    pub on_cube: f64,
    /// `|Q|^{alpha/n - 1} (2^n - 1) sum_{k=1}^K 2^{-k(n - alpha)}`, `K` ancestor scales.
    pub closed_form: f64,
    /// Largest `|I_alpha(|Q|^{-1} chi_Q)|` outside `Q`.
    pub off_cube_max: f64,
}

pub fn fractional_bump(
    geometry: &GridGeometry,
    cube: &crate::dyadic::DyadicCube,
    alpha: f64,
) -> Result<BumpProfile> {
    check_alpha(geometry, alpha)?;
    let bump = GridFunction::indicator(*geometry, cube)?.scale(1.0 / cube.measure());
    let image = fractional_integral(&bump, alpha)?;
    let inside = geometry.cells_in(cube);
    let on_cube = image.values()[inside[0]];
    let mut is_inside = vec![false; geometry.cell_count()];
    for &c in &inside {
        is_inside[c] = true;
    }
    let off_cube_max = image
        .values()
        .iter()
        .zip(&is_inside)
        .filter(|(_, &inside)| !inside)
        .fold(0.0f64, |m, (v, _)| m.max(v.abs()));
    let n = geometry.dim() as f64;
    let ancestors = cube.level() - geometry.coarsest_level();
    let series: f64 = (1..=ancestors)
        .map(|k| 2f64.powf(-(k as f64) * (n - alpha)))
        .sum();
    let closed_form = cube.measure().powf(alpha / n - 1.0) * (2f64.powf(n) - 1.0) * series;
    Ok(BumpProfile {
        on_cube,
        closed_form,
        off_cube_max,
    })
}

/// `m_Q(f)` for every cube, coarsest level first.
pub(crate) fn level_means(f: &GridFunction) -> Vec<Vec<f64>> {
    let g = f.geometry();
    let mut sums = level_sums(g, f.values());
    for (l, row) in sums.iter_mut().enumerate() {
        let level = g.coarsest_level() + l as i32;
        let per_cube = (g.cell_count() / g.cubes_at_level(level)) as f64;
        for v in row.iter_mut() {
            *v /= per_cube;
        }
    }
    sums
}

/// Coefficients `weight(Q) <a, h^eps_Q> m_Q(f)`, restricted to one pattern if given.
fn paraproduct_coeffs(
    ca: &HaarCoefficients,
    f: &GridFunction,
    eps: Option<SignPattern>,
    weight: impl Fn(i32) -> f64,
) -> HaarCoefficients {
    let means = level_means(f);
    let j0 = f.geometry().coarsest_level();
    let mut out = ca.map_indexed(|level, lin, code, v| {
        if eps.is_none_or(|p| p.code() == code) {
            weight(level) * means[(level - j0) as usize][lin] * v
        } else {
            0.0
        }
    });
    out.set_base_mean(0.0);
    out
}

fn same_geometry(a: &GridFunction, f: &GridFunction) -> Result<()> {
    if a.geometry() != f.geometry() {
        return Err(Error::Shape(format!(
            "geometry mismatch: {:?} vs {:?}",
            a.geometry(),
            f.geometry()
        )));
    }
    Ok(())
}

/// `Pi_a f = sum_eps sum_Q m_Q(f) <a, h^eps_Q> h^eps_Q`.
pub fn paraproduct(a: &GridFunction, f: &GridFunction) -> Result<GridFunction> {
    paraproduct_pattern(a, f, None)
}

/// One pattern of the paraproduct, or all of them for `None`.
pub fn paraproduct_pattern(
    a: &GridFunction,
    f: &GridFunction,
    eps: Option<SignPattern>,
) -> Result<GridFunction> {
    same_geometry(a, f)?;
    Ok(inverse_transform(&paraproduct_coeffs(
        &forward_transform(a),
        f,
        eps,
        |_| 1.0,
    )))
}

/// The form without the `1/|Q|`: `sum <f, chi_Q> <a, h^eps_Q> h^eps_Q`.
pub fn paraproduct_unnormalized(a: &GridFunction, f: &GridFunction) -> Result<GridFunction> {
    same_geometry(a, f)?;
    let g = *f.geometry();
    Ok(inverse_transform(&paraproduct_coeffs(
        &forward_transform(a),
        f,
        None,
        |level| g.cube_measure(level),
    )))
}

/// `a I_alpha f - I_alpha(a f)`, products taken cellwise.
pub fn commutator_direct(a: &GridFunction, f: &GridFunction, alpha: f64) -> Result<GridFunction> {
    same_geometry(a, f)?;
    let ia_f = fractional_integral(f, alpha)?;
    let i_af = fractional_integral(&a.checked_mul(f)?, alpha)?;
    a.checked_mul(&ia_f)?.checked_sub(&i_af)
}

/// The four pieces of the commutator for one pattern `eps` of `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct CommutatorTerms {
    pub eps: SignPattern,
    /// `sum_Q m_Q(I_alpha f) <a, h^eps_Q> h^eps_Q`.
    pub i1: GridFunction,
    /// `sum_Q |Q|^{alpha/n} m_Q(f) <a, h^eps_Q> h^eps_Q`.
    pub i2: GridFunction,
    /// `sum_Q <a, h^eps_Q> <f, h^eps_Q> |Q|^{alpha/n} |h^eps_Q|^2`.
    pub ii: GridFunction,
    /// `I_alpha [sum_Q <a, h^eps_Q> <f, h^eps_Q> |h^eps_Q|^2]`.
    pub iii: GridFunction,
}

impl CommutatorTerms {
    /// `I1 - I2 + II - III`.
    pub fn combined(&self) -> GridFunction {
        &(&(&self.i1 - &self.i2) + &self.ii) - &self.iii
    }
}

pub fn commutator_terms(
    a: &GridFunction,
    f: &GridFunction,
    alpha: f64,
    eps: SignPattern,
) -> Result<CommutatorTerms> {
    same_geometry(a, f)?;
    let g = *f.geometry();
    let frac = check_alpha(&g, alpha)?;
    if eps.dim() != g.dim() {
        return Err(Error::Shape(
            "pattern dimension differs from geometry".into(),
        ));
    }
    let ca = forward_transform(a);
    let cf = forward_transform(f);
    let ia_f = inverse_transform(&fractional_coeffs(&cf, frac));

    let i1 = inverse_transform(&paraproduct_coeffs(&ca, &ia_f, Some(eps), |_| 1.0));
    let i2 = inverse_transform(&paraproduct_coeffs(&ca, f, Some(eps), |level| {
        frac.level_weight(level)
    }));

    // Diagonal products <a,h><f,h> |h|^2 = <a,h><f,h> |Q|^{-1} chi_Q.
    let e = g.pattern_count();
    let mut diag = vec![0.0; g.cell_count()];
    let mut diag_weighted = vec![0.0; g.cell_count()];
    for level in g.coarsest_level()..g.finest_level() {
        let inv = 1.0 / g.cube_measure(level);
        let w = frac.level_weight(level);
        let (la, lf) = (ca.level(level), cf.level(level));
        for (cell, &q) in g.ancestor_map(level).iter().enumerate() {
            let slot = q * e + eps.ordinal();
            let prod = la[slot] * lf[slot] * inv;
            diag[cell] += prod;
            diag_weighted[cell] += w * prod;
        }
    }
    let ii = GridFunction::new(g, diag_weighted)?;
    let iii = fractional_integral(&GridFunction::new(g, diag)?, alpha)?;
    Ok(CommutatorTerms {
        eps,
        i1,
        i2,
        ii,
        iii,
    })
}

/// A function produced by a scale or spatial cut, with the levels actually kept
/// after clipping the requested band to `[j_min, J-1]` (`None` when empty).
#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    pub function: GridFunction,
    pub kept_levels: Option<RangeInclusive<i32>>,
}

fn clip_band(g: &GridGeometry, lo: i64, hi: i64) -> Option<RangeInclusive<i32>> {
    let lo = lo.max(g.coarsest_level() as i64);
    let hi = hi.min(g.finest_level() as i64 - 1);
    (lo <= hi).then_some(lo as i32..=hi as i32)
}

/// Haar part of `g` on levels `lo..=hi` (clipped), mean dropped.
pub fn haar_band(g: &GridFunction, lo: i64, hi: i64) -> Truncation {
    let kept = clip_band(g.geometry(), lo, hi);
    let c = forward_transform(g);
    let mut band = match &kept {
        Some(r) => c.filter(|j, _, _| r.contains(&j)),
        None => c.filter(|_, _, _| false),
    };
    band.set_base_mean(0.0);
    Truncation {
        function: inverse_transform(&band),
        kept_levels: kept,
    }
}

/// `[a, I_alpha]_{>= L}`: Haar projection of the commutator onto levels `j >= L`.
pub fn commutator_tail_high(
    a: &GridFunction,
    f: &GridFunction,
    alpha: f64,
    cut: i32,
) -> Result<Truncation> {
    let comm = commutator_direct(a, f, alpha)?;
    Ok(haar_band(&comm, cut as i64, i64::MAX))
}

/// `[a, I_alpha]_{<= -L}`: Haar projection of the commutator onto levels `j <= -L`.
pub fn commutator_tail_low(
    a: &GridFunction,
    f: &GridFunction,
    alpha: f64,
    cut: i32,
) -> Result<Truncation> {
    let comm = commutator_direct(a, f, alpha)?;
    Ok(haar_band(&comm, i64::MIN, -(cut as i64)))
}

/// `a_(L)`: Haar coefficients of levels `-L..=L`, mean dropped.
pub fn scale_truncate(a: &GridFunction, cut: u32) -> Truncation {
    haar_band(a, -(cut as i64), cut as i64)
}

/// Level-`nu` Haar terms of `a` whose index satisfies `|m| > radius` (Euclidean).
pub fn spatial_truncate(a: &GridFunction, level: i32, radius: f64) -> Result<GridFunction> {
    let g = *a.geometry();
    g.check_level(level, g.coarsest_level(), g.finest_level() - 1)?;
    let keep: Vec<bool> = g
        .cubes(level)
        .map(|q| {
            let norm2: f64 = q.index().iter().map(|&m| (m * m) as f64).sum();
            norm2.sqrt() > radius
        })
        .collect();
    let mut c = forward_transform(a).filter(|j, lin, _| j == level && keep[lin]);
    c.set_base_mean(0.0);
    Ok(inverse_transform(&c))
}

/// Both sides of the pointwise bound
/// `sum_j |sum_Q |Q|^{alpha/n} <f,h^eps_Q> h^eps_Q(x)|
///   <= C ||f||_{M^p_q}^{1-p/s} (sup_l |f^eps_l(x)|)^{p/s}`
/// for one pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct Majorant {
    pub eps: SignPattern,
    pub left: GridFunction,
    pub right: GridFunction,
    /// `1/(1 - 2^{-n/s}) + 1/(1 - 2^{-alpha})`, from the two geometric tails.
    pub constant: f64,
}

impl Majorant {
    /// Cells where `left > right (1 + rel_tol)`.
    pub fn violations(&self, rel_tol: f64) -> usize {
        self.left
            .values()
            .iter()
            .zip(self.right.values())
            .filter(|(&l, &r)| l > r * (1.0 + rel_tol))
            .count()
    }
}

pub fn pointwise_majorant(
    f: &GridFunction,
    alpha: f64,
    params: SpaceParams,
) -> Result<Vec<Majorant>> {
    let g = *f.geometry();
    let frac = check_alpha(&g, alpha)?;
    let target = frac.target(params)?;
    let n = g.dim() as f64;
    let ratio = params.p() / target.p();
    let constant = 1.0 / (1.0 - 2f64.powf(-n / target.p())) + 1.0 / (1.0 - 2f64.powf(-alpha));
    let norm = morrey_value(f, params);
    let c = forward_transform(f);
    let e = g.pattern_count();
    let maps: Vec<Vec<usize>> = (g.coarsest_level()..g.finest_level())
        .map(|j| g.ancestor_map(j))
        .collect();
    SignPattern::all(g.dim())
        .into_iter()
        .map(|eps| {
            let mut left = vec![0.0; g.cell_count()];
            let mut sup = vec![0.0f64; g.cell_count()];
            for (l, map) in maps.iter().enumerate() {
                let level = g.coarsest_level() + l as i32;
                let amp = 1.0 / g.cube_measure(level).sqrt();
                let w = frac.level_weight(level);
                let coeffs = c.level(level);
                for (cell, &q) in map.iter().enumerate() {
                    let slice = (coeffs[q * e + eps.ordinal()] * amp).abs();
                    left[cell] += w * slice;
                    sup[cell] = sup[cell].max(slice);
                }
            }
            let right = sup
                .iter()
                .map(|&s| constant * norm.powf(1.0 - ratio) * s.powf(ratio))
                .collect();
            Ok(Majorant {
                eps,
                left: GridFunction::new(g, left)?,
                right: GridFunction::new(g, right)?,
                constant,
            })
        })
        .collect()
}
