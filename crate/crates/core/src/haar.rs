//! Tensor Haar system on a finite dyadic grid.
//!
//! `h^eps_Q` is supported on `Q`, takes the value `+-|Q|^{-1/2}` on each child of
//! `Q`, and the sign on the child with offset `b` is `(-1)^{<eps, b>}`. The
//! transform stores `<f, h^eps_Q>` for every cube of level `j_min..J-1` and every
//! pattern, plus the mean of `f` over the base cube; that is an exact change of
//! basis of the cell values.

use crate::dyadic::{DyadicCube, GridFunction, GridGeometry};
use crate::error::{Error, Result};

/// A nonzero element of `(Z/2Z)^n`. Axis 0 is the most significant bit of the
/// code, so increasing codes enumerate patterns lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignPattern {
    code: u32,
    dim: u8,
}

impl SignPattern {
    pub fn new(bits: &[u8]) -> Result<Self> {
        if bits.is_empty() || bits.len() > 16 {
            return Err(Error::Parameter("sign pattern needs 1..=16 axes".into()));
        }
        let mut code = 0u32;
        for &b in bits {
            if b > 1 {
                return Err(Error::Parameter(format!("pattern entry {b} is not 0 or 1")));
            }
            code = (code << 1) | b as u32;
        }
        Self::from_code(code, bits.len())
    }

    pub fn from_code(code: u32, dim: usize) -> Result<Self> {
        if code == 0 || code >= (1 << dim) {
            return Err(Error::Parameter(format!(
                "pattern code {code} is not a nonzero element of (Z/2Z)^{dim}"
            )));
        }
        Ok(Self {
            code,
            dim: dim as u8,
        })
    }

    /// All `2^n - 1` patterns in lexicographic order.
    pub fn all(dim: usize) -> Vec<SignPattern> {
        (1u32..(1 << dim))
            .map(|code| SignPattern {
                code,
                dim: dim as u8,
            })
            .collect()
    }

    pub fn code(&self) -> u32 {
        self.code
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    /// Position among [`SignPattern::all`].
    pub fn ordinal(&self) -> usize {
        self.code as usize - 1
    }

    pub fn bits(&self) -> Vec<u8> {
        (0..self.dim())
            .map(|axis| ((self.code >> (self.dim() - 1 - axis)) & 1) as u8)
            .collect()
    }

    /// Sign of `h^eps` on the child with the given offset code.
    pub fn sign(&self, offset: u32) -> f64 {
        child_sign(self.code, offset)
    }
}

#[inline]
pub(crate) fn child_sign(pattern: u32, offset: u32) -> f64 {
    if (pattern & offset).count_ones() % 2 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// `<f, h^eps_Q>` for every pattern and every cube of level `j_min..J-1`, and the
/// base-cube mean.
#[derive(Debug, Clone, PartialEq)]
pub struct HaarCoefficients {
    geometry: GridGeometry,
    base_mean: f64,
    /// Entry `j - j_min`: `cubes_at_level(j) * (2^n - 1)` values, cube-major.
    levels: Vec<Vec<f64>>,
}

impl HaarCoefficients {
    pub fn zeros(geometry: GridGeometry) -> Self {
        let e = geometry.pattern_count();
        let levels = (geometry.coarsest_level()..geometry.finest_level())
            .map(|j| vec![0.0; geometry.cubes_at_level(j) * e])
            .collect();
        Self {
            geometry,
            base_mean: 0.0,
            levels,
        }
    }

    /// Build from the canonical flat layout: level ascending, cube row-major,
    /// pattern lexicographic.
    pub fn from_flat(geometry: GridGeometry, base_mean: f64, flat: &[f64]) -> Result<Self> {
        let mut out = Self::zeros(geometry);
        if flat.len() != out.len() {
            return Err(Error::Shape(format!(
                "expected {} Haar coefficients, got {}",
                out.len(),
                flat.len()
            )));
        }
        let mut cursor = 0;
        for level in &mut out.levels {
            let len = level.len();
            level.copy_from_slice(&flat[cursor..cursor + len]);
            cursor += len;
        }
        out.base_mean = base_mean;
        Ok(out)
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn base_mean(&self) -> f64 {
        self.base_mean
    }

    pub fn set_base_mean(&mut self, mean: f64) {
        self.base_mean = mean;
    }

    /// Number of stored Haar coefficients (the base mean excluded).
    pub fn len(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Canonical flat layout, see [`HaarCoefficients::from_flat`].
    pub fn to_flat(&self) -> Vec<f64> {
        self.levels.iter().flatten().copied().collect()
    }

    /// Coefficients of level `j`, cube-major with patterns innermost.
    pub fn level(&self, j: i32) -> &[f64] {
        &self.levels[(j - self.geometry.coarsest_level()) as usize]
    }

    pub fn level_mut(&mut self, j: i32) -> &mut [f64] {
        &mut self.levels[(j - self.geometry.coarsest_level()) as usize]
    }

    fn locate(&self, eps: SignPattern, cube: &DyadicCube) -> Result<(usize, usize)> {
        self.geometry.check_cube(cube)?;
        if eps.dim() != self.geometry.dim() {
            return Err(Error::Shape(
                "pattern dimension differs from geometry".into(),
            ));
        }
        if cube.level() >= self.geometry.finest_level() {
            return Err(Error::Range(format!(
                "{cube} is at the finest level and carries no Haar coefficient"
            )));
        }
        let slot = self.geometry.cube_lin(cube) * self.geometry.pattern_count() + eps.ordinal();
        Ok((
            (cube.level() - self.geometry.coarsest_level()) as usize,
            slot,
        ))
    }

    pub fn get(&self, eps: SignPattern, cube: &DyadicCube) -> Result<f64> {
        let (l, s) = self.locate(eps, cube)?;
        Ok(self.levels[l][s])
    }

    pub fn set(&mut self, eps: SignPattern, cube: &DyadicCube, value: f64) -> Result<()> {
        let (l, s) = self.locate(eps, cube)?;
        self.levels[l][s] = value;
        Ok(())
    }

    /// Apply `f(level, cube position, pattern code, value)` to every coefficient.
    pub fn map_indexed(&self, f: impl Fn(i32, usize, u32, f64) -> f64) -> Self {
        let e = self.geometry.pattern_count();
        let levels = self
            .levels
            .iter()
            .enumerate()
            .map(|(l, coeffs)| {
                let level = self.geometry.coarsest_level() + l as i32;
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(slot, &v)| f(level, slot / e, (slot % e) as u32 + 1, v))
                    .collect()
            })
            .collect();
        Self {
            geometry: self.geometry,
            base_mean: self.base_mean,
            levels,
        }
    }

    /// Keep the coefficients selected by `keep(level, cube position, pattern code)`.
    pub fn filter(&self, keep: impl Fn(i32, usize, u32) -> bool) -> Self {
        self.map_indexed(|j, lin, code, v| if keep(j, lin, code) { v } else { 0.0 })
    }

    /// Every `(pattern, cube, value)` triple, level ascending.
    pub fn entries(&self) -> impl Iterator<Item = (SignPattern, DyadicCube, f64)> + '_ {
        let e = self.geometry.pattern_count();
        let dim = self.geometry.dim();
        self.levels.iter().enumerate().flat_map(move |(l, coeffs)| {
            let level = self.geometry.coarsest_level() + l as i32;
            coeffs.iter().enumerate().map(move |(slot, &v)| {
                let eps = SignPattern {
                    code: (slot % e) as u32 + 1,
                    dim: dim as u8,
                };
                (eps, self.geometry.cube_at(level, slot / e), v)
            })
        })
    }

    /// `sum |c|^2`, excluding the mean.
    pub fn energy(&self) -> f64 {
        self.levels.iter().flatten().map(|c| c * c).sum()
    }
}

/// `h^eps_Q` as a grid function.
pub fn haar_function(
    eps: SignPattern,
    cube: &DyadicCube,
    geometry: &GridGeometry,
) -> Result<GridFunction> {
    let mut c = HaarCoefficients::zeros(*geometry);
    c.set(eps, cube, 1.0)?;
    Ok(inverse_transform(&c))
}

/// Cell values to Haar coefficients by per-level averaging, `O(N log N)`.
pub fn forward_transform(f: &GridFunction) -> HaarCoefficients {
    let geometry = *f.geometry();
    let n = geometry.dim();
    let e = geometry.pattern_count();
    let children = 1usize << n;
    let mut out = HaarCoefficients::zeros(geometry);
    let mut means = f.values().to_vec();
    for level in (geometry.coarsest_level()..geometry.finest_level()).rev() {
        let walk = geometry.child_walk(level + 1);
        let mut coarse = vec![0.0; geometry.cubes_at_level(level)];
        let coeffs = out.level_mut(level);
        for (child, &(parent, offset)) in walk.iter().enumerate() {
            let m = means[child];
            coarse[parent] += m;
            let row = &mut coeffs[parent * e..(parent + 1) * e];
            for (k, slot) in row.iter_mut().enumerate() {
                *slot += child_sign(k as u32 + 1, offset) * m;
            }
        }
        // <f, h> = |Q|^{1/2} 2^{-n} sum_b sign(b) mean_b
        let weight = geometry.cube_measure(level).sqrt() / children as f64;
        for slot in coeffs.iter_mut() {
            *slot *= weight;
        }
        for m in coarse.iter_mut() {
            *m /= children as f64;
        }
        means = coarse;
    }
    out.base_mean = means[0];
    out
}

/// Exact inverse of [`forward_transform`].
pub fn inverse_transform(c: &HaarCoefficients) -> GridFunction {
    let geometry = *c.geometry();
    let e = geometry.pattern_count();
    let mut means = vec![c.base_mean];
    for level in geometry.coarsest_level()..geometry.finest_level() {
        let walk = geometry.child_walk(level + 1);
        let amp = 1.0 / geometry.cube_measure(level).sqrt();
        let coeffs = c.level(level);
        let fine: Vec<f64> = walk
            .iter()
            .map(|&(parent, offset)| {
                let row = &coeffs[parent * e..(parent + 1) * e];
                let osc: f64 = row
                    .iter()
                    .enumerate()
                    .map(|(k, &v)| child_sign(k as u32 + 1, offset) * v)
                    .sum();
                means[parent] + amp * osc
            })
            .collect();
        means = fine;
    }
    GridFunction::new(geometry, means).expect("cell count matches geometry")
}

/// `f^eps_j = sum_{Q in D_j} <f,h^eps_Q> h^eps_Q`, or the sum over all patterns
/// when `eps` is `None`.
pub fn level_slice(
    c: &HaarCoefficients,
    level: i32,
    eps: Option<SignPattern>,
) -> Result<GridFunction> {
    let g = c.geometry();
    g.check_level(level, g.coarsest_level(), g.finest_level() - 1)?;
    let mut kept = c.filter(|j, _, code| j == level && eps.is_none_or(|p| p.code == code));
    kept.base_mean = 0.0;
    Ok(inverse_transform(&kept))
}

/// Pointwise `(sum_j |f^eps_j|^2)^{1/2}` for a fixed pattern.
pub fn square_function(f: &GridFunction, eps: SignPattern) -> GridFunction {
    square_function_from(&forward_transform(f), eps)
}

/// One square function per pattern, in lexicographic pattern order.
pub fn square_functions(f: &GridFunction) -> Vec<GridFunction> {
    let c = forward_transform(f);
    SignPattern::all(f.geometry().dim())
        .into_iter()
        .map(|eps| square_function_from(&c, eps))
        .collect()
}

pub(crate) fn square_function_from(c: &HaarCoefficients, eps: SignPattern) -> GridFunction {
    let geometry = *c.geometry();
    let e = geometry.pattern_count();
    let mut acc = vec![0.0; geometry.cell_count()];
    for level in geometry.coarsest_level()..geometry.finest_level() {
        let map = geometry.ancestor_map(level);
        let inv_measure = 1.0 / geometry.cube_measure(level);
        let coeffs = c.level(level);
        for (cell, &q) in map.iter().enumerate() {
            let v = coeffs[q * e + eps.ordinal()];
            acc[cell] += v * v * inv_measure;
        }
    }
    let values = acc.into_iter().map(f64::sqrt).collect();
    GridFunction::new(geometry, values).expect("cell count matches geometry")
}

/// `sum_eps sum_{j in [-M, M]} f^eps_j`, levels clipped to `[j_min, J-1]`.
pub fn partial_sum(f: &GridFunction, m: u32, include_mean: bool) -> GridFunction {
    let c = forward_transform(f);
    let m = m as i64;
    let mut kept = c.filter(|j, _, _| (-m..=m).contains(&(j as i64)));
    if !include_mean {
        kept.base_mean = 0.0;
    }
    inverse_transform(&kept)
}

/// `E_k f = sum_{Q in D_k} m_Q(f) chi_Q`.
pub fn expectation_projection(f: &GridFunction, k: i32) -> Result<GridFunction> {
    let g = *f.geometry();
    g.check_level(k, g.coarsest_level(), g.finest_level())?;
    let c = forward_transform(f);
    Ok(inverse_transform(&c.filter(|j, _, _| j < k)))
}
