//! Dyadic cubes, the truncated grid, and piecewise-constant grid functions.
//!
//! A [`GridGeometry`] fixes a base cube `[0, 2^-j_min)^n` and a finest level `J`.
//! Every function is constant on the `2^{(J - j_min) n}` finest cells, stored
//! row-major (axis 0 varies slowest). All integrals reduce to finite sums.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Largest supported value of `(J - j_min) * n`; keeps cell counts addressable.
const MAX_CELL_BITS: u32 = 26;

/// The cube `prod_nu [m_nu 2^-j, (m_nu + 1) 2^-j)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicCube {
    level: i32,
    index: Vec<i64>,
}

impl DyadicCube {
    pub fn new(level: i32, index: Vec<i64>) -> Self {
        assert!(!index.is_empty(), "a dyadic cube needs at least one axis");
        Self { level, index }
    }

    pub fn level(&self) -> i32 {
        self.level
    }

    pub fn index(&self) -> &[i64] {
        &self.index
    }

    pub fn dim(&self) -> usize {
        self.index.len()
    }

    /// Side length `2^-j`.
    pub fn side_length(&self) -> f64 {
        2f64.powi(-self.level)
    }

    /// Lebesgue measure `2^{-jn}`, exact in binary floating point.
    pub fn measure(&self) -> f64 {
        2f64.powi(-self.level * self.dim() as i32)
    }

    /// The unique dyadic cube `R_{+k}` of measure `2^{kn}|R|` containing `self`.
    ///
    /// Unbounded: no geometry is consulted. See [`parent_cube`] for the checked form.
    pub fn ancestor(&self, k: u32) -> DyadicCube {
        // Arithmetic right shift is floor division by 2^k, also for negative indices.
        let index = self.index.iter().map(|&m| m >> k).collect();
        DyadicCube::new(self.level - k as i32, index)
    }

    /// Whether `other` is a (non-strict) subcube of `self`.
    pub fn contains(&self, other: &DyadicCube) -> bool {
        other.dim() == self.dim()
            && other.level >= self.level
            && other.ancestor((other.level - self.level) as u32) == *self
    }

    pub fn is_disjoint(&self, other: &DyadicCube) -> bool {
        !self.contains(other) && !other.contains(self)
    }

    /// Whether the point lies in the half-open cube.
    pub fn contains_point(&self, x: &[f64]) -> bool {
        let scale = 2f64.powi(self.level);
        x.len() == self.dim()
            && x.iter()
                .zip(&self.index)
                .all(|(&xi, &m)| (xi * scale).floor() as i64 == m)
    }
}

impl fmt::Display for DyadicCube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q[{};", self.level)?;
        for (i, m) in self.index.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{m}")?;
        }
        write!(f, "]")
    }
}

/// Bounded dyadic domain: base cube `[0, 2^-j_min)^n` resolved down to level `J`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridGeometry {
    dim: usize,
    coarsest: i32,
    finest: i32,
}

impl GridGeometry {
    pub fn new(dim: usize, coarsest: i32, finest: i32) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Parameter("dimension must be at least 1".into()));
        }
        if finest < coarsest {
            return Err(Error::Parameter(format!(
                "finest level {finest} is coarser than j_min = {coarsest}"
            )));
        }
        let bits = (finest - coarsest) as u64 * dim as u64;
        if bits > MAX_CELL_BITS as u64 {
            return Err(Error::Parameter(format!(
                "grid with 2^{bits} cells exceeds the supported size 2^{MAX_CELL_BITS}"
            )));
        }
        Ok(Self {
            dim,
            coarsest,
            finest,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `j_min`, the level of the base cube.
    pub fn coarsest_level(&self) -> i32 {
        self.coarsest
    }

    /// `J`, the level of the finest cells.
    pub fn finest_level(&self) -> i32 {
        self.finest
    }

    /// Number of levels that carry Haar coefficients, `J - j_min`.
    pub fn depth(&self) -> usize {
        (self.finest - self.coarsest) as usize
    }

    /// Cubes per axis at `level`.
    pub fn side(&self, level: i32) -> usize {
        debug_assert!(level >= self.coarsest && level <= self.finest);
        1usize << (level - self.coarsest)
    }

    pub fn cubes_at_level(&self, level: i32) -> usize {
        self.side(level).pow(self.dim as u32)
    }

    pub fn cells_per_axis(&self) -> usize {
        self.side(self.finest)
    }

    pub fn cell_count(&self) -> usize {
        self.cubes_at_level(self.finest)
    }

    pub fn cell_measure(&self) -> f64 {
        self.cube_measure(self.finest)
    }

    pub fn cube_measure(&self, level: i32) -> f64 {
        2f64.powi(-level * self.dim as i32)
    }

    pub fn base_measure(&self) -> f64 {
        self.cube_measure(self.coarsest)
    }

    pub fn base_cube(&self) -> DyadicCube {
        DyadicCube::new(self.coarsest, vec![0; self.dim])
    }

    /// Number of `2^n - 1` sign patterns.
    pub fn pattern_count(&self) -> usize {
        (1usize << self.dim) - 1
    }

    pub fn levels(&self) -> impl Iterator<Item = i32> {
        self.coarsest..=self.finest
    }

    pub fn contains_cube(&self, cube: &DyadicCube) -> bool {
        if cube.dim() != self.dim || cube.level < self.coarsest || cube.level > self.finest {
            return false;
        }
        let side = self.side(cube.level) as i64;
        cube.index.iter().all(|&m| (0..side).contains(&m))
    }

    pub fn check_cube(&self, cube: &DyadicCube) -> Result<()> {
        if self.contains_cube(cube) {
            Ok(())
        } else {
            Err(Error::Range(format!(
                "cube {cube} lies outside the geometry (n = {}, levels {}..={})",
                self.dim, self.coarsest, self.finest
            )))
        }
    }

    pub fn check_level(&self, level: i32, lo: i32, hi: i32) -> Result<()> {
        if (lo..=hi).contains(&level) {
            Ok(())
        } else {
            Err(Error::Range(format!(
                "level {level} outside admissible range {lo}..={hi}"
            )))
        }
    }

    /// Row-major position of a contained cube among the cubes of its level.
    pub fn cube_lin(&self, cube: &DyadicCube) -> usize {
        let side = self.side(cube.level);
        cube.index
            .iter()
            .fold(0usize, |acc, &m| acc * side + m as usize)
    }

    pub fn cube_at(&self, level: i32, lin: usize) -> DyadicCube {
        let side = self.side(level);
        let mut index = vec![0i64; self.dim];
        let mut rem = lin;
        for slot in index.iter_mut().rev() {
            *slot = (rem % side) as i64;
            rem /= side;
        }
        DyadicCube::new(level, index)
    }

    /// Cubes of one level in row-major order.
    pub fn cubes(&self, level: i32) -> impl Iterator<Item = DyadicCube> + '_ {
        (0..self.cubes_at_level(level)).map(move |lin| self.cube_at(level, lin))
    }

    /// Every cube of the geometry, coarsest level first.
    pub fn all_cubes(&self) -> impl Iterator<Item = DyadicCube> + '_ {
        self.levels().flat_map(move |j| self.cubes(j))
    }

    /// For every finest cell, the row-major position of its ancestor at `level`.
    pub fn ancestor_map(&self, level: i32) -> Vec<usize> {
        let shift = (self.finest - level) as u32;
        let side = self.cells_per_axis();
        (0..self.cell_count())
            .map(|cell| shift_lin(cell, side, self.dim, shift))
            .collect()
    }

    /// For every cube at `child_level`, its parent's position and its offset code
    /// (bit `n-1-nu` set when the child sits in the upper half along axis `nu`).
    pub fn child_walk(&self, child_level: i32) -> Vec<(usize, u32)> {
        let side = self.side(child_level);
        (0..self.cubes_at_level(child_level))
            .map(|lin| split_parent(lin, side, self.dim))
            .collect()
    }

    /// Finest cells inside a contained cube, in row-major order.
    pub fn cells_in(&self, cube: &DyadicCube) -> Vec<usize> {
        let shift = (self.finest - cube.level) as u32;
        let width = 1usize << shift;
        let side = self.cells_per_axis();
        let lo: Vec<usize> = cube.index.iter().map(|&m| (m as usize) << shift).collect();
        let mut out = Vec::with_capacity(width.pow(self.dim as u32));
        let mut offset = vec![0usize; self.dim];
        loop {
            let lin = lo
                .iter()
                .zip(&offset)
                .fold(0usize, |acc, (&l, &o)| acc * side + l + o);
            out.push(lin);
            let mut axis = self.dim;
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                offset[axis] += 1;
                if offset[axis] < width {
                    break;
                }
                offset[axis] = 0;
            }
        }
    }

    /// Finest cell containing a point of the base cube.
    pub fn cell_of_point(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.dim {
            return Err(Error::Shape(format!(
                "point has {} coordinates, geometry has dimension {}",
                x.len(),
                self.dim
            )));
        }
        let scale = 2f64.powi(self.finest);
        let side = self.cells_per_axis();
        let mut lin = 0usize;
        for &xi in x {
            let m = (xi * scale).floor();
            if !(m >= 0.0 && (m as usize) < side) {
                return Err(Error::Range(format!(
                    "point {x:?} lies outside the base cube"
                )));
            }
            lin = lin * side + m as usize;
        }
        Ok(lin)
    }

    fn check_same(&self, other: &GridGeometry) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "geometry mismatch: {self:?} vs {other:?}"
            )))
        }
    }
}

/// Parent position and offset code of a row-major cube index on a lattice of `side`^dim.
pub(crate) fn split_parent(lin: usize, side: usize, dim: usize) -> (usize, u32) {
    let half = side / 2;
    let mut rem = lin;
    let mut parent = 0usize;
    let mut place = 1usize;
    let mut code = 0u32;
    for axis in (0..dim).rev() {
        let digit = rem % side;
        rem /= side;
        parent += (digit / 2) * place;
        place *= half;
        code |= ((digit & 1) as u32) << (dim - 1 - axis);
    }
    (parent, code)
}

/// Row-major index of the ancestor `shift` levels up.
pub(crate) fn shift_lin(lin: usize, side: usize, dim: usize, shift: u32) -> usize {
    if shift == 0 {
        return lin;
    }
    let coarse_side = side >> shift;
    let mut rem = lin;
    let mut out = 0usize;
    let mut place = 1usize;
    for _ in 0..dim {
        let digit = rem % side;
        rem /= side;
        out += (digit >> shift) * place;
        place *= coarse_side;
    }
    out
}

/// `R_{+k}` with the geometry's range check.
pub fn parent_cube(geometry: &GridGeometry, cube: &DyadicCube, k: u32) -> Result<DyadicCube> {
    geometry.check_cube(cube)?;
    if cube.level - (k as i32) < geometry.coarsest {
        return Err(Error::Range(format!(
            "ancestor {k} levels above {cube} is coarser than j_min = {}",
            geometry.coarsest
        )));
    }
    Ok(cube.ancestor(k))
}

/// The `2^n` cubes one level finer that partition `cube`, ordered by offset code.
pub fn children(geometry: &GridGeometry, cube: &DyadicCube) -> Result<Vec<DyadicCube>> {
    geometry.check_cube(cube)?;
    if cube.level >= geometry.finest {
        return Err(Error::Range(format!(
            "{cube} is at the finest level and has no children"
        )));
    }
    let n = cube.dim();
    Ok((0u32..(1 << n))
        .map(|code| {
            let index = cube
                .index
                .iter()
                .enumerate()
                .map(|(axis, &m)| 2 * m + ((code >> (n - 1 - axis)) & 1) as i64)
                .collect();
            DyadicCube::new(cube.level + 1, index)
        })
        .collect())
}

/// A function that is constant on each finest cell of a geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    geometry: GridGeometry,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(geometry: GridGeometry, values: Vec<f64>) -> Result<Self> {
        if values.len() != geometry.cell_count() {
            return Err(Error::Shape(format!(
                "expected {} cell values, got {}",
                geometry.cell_count(),
                values.len()
            )));
        }
        Ok(Self { geometry, values })
    }

    pub fn zeros(geometry: GridGeometry) -> Self {
        Self::constant(geometry, 0.0)
    }

    pub fn constant(geometry: GridGeometry, c: f64) -> Self {
        Self {
            geometry,
            values: vec![c; geometry.cell_count()],
        }
    }

    /// `chi_Q`.
    pub fn indicator(geometry: GridGeometry, cube: &DyadicCube) -> Result<Self> {
        geometry.check_cube(cube)?;
        let mut values = vec![0.0; geometry.cell_count()];
        for cell in geometry.cells_in(cube) {
            values[cell] = 1.0;
        }
        Ok(Self { geometry, values })
    }

    /// Sample `f` at the lower corner of every finest cell.
    pub fn from_fn(geometry: GridGeometry, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let h = 2f64.powi(-geometry.finest);
        let values = (0..geometry.cell_count())
            .map(|cell| {
                let corner: Vec<f64> = geometry
                    .cube_at(geometry.finest, cell)
                    .index()
                    .iter()
                    .map(|&m| m as f64 * h)
                    .collect();
                f(&corner)
            })
            .collect();
        Self { geometry, values }
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value of the finest cell containing `x`.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        Ok(self.values[self.geometry.cell_of_point(x)?])
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            geometry: self.geometry,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.geometry.check_same(&other.geometry)?;
        Ok(Self {
            geometry: self.geometry,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn checked_add(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn checked_sub(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise product; exact at the finest level.
    pub fn checked_mul(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `int_base f`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.geometry.cell_measure()
    }

    /// `L^2` norm of the difference, relative to `max(||self||_2, ||other||_2, tiny)`.
    pub fn relative_l2_distance(&self, other: &GridFunction) -> Result<f64> {
        self.geometry.check_same(&other.geometry)?;
        let mut diff = 0.0;
        let mut a = 0.0;
        let mut b = 0.0;
        for (&x, &y) in self.values.iter().zip(&other.values) {
            diff += (x - y) * (x - y);
            a += x * x;
            b += y * y;
        }
        let scale = a.max(b).sqrt();
        Ok(if scale == 0.0 {
            0.0
        } else {
            diff.sqrt() / scale
        })
    }

    /// Largest cellwise deviation.
    pub fn max_abs_difference(&self, other: &GridFunction) -> Result<f64> {
        self.geometry.check_same(&other.geometry)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (&x, &y)| m.max((x - y).abs())))
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait<&GridFunction> for &GridFunction {
            type Output = GridFunction;
            /// Panics on geometry mismatch; use the `checked_*` form to recover.
            fn $method(self, rhs: &GridFunction) -> GridFunction {
                self.$checked(rhs)
                    .expect("grid functions on different geometries")
            }
        }
    };
}

binop!(Add, add, checked_add);
binop!(Sub, sub, checked_sub);

impl Mul<&GridFunction> for f64 {
    type Output = GridFunction;
    fn mul(self, rhs: &GridFunction) -> GridFunction {
        rhs.scale(self)
    }
}

impl Neg for &GridFunction {
    type Output = GridFunction;
    fn neg(self) -> GridFunction {
        self.scale(-1.0)
    }
}

/// `m_Q(f) = |Q|^-1 int_Q f`.
pub fn cube_mean(f: &GridFunction, cube: &DyadicCube) -> Result<f64> {
    f.geometry.check_cube(cube)?;
    let cells = f.geometry.cells_in(cube);
    let sum: f64 = cells.iter().map(|&c| f.values[c]).sum();
    Ok(sum / cells.len() as f64)
}

/// `int f g` over the base cube.
pub fn pairing(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    f.geometry.check_same(&g.geometry)?;
    let dot: f64 = f.values.iter().zip(&g.values).map(|(a, b)| a * b).sum();
    Ok(dot * f.geometry.cell_measure())
}

/// Per-cube sums of `values` at every level, coarsest first. Entry `j - j_min`
/// has one slot per cube of level `j`.
pub(crate) fn level_sums(geometry: &GridGeometry, values: &[f64]) -> Vec<Vec<f64>> {
    let depth = geometry.depth();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(depth + 1);
    out.push(values.to_vec());
    for child_level in (geometry.coarsest + 1..=geometry.finest).rev() {
        let walk = geometry.child_walk(child_level);
        let fine = out.last().expect("non-empty");
        let mut coarse = vec![0.0; geometry.cubes_at_level(child_level - 1)];
        for (lin, &(parent, _)) in walk.iter().enumerate() {
            coarse[parent] += fine[lin];
        }
        out.push(coarse);
    }
    out.reverse();
    out
}
