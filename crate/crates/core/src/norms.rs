//! Morrey, `L^q`, dyadic sharp maximal and dyadic BMO norms.
//!
//! Every supremum over cubes is exhaustive over the cubes of the geometry.

use crate::dyadic::{level_sums, DyadicCube, GridFunction, GridGeometry};
use crate::error::{Error, Result};

/// Morrey exponents `1 <= q <= p < inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceParams {
    p: f64,
    q: f64,
}

impl SpaceParams {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p.is_finite() && q.is_finite()) {
            return Err(Error::Parameter(format!(
                "exponents must be finite (p = {p}, q = {q})"
            )));
        }
        if q < 1.0 {
            return Err(Error::Parameter(format!("q = {q} violates q >= 1")));
        }
        if q > p {
            return Err(Error::Parameter(format!(
                "q = {q} > p = {p} violates q <= p"
            )));
        }
        Ok(Self { p, q })
    }

    /// Same as [`SpaceParams::new`] but additionally requires `q > 1`.
    pub fn strict(p: f64, q: f64) -> Result<Self> {
        if q <= 1.0 {
            return Err(Error::Parameter(format!("q = {q} violates q > 1")));
        }
        Self::new(p, q)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `|Q|^{1/p - 1/q}` exponent.
    pub fn scaling_exponent(&self) -> f64 {
        1.0 / self.p - 1.0 / self.q
    }
}

/// A supremum over cubes together with a cube attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct NormReport {
    pub value: f64,
    pub witness: DyadicCube,
}

/// `(int_R |f|^q)^{1/q}`; `R` defaults to the base cube.
pub fn lq_norm(f: &GridFunction, q: f64, cube: Option<&DyadicCube>) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::Parameter(format!("q = {q} violates q >= 1")));
    }
    let g = f.geometry();
    let sum: f64 = match cube {
        None => f.values().iter().map(|v| v.abs().powf(q)).sum(),
        Some(r) => {
            g.check_cube(r)?;
            g.cells_in(r)
                .into_iter()
                .map(|c| f.values()[c].abs().powf(q))
                .sum()
        }
    };
    Ok((sum * g.cell_measure()).powf(1.0 / q))
}

/// `sup_Q |Q|^{1/p - 1/q} ||f||_{L^q(Q)}` with a witness cube. Ties go to the
/// coarsest level, then to the lexicographically smallest index.
pub fn morrey_norm(f: &GridFunction, params: SpaceParams) -> NormReport {
    let g = f.geometry();
    let (level, lin, value) = morrey_scan(g, f.values(), params.p, params.q);
    NormReport {
        value,
        witness: g.cube_at(level, lin),
    }
}

/// Value-only form of [`morrey_norm`].
pub fn morrey_value(f: &GridFunction, params: SpaceParams) -> f64 {
    morrey_scan(f.geometry(), f.values(), params.p, params.q).2
}

pub(crate) fn morrey_scan(g: &GridGeometry, values: &[f64], p: f64, q: f64) -> (i32, usize, f64) {
    let cell = g.cell_measure();
    let powered: Vec<f64> = values.iter().map(|v| v.abs().powf(q) * cell).collect();
    let sums = level_sums(g, &powered);
    let mut best = (g.coarsest_level(), 0usize, f64::NEG_INFINITY);
    for (l, row) in sums.iter().enumerate() {
        let level = g.coarsest_level() + l as i32;
        let weight = g.cube_measure(level).powf(1.0 / p - 1.0 / q);
        for (lin, &s) in row.iter().enumerate() {
            let v = weight * s.powf(1.0 / q);
            if v > best.2 {
                best = (level, lin, v);
            }
        }
    }
    best
}

/// Per-level mean oscillations `m_Q(|f - m_Q f|)`, coarsest level first.
pub(crate) fn level_oscillations(f: &GridFunction) -> Vec<Vec<f64>> {
    let g = f.geometry();
    let values = f.values();
    g.levels()
        .map(|level| {
            let map = g.ancestor_map(level);
            let count = g.cubes_at_level(level);
            let per_cube = (g.cell_count() / count) as f64;
            let mut means = vec![0.0; count];
            for (cell, &q) in map.iter().enumerate() {
                means[q] += values[cell];
            }
            for m in means.iter_mut() {
                *m /= per_cube;
            }
            let mut osc = vec![0.0; count];
            for (cell, &q) in map.iter().enumerate() {
                osc[q] += (values[cell] - means[q]).abs();
            }
            for o in osc.iter_mut() {
                *o /= per_cube;
            }
            osc
        })
        .collect()
}

/// `M^{#,dyadic} f(x)`: sup over dyadic cubes `Q` containing `x` of `m_Q(|f - m_Q f|)`.
pub fn sharp_maximal(f: &GridFunction) -> GridFunction {
    let g = *f.geometry();
    let osc = level_oscillations(f);
    let mut out = vec![0.0f64; g.cell_count()];
    for (l, row) in osc.iter().enumerate() {
        let level = g.coarsest_level() + l as i32;
        for (cell, &q) in g.ancestor_map(level).iter().enumerate() {
            out[cell] = out[cell].max(row[q]);
        }
    }
    GridFunction::new(g, out).expect("cell count matches geometry")
}

/// `||M^{#,dyadic} a||_inf` with the cube attaining the largest oscillation.
pub fn bmo_report(a: &GridFunction) -> NormReport {
    let g = a.geometry();
    let mut best = (g.coarsest_level(), 0usize, f64::NEG_INFINITY);
    for (l, row) in level_oscillations(a).iter().enumerate() {
        for (lin, &v) in row.iter().enumerate() {
            if v > best.2 {
                best = (g.coarsest_level() + l as i32, lin, v);
            }
        }
    }
    NormReport {
        value: best.2,
        witness: g.cube_at(best.0, best.1),
    }
}

pub fn bmo_norm(a: &GridFunction) -> f64 {
    bmo_report(a).value
}

/// `||f - m_R(f)||_{L^q(R)}`.
pub fn oscillation_norm(f: &GridFunction, cube: &DyadicCube, q: f64) -> Result<f64> {
    let g = f.geometry();
    g.check_cube(cube)?;
    if !(q >= 1.0) {
        return Err(Error::Parameter(format!("q = {q} violates q >= 1")));
    }
    let cells = g.cells_in(cube);
    let mean = cells.iter().map(|&c| f.values()[c]).sum::<f64>() / cells.len() as f64;
    let sum: f64 = cells
        .iter()
        .map(|&c| (f.values()[c] - mean).abs().powf(q))
        .sum();
    Ok((sum * g.cell_measure()).powf(1.0 / q))
}
