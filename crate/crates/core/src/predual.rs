//! Block spaces `H^p_q`, the preduals of Morrey spaces.
//!
//! A `(p,q)`-block is supported on a dyadic cube `Q` with
//! `||A||_{L^q} <= |Q|^{1/q - 1/p}`. On a finite grid every decomposition can be
//! merged cube by cube, so `||f||_{H^p_q}` is the value of
//!
//! ```text
//! minimize  sum_Q |Q|^{1/p - 1/q} ||f_Q||_{L^q}   over   f = sum_Q f_Q,  supp f_Q in Q.
//! ```
//!
//! [`block_norm_upper`] returns feasible decompositions of this program and
//! [`block_norm_lower`] evaluates the dual side against the Morrey space with
//! conjugate exponents. Neither claims the exact value.

use crate::dyadic::{pairing, DyadicCube, GridFunction, GridGeometry};
use crate::error::{Error, Result};
use crate::haar::{haar_function, SignPattern};
use crate::norms::{lq_norm, morrey_value, SpaceParams};

const BLOCK_TOL: f64 = 1e-12;

/// Block-space exponents `1 < p <= q < inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockParams {
    p: f64,
    q: f64,
}

impl BlockParams {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p.is_finite() && q.is_finite()) {
            return Err(Error::Parameter(format!(
                "exponents must be finite (p = {p}, q = {q})"
            )));
        }
        if p <= 1.0 {
            return Err(Error::Parameter(format!("p = {p} violates p > 1")));
        }
        if p > q {
            return Err(Error::Parameter(format!(
                "p = {p} > q = {q} violates p <= q"
            )));
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Morrey exponents `(p', q')` of the dual space.
    pub fn conjugate(&self) -> SpaceParams {
        SpaceParams::new(self.p / (self.p - 1.0), self.q / (self.q - 1.0))
            .expect("conjugates of 1 < p <= q satisfy 1 < q' <= p'")
    }

    /// `|Q|^{1/p - 1/q}`, the cost of one unit of `L^q` mass on a cube of this measure.
    pub fn cube_weight(&self, measure: f64) -> f64 {
        measure.powf(1.0 / self.p - 1.0 / self.q)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    support: DyadicCube,
    data: GridFunction,
    params: BlockParams,
}

impl Block {
    /// Checks the support and the size condition (relative tolerance `1e-12`).
    pub fn new(support: DyadicCube, data: GridFunction, params: BlockParams) -> Result<Self> {
        let g = data.geometry();
        g.check_cube(&support)?;
        let inside = g.cells_in(&support);
        let mut mask = vec![false; g.cell_count()];
        for &c in &inside {
            mask[c] = true;
        }
        if let Some(c) = (0..g.cell_count()).find(|&c| !mask[c] && data.values()[c] != 0.0) {
            return Err(Error::Input(format!(
                "block data is nonzero on cell {c} outside {support}"
            )));
        }
        let size = lq_norm(&data, params.q, Some(&support))?;
        let bound = support.measure().powf(1.0 / params.q - 1.0 / params.p);
        if size > bound * (1.0 + BLOCK_TOL) {
            return Err(Error::Input(format!(
                "||A||_q = {size} exceeds |Q|^(1/q - 1/p) = {bound} on {support}"
            )));
        }
        Ok(Self {
            support,
            data,
            params,
        })
    }

    pub fn support(&self) -> &DyadicCube {
        &self.support
    }

    pub fn data(&self) -> &GridFunction {
        &self.data
    }

    pub fn params(&self) -> BlockParams {
        self.params
    }
}

/// `target = sum_j lambda_j block_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDecomposition {
    pub terms: Vec<(f64, Block)>,
    pub target: GridFunction,
}

impl BlockDecomposition {
    pub fn cost(&self) -> f64 {
        self.terms.iter().map(|(l, _)| l.abs()).sum()
    }

    pub fn reconstruct(&self) -> GridFunction {
        let mut out = GridFunction::zeros(*self.target.geometry());
        for (lambda, block) in &self.terms {
            for (o, v) in out.values_mut().iter_mut().zip(block.data.values()) {
                *o += lambda * v;
            }
        }
        out
    }

    /// Relative `L^2` error of the reconstruction.
    pub fn residual(&self) -> f64 {
        self.reconstruct()
            .relative_l2_distance(&self.target)
            .expect("same geometry")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Convergence window for the relative change of the best cost.
    pub window: usize,
    pub tolerance: f64,
    /// Coordinate-ascent sweeps in the lower bound.
    pub ascent_steps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            window: 50,
            tolerance: 1e-8,
            ascent_steps: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpperBound {
    pub value: f64,
    pub decomposition: BlockDecomposition,
    /// `false` when the subgradient runs hit the iteration budget; the value is
    /// still a valid upper bound.
    pub converged: bool,
}

/// Per-level splitting `x[l][cell]`: the piece of `f` carried by the level-`l`
/// cube containing `cell`.
struct Splitting {
    geometry: GridGeometry,
    params: BlockParams,
    maps: Vec<Vec<usize>>,
    weights: Vec<f64>,
}

impl Splitting {
    fn new(geometry: GridGeometry, params: BlockParams) -> Self {
        let maps = geometry
            .levels()
            .map(|l| geometry.ancestor_map(l))
            .collect();
        let weights = geometry
            .levels()
            .map(|l| params.cube_weight(geometry.cube_measure(l)))
            .collect();
        Self {
            geometry,
            params,
            maps,
            weights,
        }
    }

    fn cube_norms(&self, l: usize, x: &[f64]) -> Vec<f64> {
        let level = self.geometry.coarsest_level() + l as i32;
        let mut sums = vec![0.0; self.geometry.cubes_at_level(level)];
        for (cell, &q) in self.maps[l].iter().enumerate() {
            sums[q] += x[cell].abs().powf(self.params.q);
        }
        let mu = self.geometry.cell_measure();
        sums.iter()
            .map(|s| (s * mu).powf(1.0 / self.params.q))
            .collect()
    }

    fn cost(&self, x: &[Vec<f64>]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(l, xl)| self.weights[l] * self.cube_norms(l, xl).iter().sum::<f64>())
            .sum()
    }

    /// Subgradient of the level-`l` cost with respect to `x[l]` (zero on null cubes).
    fn gradient(&self, l: usize, x: &[f64]) -> Vec<f64> {
        let norms = self.cube_norms(l, x);
        let mu = self.geometry.cell_measure();
        let q = self.params.q;
        x.iter()
            .enumerate()
            .map(|(cell, &v)| {
                let nu = norms[self.maps[l][cell]];
                if nu == 0.0 || v == 0.0 {
                    0.0
                } else {
                    self.weights[l] * mu * v.abs().powf(q - 1.0) * v.signum() / nu.powf(q - 1.0)
                }
            })
            .collect()
    }

    /// Restore `x[0] = f - sum_{l > 0} x[l]`.
    fn close(&self, f: &[f64], x: &mut [Vec<f64>]) {
        let (base, rest) = x.split_first_mut().expect("at least one level");
        for (cell, b) in base.iter_mut().enumerate() {
            *b = f[cell] - rest.iter().map(|xl| xl[cell]).sum::<f64>();
        }
    }

    /// Projected subgradient descent on the levels above the base, step `s0 / k`
    /// along the normalized subgradient. Returns the best iterate and whether
    /// the convergence window was met.
    fn descend(
        &self,
        f: &[f64],
        start: Vec<Vec<f64>>,
        opts: &SolverOptions,
    ) -> (Vec<Vec<f64>>, f64, bool) {
        let mut x = start;
        self.close(f, &mut x);
        let scale = f.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut best_cost = self.cost(&x);
        let mut best = x.clone();
        let mut history = vec![best_cost];
        if x.len() == 1 || scale == 0.0 {
            return (best, best_cost, true);
        }
        for k in 1..=opts.max_iterations {
            let base_grad = self.gradient(0, &x[0]);
            let mut dirs: Vec<Vec<f64>> = (1..x.len())
                .map(|l| {
                    self.gradient(l, &x[l])
                        .iter()
                        .zip(&base_grad)
                        .map(|(g, b)| g - b)
                        .collect()
                })
                .collect();
            let norm = dirs.iter().flatten().map(|d| d * d).sum::<f64>().sqrt();
            if norm == 0.0 {
                return (best, best_cost, true);
            }
            let step = 0.5 * scale / (k as f64 * norm);
            for (xl, d) in x[1..].iter_mut().zip(dirs.iter_mut()) {
                for (v, dv) in xl.iter_mut().zip(d.iter()) {
                    *v -= step * dv;
                }
            }
            self.close(f, &mut x);
            let c = self.cost(&x);
            if c < best_cost {
                best_cost = c;
                best = x.clone();
            }
            history.push(best_cost);
            if k >= opts.window {
                let old = history[k - opts.window];
                if (old - best_cost) <= opts.tolerance * old.abs() {
                    return (best, best_cost, true);
                }
            }
        }
        (best, best_cost, false)
    }

    /// Best split of `f` into pieces `f chi_R` over a partition of the base into
    /// dyadic cubes, by bottom-up dynamic programming.
    fn partition(&self, f: &[f64]) -> Vec<Vec<f64>> {
        let g = &self.geometry;
        let depth = self.maps.len();
        let own: Vec<Vec<f64>> = (0..depth)
            .map(|l| {
                self.cube_norms(l, f)
                    .iter()
                    .map(|nu| self.weights[l] * nu)
                    .collect()
            })
            .collect();
        let mut best = own.clone();
        let mut split = vec![Vec::new(); depth];
        for l in (0..depth - 1).rev() {
            let level = g.coarsest_level() + l as i32;
            let mut children = vec![0.0; g.cubes_at_level(level)];
            for (child, (parent, _)) in g.child_walk(level + 1).into_iter().enumerate() {
                children[parent] += best[l + 1][child];
            }
            split[l] = children
                .iter()
                .zip(&own[l])
                .map(|(c, o)| c < o)
                .collect::<Vec<bool>>();
            for (b, c) in best[l].iter_mut().zip(&children) {
                *b = b.min(*c);
            }
        }
        let mut x = vec![vec![0.0; f.len()]; depth];
        for cell in 0..f.len() {
            let mut l = 0;
            while l + 1 < depth && split[l][self.maps[l][cell]] {
                l += 1;
            }
            x[l][cell] = f[cell];
        }
        x
    }

    fn decomposition(&self, target: &GridFunction, x: &[Vec<f64>]) -> Result<BlockDecomposition> {
        let g = self.geometry;
        let mut terms = Vec::new();
        for (l, xl) in x.iter().enumerate() {
            let level = g.coarsest_level() + l as i32;
            let norms = self.cube_norms(l, xl);
            for (lin, &nu) in norms.iter().enumerate() {
                if nu == 0.0 {
                    continue;
                }
                let support = g.cube_at(level, lin);
                let lambda = self.weights[l] * nu;
                let mut data = vec![0.0; g.cell_count()];
                for cell in g.cells_in(&support) {
                    data[cell] = xl[cell] / lambda;
                }
                let block = Block::new(support, GridFunction::new(g, data)?, self.params)?;
                terms.push((lambda, block));
            }
        }
        Ok(BlockDecomposition {
            terms,
            target: target.clone(),
        })
    }
}

/// Upper bound on `||f||_{H^p_q}` with a witnessing decomposition.
///
/// Runs projected subgradient descent from the single-block split `f_base = f`,
/// evaluates the best dyadic partition split, and descends again from it; the
/// cheapest of these is returned.
pub fn block_norm_upper(f: &GridFunction, params: BlockParams) -> Result<UpperBound> {
    block_norm_upper_with(f, params, &SolverOptions::default())
}

pub fn block_norm_upper_with(
    f: &GridFunction,
    params: BlockParams,
    opts: &SolverOptions,
) -> Result<UpperBound> {
    let g = *f.geometry();
    if f.is_zero() {
        return Ok(UpperBound {
            value: 0.0,
            decomposition: BlockDecomposition {
                terms: Vec::new(),
                target: f.clone(),
            },
            converged: true,
        });
    }
    let split = Splitting::new(g, params);
    let values = f.values();
    let empty = vec![vec![0.0; values.len()]; split.maps.len()];

    let (x_single, c_single, ok_single) = split.descend(values, empty, opts);
    let partition = split.partition(values);
    let c_partition = split.cost(&partition);
    let (x_refined, c_refined, ok_refined) = split.descend(values, partition.clone(), opts);

    let mut best = (&partition, c_partition);
    for cand in [(&x_single, c_single), (&x_refined, c_refined)] {
        if cand.1 < best.1 {
            best = cand;
        }
    }
    let decomposition = split.decomposition(f, best.0)?;
    Ok(UpperBound {
        value: decomposition.cost(),
        decomposition,
        converged: ok_single && ok_refined,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowerBound {
    pub value: f64,
    /// Test function `g` attaining `|<f, g>| / ||g||_{M^{p'}_{q'}} = value`.
    pub witness: GridFunction,
}

fn dual_ratio(f: &GridFunction, g: &GridFunction, conj: SpaceParams) -> f64 {
    let m = morrey_value(g, conj);
    if m == 0.0 {
        return 0.0;
    }
    pairing(f, g).expect("same geometry").abs() / m
}

/// Lower bound on `||f||_{H^p_q}` from the duality with `M^{p'}_{q'}`.
///
/// The search family is every Haar function, every cube indicator, `sign(f)`,
/// the local Hölder extremizers `sign(f) |f|^{q-1} chi_Q`, and coordinate ascent
/// on the cell values of `g` started from `sign(f)`.
pub fn block_norm_lower(f: &GridFunction, params: BlockParams) -> LowerBound {
    block_norm_lower_with(f, params, &SolverOptions::default())
}

pub fn block_norm_lower_with(
    f: &GridFunction,
    params: BlockParams,
    opts: &SolverOptions,
) -> LowerBound {
    let g = *f.geometry();
    let conj = params.conjugate();
    let mut best = LowerBound {
        value: 0.0,
        witness: GridFunction::zeros(g),
    };
    if f.is_zero() {
        return best;
    }
    let mut consider = |h: GridFunction| {
        let r = dual_ratio(f, &h, conj);
        if r > best.value {
            best = LowerBound {
                value: r,
                witness: h,
            };
        }
    };
    for cube in g.all_cubes() {
        consider(GridFunction::indicator(g, &cube).expect("cube in geometry"));
        let mut holder = vec![0.0; g.cell_count()];
        for cell in g.cells_in(&cube) {
            let v = f.values()[cell];
            holder[cell] = v.signum() * v.abs().powf(params.q - 1.0);
        }
        consider(GridFunction::new(g, holder).expect("cell count matches"));
        if cube.level() < g.finest_level() {
            for eps in SignPattern::all(g.dim()) {
                consider(haar_function(eps, &cube, &g).expect("cube in geometry"));
            }
        }
    }
    let sign = f.map(|v| if v == 0.0 { 0.0 } else { v.signum() });
    consider(sign.clone());
    consider(coordinate_ascent(f, sign, conj, opts.ascent_steps));
    best
}

/// Greedy `+-delta` moves on single cells of `g` that raise `<f,g> / ||g||_M`;
/// `delta` halves after a sweep without gain. Each step is one sweep.
fn coordinate_ascent(
    f: &GridFunction,
    start: GridFunction,
    conj: SpaceParams,
    steps: usize,
) -> GridFunction {
    let geom = *f.geometry();
    let (p, q) = (conj.p(), conj.q());
    let mu = geom.cell_measure();
    let maps: Vec<Vec<usize>> = geom.levels().map(|l| geom.ancestor_map(l)).collect();
    let weights: Vec<f64> = geom
        .levels()
        .map(|l| geom.cube_measure(l).powf(1.0 / p - 1.0 / q))
        .collect();
    let mut g = start.into_values();
    let mut sums: Vec<Vec<f64>> = geom
        .levels()
        .map(|l| vec![0.0; geom.cubes_at_level(l)])
        .collect();
    for (l, map) in maps.iter().enumerate() {
        for (cell, &c) in map.iter().enumerate() {
            sums[l][c] += mu * g[cell].abs().powf(q);
        }
    }
    let morrey = |sums: &Vec<Vec<f64>>| {
        sums.iter()
            .zip(&weights)
            .flat_map(|(row, w)| row.iter().map(move |s| w * s.powf(1.0 / q)))
            .fold(0.0f64, f64::max)
    };
    let fv = f.values();
    let mut pair: f64 = fv.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>() * mu;
    let mut norm = morrey(&sums);
    let ratio = |pair: f64, norm: f64| if norm > 0.0 { pair / norm } else { 0.0 };
    let mut delta = 0.5;
    for _ in 0..steps {
        let mut gained = false;
        for cell in 0..g.len() {
            for d in [delta, -delta] {
                let old = g[cell];
                let new = old + d;
                let change = mu * (new.abs().powf(q) - old.abs().powf(q));
                for (l, map) in maps.iter().enumerate() {
                    sums[l][map[cell]] += change;
                }
                let new_pair = pair + mu * fv[cell] * d;
                let new_norm = morrey(&sums);
                if ratio(new_pair, new_norm) > ratio(pair, norm) {
                    g[cell] = new;
                    pair = new_pair;
                    norm = new_norm;
                    gained = true;
                    break;
                }
                for (l, map) in maps.iter().enumerate() {
                    sums[l][map[cell]] -= change;
                }
            }
        }
        if !gained {
            delta *= 0.5;
            if delta < 1e-9 {
                break;
            }
        }
    }
    GridFunction::new(geom, g).expect("cell count matches")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityGap {
    pub upper: f64,
    pub lower: f64,
    /// `upper - lower`.
    pub gap: f64,
    pub converged: bool,
}

pub fn duality_gap_report(f: &GridFunction, params: BlockParams) -> Result<DualityGap> {
    let upper = block_norm_upper(f, params)?;
    let lower = block_norm_lower(f, params);
    Ok(DualityGap {
        upper: upper.value,
        lower: lower.value,
        gap: upper.value - lower.value,
        converged: upper.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geo(n: usize, j0: i32, j1: i32) -> GridGeometry {
        GridGeometry::new(n, j0, j1).unwrap()
    }

    #[test]
    fn params_and_conjugates() {
        assert!(BlockParams::new(1.0, 2.0).is_err());
        assert!(BlockParams::new(3.0, 2.0).is_err());
        let c = BlockParams::new(2.0, 3.0).unwrap().conjugate();
        assert!((c.p() - 2.0).abs() < 1e-15);
        assert!((c.q() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn block_validation() {
        let g = geo(1, 0, 4);
        let params = BlockParams::new(2.0, 3.0).unwrap();
        let q = DyadicCube::new(2, vec![1]);
        // |Q|^{1/q - 1/p} = 4^{1/6}; a constant c on Q has L^3 norm c 4^{-1/3}.
        let c = 4f64.powf(1.0 / 6.0 + 1.0 / 3.0);
        let chi = GridFunction::indicator(g, &q).unwrap();
        assert!(Block::new(q.clone(), chi.scale(c), params).is_ok());
        assert!(Block::new(q.clone(), chi.scale(c * 1.001), params).is_err());
        let outside = GridFunction::indicator(g, &DyadicCube::new(2, vec![0])).unwrap();
        assert!(Block::new(q, outside.scale(0.1), params).is_err());
    }

    #[test]
    fn zero_function() {
        let g = geo(1, 0, 3);
        let params = BlockParams::new(2.0, 3.0).unwrap();
        let up = block_norm_upper(&GridFunction::zeros(g), params).unwrap();
        assert_eq!(up.value, 0.0);
        assert!(up.decomposition.terms.is_empty());
        assert_eq!(block_norm_lower(&GridFunction::zeros(g), params).value, 0.0);
    }

    #[test]
    fn base_indicator_is_bracketed_at_one() {
        let g = geo(1, 0, 4);
        let params = BlockParams::new(2.0, 3.0).unwrap();
        let r = duality_gap_report(&GridFunction::constant(g, 1.0), params).unwrap();
        assert!(r.upper <= 1.0 + 1e-9);
        assert!((r.upper - 1.0).abs() < 1e-6 && (r.lower - 1.0).abs() < 1e-6);
    }

    #[test]
    fn single_block_costs_at_most_one() {
        let g = geo(1, 0, 4);
        let params = BlockParams::new(1.5, 2.5).unwrap();
        let q = DyadicCube::new(2, vec![2]);
        let raw = GridFunction::from_fn(g, |x| if q.contains_point(x) { 1.0 + x[0] } else { 0.0 });
        let size = lq_norm(&raw, params.q(), None).unwrap();
        let f = raw.scale(q.measure().powf(1.0 / params.q() - 1.0 / params.p()) / size);
        let up = block_norm_upper(&f, params).unwrap();
        assert!(up.value <= 1.0 + 1e-9, "upper {}", up.value);
        assert!(up.decomposition.residual() < 1e-9);
        let low = block_norm_lower(&f, params);
        assert!(low.value <= up.value + 1e-9);
        assert!(
            up.value - low.value <= 0.05 * up.value,
            "gap {} vs {}",
            low.value,
            up.value
        );
    }

    #[test]
    fn decomposition_reconstructs_and_is_homogeneous() {
        let g = geo(1, 0, 4);
        let params = BlockParams::new(2.0, 3.0).unwrap();
        let f = GridFunction::from_fn(g, |x| (7.0 * x[0]).sin() + 0.2);
        let a = duality_gap_report(&f, params).unwrap();
        let b = duality_gap_report(&f.scale(2.0), params).unwrap();
        assert!(a.gap >= -1e-9);
        assert!((b.upper - 2.0 * a.upper).abs() < 1e-6 * a.upper);
        assert!((b.lower - 2.0 * a.lower).abs() < 1e-6 * a.lower);
        let up = block_norm_upper(&f, params).unwrap();
        assert!(up.decomposition.residual() < 1e-9);
    }
}
