//! Verification suites: seeded experiments whose gates decide the exit status.
//!
//! Band suites measure an empirical constant on a coarse grid (`J - j_min = 4`)
//! and on the requested grid and gate on the drift `C(fine) / C(coarse)` lying
//! in `[0.5, 2]`. Exact suites gate on residuals.

use std::fmt::Write as _;

use clap::ValueEnum;
use dyadic_morrey::ensemble::{random_ensemble, random_haar_span, rng_from_seed, EnsembleSpec};
use dyadic_morrey::estimation::{local_square_function_ratio, square_function_ratio};
use dyadic_morrey::*;

use crate::error::{CliError, CliResult};
use crate::report::{fmt_num, ReportTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Thm1,
    Prop21,
    Thm2,
    Thm3,
    Thm4,
    Thm5,
    Thm6,
    Thm7,
    Decomp,
}

impl Suite {
    pub fn name(&self) -> &'static str {
        match self {
            Suite::Thm1 => "thm1",
            Suite::Prop21 => "prop21",
            Suite::Thm2 => "thm2",
            Suite::Thm3 => "thm3",
            Suite::Thm4 => "thm4",
            Suite::Thm5 => "thm5",
            Suite::Thm6 => "thm6",
            Suite::Thm7 => "thm7",
            Suite::Decomp => "decomp",
        }
    }
}

/// Flag values; `None` falls back to the suite's default.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub n: Option<usize>,
    pub jmin: Option<i32>,
    pub finest: Option<i32>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub alpha: Option<f64>,
    pub seed: u64,
    pub ensemble_size: Option<usize>,
    pub theta: Option<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            n: None,
            jmin: None,
            finest: None,
            p: None,
            q: None,
            alpha: None,
            seed: 42,
            ensemble_size: None,
            theta: None,
        }
    }
}

pub struct SuiteOutcome {
    pub table: ReportTable,
    /// Labels of the failed gates.
    pub failures: Vec<String>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

const DRIFT: (f64, f64) = (0.5, 2.0);
const COARSE_DEPTH: i32 = 4;

/// Parameters after suite defaults are applied.
struct Setup {
    suite: Suite,
    n: usize,
    jmin: i32,
    finest: i32,
    seed: u64,
    size: usize,
    theta: f64,
    explicit: Vec<(String, String)>,
}

impl Setup {
    fn new(
        suite: Suite,
        cfg: &VerifyConfig,
        size: usize,
        geometry: (usize, i32, i32),
    ) -> CliResult<Self> {
        let n = cfg.n.unwrap_or(geometry.0);
        let jmin = cfg.jmin.unwrap_or(geometry.1);
        let finest = cfg.finest.unwrap_or(geometry.2);
        GridGeometry::new(n, jmin, finest)?;
        if finest - jmin < 1 {
            return Err(CliError::Usage("need J > j_min".into()));
        }
        let size = cfg.ensemble_size.unwrap_or(size);
        if size == 0 {
            return Err(CliError::Usage("--ensemble-size must be positive".into()));
        }
        let mut explicit = Vec::new();
        for (name, v) in [("--p", cfg.p), ("--q", cfg.q), ("--alpha", cfg.alpha)] {
            if let Some(v) = v {
                explicit.push((name.to_string(), fmt_num(v)));
            }
        }
        Ok(Self {
            suite,
            n,
            jmin,
            finest,
            seed: cfg.seed,
            size,
            theta: cfg.theta.unwrap_or(-(n as f64) / 2.0),
            explicit,
        })
    }

    fn geometry(&self, finest: i32) -> GridGeometry {
        GridGeometry::new(self.n, self.jmin, finest).expect("validated in Setup::new")
    }

    fn fine(&self) -> GridGeometry {
        self.geometry(self.finest)
    }

    fn coarse(&self) -> GridGeometry {
        self.geometry(self.finest.min(self.jmin + COARSE_DEPTH))
    }

    fn ensemble(
        &self,
        g: GridGeometry,
        stream: u64,
        count: usize,
        mean_zero: bool,
    ) -> Vec<GridFunction> {
        random_ensemble(
            self.seed.wrapping_add(stream),
            count,
            &EnsembleSpec::new(g, self.theta, mean_zero),
        )
    }

    fn recorder(&self) -> Recorder {
        let mut cmd = format!(
            "dmorrey verify {} --n {} --jmin {} --J {} --seed {} --ensemble-size {} --theta {}",
            self.suite.name(),
            self.n,
            self.jmin,
            self.finest,
            self.seed,
            self.size,
            fmt_num(self.theta)
        );
        for (k, v) in &self.explicit {
            let _ = write!(cmd, " {k} {v}");
        }
        let mut table = ReportTable::new(&cmd, &["label", "value", "limit", "status"]);
        table
            .meta("suite", self.suite.name())
            .meta("seed", self.seed)
            .meta(
                "geometry",
                format!(
                    "n={} j_min={} J={} coarse_J={}",
                    self.n,
                    self.jmin,
                    self.finest,
                    self.coarse().finest_level()
                ),
            )
            .meta(
                "ensemble",
                format!("size={} theta={}", self.size, fmt_num(self.theta)),
            );
        Recorder {
            table,
            failures: Vec::new(),
        }
    }
}

struct Recorder {
    table: ReportTable,
    failures: Vec<String>,
}

impl Recorder {
    fn param(&mut self, text: String) {
        self.table.meta("params", text);
    }

    fn info(&mut self, label: String, value: f64) {
        self.table
            .push(vec![label, fmt_num(value), String::new(), "info".into()]);
    }

    fn check(&mut self, label: String, value: f64, limit: &str, ok: bool) {
        let status = if ok { "PASS" } else { "FAIL" };
        if !ok {
            self.failures.push(label.clone());
        }
        self.table
            .push(vec![label, fmt_num(value), limit.into(), status.into()]);
    }

    fn at_most(&mut self, label: String, value: f64, limit: f64) {
        self.check(
            label,
            value,
            &format!("<= {}", fmt_num(limit)),
            value <= limit,
        );
    }

    /// Constant at each resolution plus the gated drift.
    fn drift(&mut self, label: &str, coarse: (i32, Option<f64>), fine: (i32, Option<f64>)) {
        let c = coarse.1.unwrap_or(f64::NAN);
        let f = fine.1.unwrap_or(f64::NAN);
        self.info(format!("{label} J={}", coarse.0), c);
        self.info(format!("{label} J={}", fine.0), f);
        let d = f / c;
        let ok = c.is_finite() && f.is_finite() && c > 0.0 && d >= DRIFT.0 && d <= DRIFT.1;
        self.check(
            format!("{label} drift"),
            d,
            &format!("[{}, {}]", DRIFT.0, DRIFT.1),
            ok,
        );
    }

    /// `upper = max ratio`; with `two_sided`, also `lower = 1 / min ratio`.
    fn band(
        &mut self,
        label: &str,
        coarse: (i32, Option<RatioBand>),
        fine: (i32, Option<RatioBand>),
        two_sided: bool,
    ) {
        let upper = |b: Option<RatioBand>| b.map(|b| b.max);
        self.drift(
            &format!("{label} upper"),
            (coarse.0, upper(coarse.1)),
            (fine.0, upper(fine.1)),
        );
        if two_sided {
            let lower = |b: Option<RatioBand>| b.map(|b| 1.0 / b.min);
            self.drift(
                &format!("{label} lower"),
                (coarse.0, lower(coarse.1)),
                (fine.0, lower(fine.1)),
            );
        }
    }

    fn finish(self) -> SuiteOutcome {
        SuiteOutcome {
            table: self.table,
            failures: self.failures,
        }
    }
}

fn space(p: f64, q: f64) -> CliResult<SpaceParams> {
    Ok(SpaceParams::new(p, q)?)
}

/// Explicit `--p/--q` pair, or the suite's default list.
fn space_list(cfg: &VerifyConfig, defaults: &[(f64, f64)]) -> CliResult<Vec<SpaceParams>> {
    match (cfg.p, cfg.q) {
        (Some(p), Some(q)) => Ok(vec![space(p, q)?]),
        (None, None) => defaults.iter().map(|&(p, q)| space(p, q)).collect(),
        _ => Err(CliError::Usage("--p and --q must be given together".into())),
    }
}

fn alpha_list(cfg: &VerifyConfig, defaults: &[f64]) -> Vec<f64> {
    cfg.alpha.map_or_else(|| defaults.to_vec(), |a| vec![a])
}

fn tag(params: SpaceParams) -> String {
    format!("p={} q={}", fmt_num(params.p()), fmt_num(params.q()))
}

pub fn run(suite: Suite, cfg: &VerifyConfig) -> CliResult<SuiteOutcome> {
    match suite {
        Suite::Thm1 => thm1(cfg),
        Suite::Prop21 => prop21(cfg),
        Suite::Thm2 => thm2(cfg),
        Suite::Thm3 => thm3(cfg),
        Suite::Thm4 => thm4(cfg),
        Suite::Thm5 => thm5(cfg),
        Suite::Thm6 => thm6(cfg),
        Suite::Thm7 => thm7(cfg),
        Suite::Decomp => decomp(cfg),
    }
}

const MORREY_PAIRS: [(f64, f64); 3] = [(2.0, 2.0), (4.0, 2.0), (3.0, 1.5)];
/// Admissible for both alphas below with n = 1: `1/s = 1/p - alpha > 0`.
const FRACTIONAL_PAIR: (f64, f64) = (1.6, 1.2);
const ALPHAS: [f64; 2] = [0.25, 0.5];
const TAIL_WOBBLE: f64 = 1e-3;

fn band_of(
    fs: &[GridFunction],
    ratio: impl Fn(&GridFunction) -> CliResult<Option<f64>>,
) -> CliResult<Option<RatioBand>> {
    let mut values = Vec::with_capacity(fs.len());
    for f in fs {
        if let Some(r) = ratio(f)? {
            values.push(r);
        }
    }
    Ok(RatioBand::from_ratios(values))
}

fn thm1(cfg: &VerifyConfig) -> CliResult<SuiteOutcome> {
    let s = Setup::new(Suite::Thm1, cfg, 500, (1, 0, 8))?;
    let list = space_list(cfg, &MORREY_PAIRS)?;
    let mut rec = s.recorder();
    rec.param(list.iter().map(|&p| tag(p)).collect::<Vec<_>>().join("; "));
    let (gc, gf) = (s.coarse(), s.fine());
    let (ec, ef) = (
        s.ensemble(gc, 0, s.size, true),
        s.ensemble(gf, 0, s.size, true),
    );
    for &params in &list {
        let norm = NormKind::Morrey(params);
        let ratio = |f: &GridFunction| Ok(square_function_ratio(f, norm)?);
        let bc = band_of(&ec, ratio)?;
        let bf = band_of(&ef, ratio)?;
        rec.band(
            &format!("square function {}", tag(params)),
            (gc.finest_level(), bc),
            (gf.finest_level(), bf),
            true,
        );
    }
    // Nonhomogeneous comparison with the M^p_1 term, depths 4 and 6.
    let (g4, g6) = (s.geometry(s.jmin + 4), s.geometry(s.jmin + 6));
    let (e4, e6) = (
        s.ensemble(g4, 1, s.size, false),
        s.ensemble(g6, 1, s.size, false),
    );
    for &params in &list {
        let ratio = |f: &GridFunction| Ok(local_square_function_ratio(f, params)?);
        let b4 = band_of(&e4, ratio)?;
        let b6 = band_of(&e6, ratio)?;
        rec.band(
            &format!("local square function {}", tag(params)),
            (g4.finest_level(), b4),
            (g6.finest_level(), b6),
            true,
        );
    }
    Ok(rec.finish())
}

fn prop21(cfg: &VerifyConfig) -> CliResult<SuiteOutcome> {
    let s = Setup::new(Suite::Prop21, cfg, 500, (1, 0, 8))?;
    let qs = cfg.q.map_or_else(|| vec![1.5, 3.0], |q| vec![q]);
    let mut rec = s.recorder();
    rec.param(format!("q in {qs:?}"));
    let (gc, gf) = (s.coarse(), s.fine());
    let (ec, ef) = (
        s.ensemble(gc, 0, s.size, true),
        s.ensemble(gf, 0, s.size, true),
    );

    let general = s.ensemble(gf, 1, s.size, false);
    let (mut round, mut parseval, mut local) = (0.0f64, 0.0f64, 0.0f64);
    for (i, f) in general.iter().enumerate() {
        let c = forward_transform(f);
        round = round.max(inverse_transform(&c).relative_l2_distance(f)?);
        let l2 = lq_norm(f, 2.0, None)?.powi(2);
        let coeff = c.base_mean().powi(2) * gf.base_measure() + c.energy();
        parseval = parseval.max((l2 - coeff).abs() / l2);
        if i < 20 {
            for r in gf.all_cubes() {
                let osc = oscillation_norm(f, &r, 2.0)?.powi(2);
                let energy: f64 = c
                    .entries()
                    .filter(|(_, q, _)| r.contains(q))
                    .map(|(_, _, v)| v * v)
                    .sum();
                local = local.max((osc - energy).abs() / l2);
            }
        }
    }
    rec.at_most("round trip relative error".into(), round, 1e-12);
    rec.at_most("parseval relative error".into(), parseval, 1e-10);
    rec.at_most("local oscillation identity error".into(), local, 1e-10);

    for &q in &qs {
        if q < 1.0 {
            return Err(CliError::Usage(format!("q = {q} violates q >= 1")));
        }
        let ratio = |f: &GridFunction| Ok(square_function_ratio(f, NormKind::Lebesgue(q))?);
        let bc = band_of(&ec, ratio)?;
        let bf = band_of(&ef, ratio)?;
        rec.band(
            &format!("lebesgue square function q={}", fmt_num(q)),
            (gc.finest_level(), bc),
            (gf.finest_level(), bf),
            true,
        );
    }
    Ok(rec.finish())
}

fn thm2(cfg: &VerifyConfig) -> CliResult<SuiteOutcome> {
    let s = Setup::new(Suite::Thm2, cfg, 500, (1, 0, 8))?;
    let list = space_list(cfg, &MORREY_PAIRS)?;
    let mut rec = s.recorder();
    rec.param(list.iter().map(|&p| tag(p)).collect::<Vec<_>>().join("; "));
    let mut bands = Vec::new();
    for g in [s.coarse(), s.fine()] {
        let fs = s.ensemble(g, 0, s.size, false);
        let symbols = s.ensemble(g, 1, s.size, true);
        let mut per_params = Vec::new();
        for &params in &list {
            let mut values = Vec::with_capacity(fs.len());
            for (f, a) in fs.iter().zip(&symbols) {
                let den = bmo_norm(a) * morrey_value(f, params);
                if den > 0.0 {
                    values.push(morrey_value(&paraproduct(a, f)?, params) / den);
                }
            }
            per_params.push(RatioBand::from_ratios(values));
        }
        // L^2 paraproduct norm against BMO over a few symbols.
        let probes = &fs[..fs.len().min(20)];
        let mut ratios = Vec::new();
        for a in symbols.iter().take(50) {
            let b = bmo_norm(a);
            if b > 0.0 {
                ratios.push(paraproduct_bmo_norm(a, NormKind::Lebesgue(2.0), probes)? / b);
            }
        }
        if let Some(b) = RatioBand::from_ratios(ratios) {
            rec.info(
                format!("L2 paraproduct / bmo min J={}", g.finest_level()),
                b.min,
            );
            rec.info(
                format!("L2 paraproduct / bmo max J={}", g.finest_level()),
                b.max,
            );
        }
        bands.push((g.finest_level(), per_params));
    }
    for (k, &params) in list.iter().enumerate() {
        rec.band(
            &format!("paraproduct {}", tag(params)),
            (bands[0].0, bands[0].1[k]),
            (bands[1].0, bands[1].1[k]),
            false,
        );
    }
    Ok(rec.finish())
}

fn fractional_pairs(
    cfg: &VerifyConfig,
    n: usize,
) -> CliResult<Vec<(f64, SpaceParams, SpaceParams)>> {
    let params = space_list(cfg, &[FRACTIONAL_PAIR])?[0];
    alpha_list(cfg, &ALPHAS)
        .into_iter()
        .map(|alpha| {
            let target = FractionalParams::new(alpha, n)?.target(params)?;
            Ok((alpha, params, target))
        })
        .collect()
}

fn fractional_tag(alpha: f64, params: SpaceParams, target: SpaceParams) -> String {
    format!(
        "alpha={} {} s={} t={}",
        fmt_num(alpha),
        tag(params),
        fmt_num(target.p()),
        fmt_num(target.q())
    )
}

fn thm3(cfg: &VerifyConfig) -> CliResult<SuiteOutcome> {
    let s = Setup::new(Suite::Thm3, cfg, 500, (1, 0, 8))?;
    let pairs = fractional_pairs(cfg, s.n)?;
    let mut rec = s.recorder();
    rec.param(
        pairs
            .iter()
            .map(|&(a, p, t)| fractional_tag(a, p, t))
            .collect::<Vec<_>>()
            .join("; "),
    );
    let (gc, gf) = (s.coarse(), s.fine());
    let (ec, ef) = (
        s.ensemble(gc, 0, s.size, true),
        s.ensemble(gf, 0, s.size, true),
    );
    for &(alpha, params, target) in &pairs {
        let label = fractional_tag(alpha, params, target);
        let ratio = |f: &GridFunction| {
            let den = morrey_value(f, params);
            Ok((den > 0.0)
                .then(|| morrey_value(&fractional_integral(f, alpha).unwrap(), target) / den))
        };
        let bc = band_of(&ec, ratio)?;
        let bf = band_of(&ef, ratio)?;
        rec.band(
            &format!("fractional integral {label}"),
            (gc.finest_level(), bc),
            (gf.finest_level(), bf),
            false,
        );

        let mut violations = 0usize;
        for f in ec.iter().chain(&ef) {
            for m in pointwise_majorant(f, alpha, params)? {
                violations += m.violations(1e-12);
            }
        }
        rec.check(
            format!("pointwise majorant violations {label}"),
            violations as f64,
            "= 0",
            violations == 0,
        );

        let mut eigen = 0.0f64;
        for cube in gf.all_cubes().filter(|q| q.level() < gf.finest_level()) {
            for eps in SignPattern::all(s.n) {
                let h = haar_function(eps, &cube, &gf)?;
                let w = cube.measure().powf(alpha / s.n as f64);
                let got = fractional_integral(&h, alpha)?;
                eigen = eigen.max(got.max_abs_difference(&h.scale(w))? / (w * h.max_abs()));
            }
        }
        rec.at_most(
            format!("eigen relation error alpha={}", fmt_num(alpha)),
            eigen,
            1e-12,
        );

        let cube = gf.cube_at(
            gf.coarsest_level() + gf.depth().min(2) as i32,
            1.min(gf.cubes_at_level(gf.coarsest_level() + gf.depth().min(2) as i32) - 1),
        );
        let bump = fractional_bump(&gf, &cube, alpha)?;
        rec.at_most(
            format!("bump closed form error alpha={} {cube}", fmt_num(alpha)),
            (bump.on_cube - bump.closed_form).abs() / bump.closed_form.abs().max(f64::MIN_POSITIVE),
            1e-12,
        );
        rec.info(
            format!("bump off-cube max alpha={} {cube}", fmt_num(alpha)),
            bump.off_cube_max,
        );
    }
    Ok(rec.finish())
}

fn thm4(cfg: &VerifyConfig) -> CliResult<SuiteOutcome> {
    let s = Setup::new(Suite::Thm4, cfg, 500, (1, 0, 8))?;
    let pairs = fractional_pairs(cfg, s.n)?;
    let mut rec = s.recorder();
    rec.param(
        pairs
            .iter()
            .map(|&(a, p, t)| fractional_tag(a, p, t))
            .collect::<Vec<_>>()
            .join("; "),
    );
    let (gc, gf) = (s.coarse(), s.fine());
    for &(alpha, params, target) in &pairs {
        let mut bands = Vec::new();
        for g in [gc, gf] {
            let fs = s.ensemble(g, 0, s.size, false);
            let symbols = s.ensemble(g, 1, s.size, true);
            let mut values = Vec::with_capacity(fs.len());
            for (f, a) in fs.iter().zip(&symbols) {
                let den = bmo_norm(a) * morrey_value(f, params);
                if den > 0.0 {
                    values.push(morrey_value(&commutator_direct(a, f, alpha)?, target) / den);
                }
            }
            bands.push((g.finest_level(), RatioBand::from_ratios(values)));
        }
        rec.band(
            &format!("commutator {}", fractional_tag(alpha, params, target)),
            bands[0],
            bands[1],
            false,
        );
    }
    Ok(rec.finish())
}

fn thm5(cfg: &VerifyConfig) -> CliResult<SuiteOutcome> {
    let s = Setup::new(Suite::Thm5, cfg, 100, (1, 0, 8))?;
    let pairs = fractional_pairs(cfg, s.n)?;
    let mut rec = s.recorder();
    rec.param(
        pairs
            .iter()
            .map(|&(a, p, t)| fractional_tag(a, p, t))
            .collect::<Vec<_>>()
            .join("; "),
    );
    rec.param(
        "Haar test functions divided by their computed Morrey norm; \
         exponent readings |Q|^(1/p-1/2) (matches computation) and |Q|^(-1/p-1/2) (unused)"
            .into(),
    );
    for &(alpha, params, target) in &pairs {
        let label = fractional_tag(alpha, params, target);
        let mut bands = Vec::new();
        for g in [s.coarse(), s.fine()] {
            let symbols: Vec<GridFunction> = s
                .ensemble(g, 1, s.size, true)
                .into_iter()
                .filter_map(|a| {
                    let b = bmo_norm(&a);
                    (b > 0.0).then(|| a.scale(1.0 / b))
                })
                .collect();
            let probes = s.ensemble(g, 2, 20, false);
            let rows = cube_testing_report(&symbols, alpha, params, &probes)?;
            let band = RatioBand::from_ratios(
                rows.iter()
                    .filter(|r| r.lower > 0.0)
                    .map(|r| r.bmo_over_lower),
            );
            if let Some(b) = band {
                rec.info(
                    format!("max lower / bmo {label} J={}", g.finest_level()),
                    1.0 / b.min,
                );
            }
            let probe_max = rows.iter().fold(0.0f64, |m, r| m.max(r.probe_over_bmo));
            rec.info(
                format!("max probe / bmo {label} J={}", g.finest_level()),
                probe_max,
            );
            bands.push((g.finest_level(), band));
        }
        rec.band(
            &format!("bmo / cube testing {label}"),
            bands[0],
            bands[1],
            false,
        );
    }
    Ok(rec.finish())
}

fn thm6(cfg: &VerifyConfig) -> CliResult<SuiteOutcome> {
    let s = Setup::new(Suite::Thm6, cfg, 200, (1, 0, 6))?;
    let (p, q) = match (cfg.p, cfg.q) {
        (Some(p), Some(q)) => (p, q),
        (None, None) => (2.0, 3.0),
        _ => return Err(CliError::Usage("--p and --q must be given together".into())),
    };
    let params = BlockParams::new(p, q)?;
    let conj = params.conjugate();
    let mut rec = s.recorder();
    rec.param(format!(
        "block p={} q={}; dual Morrey p'={} q'={}",
        fmt_num(p),
        fmt_num(q),
        fmt_num(conj.p()),
        fmt_num(conj.q())
    ));
    let g = s.fine();
    let fs = s.ensemble(g, 0, s.size, false);
    let gs = s.ensemble(g, 1, 20, false);

    let mut uppers = Vec::with_capacity(fs.len());
    let (mut bracket, mut worst_gap, mut converged) = (f64::NEG_INFINITY, 0.0f64, 0usize);
    for f in &fs {
        let up = block_norm_upper(f, params)?;
        let low = block_norm_lower(f, params);
        bracket = bracket.max(low.value - up.value);
        worst_gap = worst_gap.max((up.value - low.value) / up.value);
        converged += up.converged as usize;
        uppers.push(up.value);
    }
    rec.at_most("max lower - upper".into(), bracket, 1e-9);
    rec.info("max relative gap".into(), worst_gap);
    rec.info("converged runs".into(), converged as f64);

    let mut holder = 0.0f64;
    for (f, up) in fs.iter().zip(&uppers) {
        for h in &gs {
            let bound = up * morrey_value(h, conj);
            holder = holder.max(pairing(f, h)?.abs() / bound);
        }
    }
    rec.at_most(
        "max |<f,g>| / (upper(f) morrey(g))".into(),
        holder,
        1.0 + 1e-12,
    );

    let mut rng = rng_from_seed(s.seed.wrapping_add(3));
    let mut single = 0.0f64;
    for _ in 0..20 {
        let level = g.coarsest_level()
            + dyadic_morrey::ensemble::uniform_index(&mut rng, g.depth() + 1) as i32;
        let cube = g.cube_at(
            level,
            dyadic_morrey::ensemble::uniform_index(&mut rng, g.cubes_at_level(level)),
        );
        let mut values = vec![0.0; g.cell_count()];
        for c in g.cells_in(&cube) {
            values[c] = dyadic_morrey::ensemble::symmetric_uniform(&mut rng);
        }
        let raw = GridFunction::new(g, values)?;
        let size = lq_norm(&raw, q, None)?;
        if size == 0.0 {
            continue;
        }
        let block = raw.scale(cube.measure().powf(1.0 / q - 1.0 / p) / size);
        single = single.max(block_norm_upper(&block, params)?.value);
    }
    rec.at_most("max upper over single blocks".into(), single, 1.0 + 1e-9);

    let base = duality_gap_report(&GridFunction::constant(g, 1.0), params)?;
    let base_err = (base.upper - 1.0).abs().max((base.lower - 1.0).abs());
    rec.at_most("base indicator |bound - 1|".into(), base_err, 1e-6);

    let mut triangle = f64::NEG_INFINITY;
    for k in 0..fs.len().min(20) {
        let j = (k + 1) % fs.len();
        let sum = block_norm_upper(&(&fs[k] + &fs[j]), params)?.value;
        triangle = triangle.max(sum - uppers[k] - uppers[j]);
    }
    rec.at_most(
        "max upper(f+g) - upper(f) - upper(g)".into(),
        triangle,
        1e-6,
    );
    Ok(rec.finish())
}

fn thm7(cfg: &VerifyConfig) -> CliResult<SuiteOutcome> {
    let s = Setup::new(Suite::Thm7, cfg, 10, (1, -2, 6))?;
    let pairs = fractional_pairs(cfg, s.n)?;
    let (alpha, params, target) = pairs[0];
    let mut rec = s.recorder();
    rec.param(fractional_tag(alpha, params, target));
    let g = s.fine();
    let exhaust = (-g.coarsest_level()).max(g.finest_level() - 1).max(0) as u32;
    let l_grid: Vec<u32> = (0..=exhaust + 1).collect();
    let mut r_grid = vec![0.0];
    let mut r = 1.0;
    while r <= (1u64 << g.depth()) as f64 {
        r_grid.push(r);
        r *= 2.0;
    }
    rec.param(format!("L in 0..={}; R in {{0, 1, 2, 4, ..}}", exhaust + 1));
    let probes = s.ensemble(g, 2, 20, false);

    let mut rng = rng_from_seed(s.seed.wrapping_add(3));
    let spans: Vec<GridFunction> = (0..s.size)
        .map(|k| random_haar_span(&mut rng, g, 1 + k % 8))
        .collect();
    let randoms = s.ensemble(g, 1, s.size, true);
    let eps = SignPattern::all(s.n)[0];
    let mut ladder = GridFunction::zeros(g);
    for j in g.coarsest_level()..g.finest_level() {
        let cube = g.cube_at(j, 0);
        ladder = &ladder + &haar_function(eps, &cube, &g)?.scale(cube.measure().sqrt());
    }

    let (mut tails, mut vmo, mut spatial) = (0.0f64, 0.0f64, 0.0f64);
    let mut unreached = 0usize;
    let mut last_zero = 0.0f64;
    let mut reports = Vec::new();
    for (kind, a) in spans
        .iter()
        .map(|a| ("span", a))
        .chain(randoms.iter().map(|a| ("random", a)))
        .chain(std::iter::once(("ladder", &ladder)))
    {
        let r = compactness_diagnostic(a, alpha, params, &l_grid, &r_grid, &probes)?;
        tails = tails
            .max(r.high.max_relative_increase())
            .max(r.low.max_relative_increase());
        vmo = vmo.max(r.vmo_distance.max_relative_increase());
        spatial = spatial.max(r.spatial.max_relative_increase());
        if kind == "span" {
            match r.vmo_distance.zero_from() {
                Some(l) => last_zero = last_zero.max(l),
                None => unreached += 1,
            }
        }
        reports.push((kind, r));
    }
    rec.check(
        "finite expansions without a zero vmo distance".into(),
        unreached as f64,
        "= 0",
        unreached == 0,
    );
    rec.info(
        "largest L where a finite expansion reaches 0".into(),
        last_zero,
    );
    // Tail values are probe maxima, so a flat profile can wobble slightly.
    rec.at_most(
        "tail profile max relative increase".into(),
        tails,
        TAIL_WOBBLE,
    );
    rec.at_most("vmo distance max relative increase".into(), vmo, 1e-12);
    rec.info("spatial profile max relative increase".into(), spatial);

    let (_, ladder_report) = reports.last().expect("ladder is last");
    let v = ladder_report.vmo_distance.values();
    let floor = v[..exhaust as usize]
        .iter()
        .fold(f64::INFINITY, |m, &x| m.min(x));
    rec.check(
        format!("ladder vmo floor for L < {exhaust}"),
        floor,
        "> 0",
        floor > 0.0,
    );
    rec.check(
        format!("ladder vmo distance at L = {exhaust}"),
        v[exhaust as usize],
        "= 0",
        v[exhaust as usize] == 0.0,
    );
    for (name, prof) in [("high", &ladder_report.high), ("low", &ladder_report.low)] {
        for (l, val) in prof.grid().iter().zip(prof.values()) {
            rec.info(format!("ladder {name} tail L={l}"), *val);
        }
    }
    Ok(rec.finish())
}

fn decomp(cfg: &VerifyConfig) -> CliResult<SuiteOutcome> {
    let s = Setup::new(Suite::Decomp, cfg, 50, (1, 0, 8))?;
    let alphas = alpha_list(cfg, &ALPHAS);
    let mut rec = s.recorder();
    rec.param(format!("alpha in {alphas:?}"));
    let g = s.fine();
    let fs = s.ensemble(g, 0, s.size, true);
    let symbols = s.ensemble(g, 1, s.size, true);
    for &alpha in &alphas {
        FractionalParams::new(alpha, s.n)?;
        let (mut full, mut haar, mut mean) = (0.0f64, 0.0f64, 0.0f64);
        for (a, f) in symbols.iter().zip(&fs) {
            let direct = commutator_direct(a, f, alpha)?;
            let mut sum = GridFunction::zeros(g);
            for eps in SignPattern::all(s.n) {
                sum = &sum + &commutator_terms(a, f, alpha, eps)?.combined();
            }
            full = full.max(sum.relative_l2_distance(&direct)?);
            let hd = haar_band(&direct, i64::MIN, i64::MAX).function;
            let hs = haar_band(&sum, i64::MIN, i64::MAX).function;
            haar = haar.max(hs.relative_l2_distance(&hd)?);
            mean = mean.max((direct.integral() / g.base_measure()).abs());
        }
        let a = fmt_num(alpha);
        rec.at_most(format!("identity residual alpha={a}"), full, 1e-9);
        rec.at_most(format!("haar part residual alpha={a}"), haar, 1e-9);
        rec.info(format!("max |mean of commutator| alpha={a}"), mean);
    }
    Ok(rec.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(suite: Suite, size: usize) -> SuiteOutcome {
        let cfg = VerifyConfig {
            ensemble_size: Some(size),
            finest: Some(5),
            ..VerifyConfig::default()
        };
        run(suite, &cfg).unwrap()
    }

    #[test]
    fn decomp_passes_on_small_grid() {
        let out = small(Suite::Decomp, 5);
        assert!(out.passed(), "{:?}", out.failures);
    }

    #[test]
    fn inadmissible_fractional_exponents_are_rejected() {
        let cfg = VerifyConfig {
            p: Some(4.0),
            q: Some(2.0),
            alpha: Some(0.25),
            ..VerifyConfig::default()
        };
        assert!(matches!(run(Suite::Thm3, &cfg), Err(CliError::Usage(m)) if m.contains("1/s")));
    }

    #[test]
    fn lone_p_is_a_usage_error() {
        let cfg = VerifyConfig {
            p: Some(4.0),
            ..VerifyConfig::default()
        };
        assert!(matches!(run(Suite::Thm1, &cfg), Err(CliError::Usage(_))));
    }

    #[test]
    fn reports_are_reproducible() {
        let a = small(Suite::Thm2, 10).table.to_csv();
        let b = small(Suite::Thm2, 10).table.to_csv();
        assert_eq!(a, b);
    }
}
