//! Argument parsing and dispatch.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dyadic_morrey::ensemble::{random_function, rng_from_seed, EnsembleSpec};
use dyadic_morrey::*;

use crate::error::{CliError, CliResult};
use crate::io::FunctionFile;
use crate::report::{fmt_num, ReportTable};
use crate::suites::{self, Suite, VerifyConfig};

#[derive(Debug, Parser)]
#[command(
    name = "dmorrey",
    version,
    about = "Haar, Morrey and commutator computations on dyadic grids"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert between cell values and Haar coefficients.
    Transform {
        input: PathBuf,
        #[arg(long, value_enum)]
        direction: Direction,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a norm of a function file.
    Norm {
        input: PathBuf,
        #[arg(long, value_enum)]
        kind: NormArg,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply an operator and write the resulting function.
    Apply {
        #[arg(value_enum)]
        op: OpArg,
        input: PathBuf,
        /// Symbol `a` for paraproduct and commutator operators.
        #[arg(long)]
        symbol: Option<PathBuf>,
        #[arg(long)]
        alpha: Option<f64>,
        /// Scale cut `L` for the tail operators.
        #[arg(long)]
        cut: Option<i32>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a seeded random function.
    Generate {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Level weight exponent; defaults to `-n/2`.
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<f64>,
        #[arg(long)]
        mean_zero: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a verification suite; exits 1 if any gate fails.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        jmin: Option<i32>,
        #[arg(long = "J", allow_hyphen_values = true)]
        finest: Option<i32>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        ensemble_size: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub jmin: i32,
    #[arg(long = "J", default_value_t = 8, allow_hyphen_values = true)]
    pub finest: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    Forward,
    Inverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    Lq,
    Morrey,
    Bmo,
    Block,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum OpArg {
    Ialpha,
    Paraproduct,
    Commutator,
    TailHigh,
    TailLow,
}

impl OpArg {
    fn name(self) -> &'static str {
        match self {
            OpArg::Ialpha => "ialpha",
            OpArg::Paraproduct => "paraproduct",
            OpArg::Commutator => "commutator",
            OpArg::TailHigh => "tail_high",
            OpArg::TailLow => "tail_low",
        }
    }
}

/// What a successful command produced; `Verify` carries its gate outcome.
pub enum Outcome {
    Done,
    Gates { failures: Vec<String> },
}

pub fn execute(cli: Cli) -> CliResult<Outcome> {
    match cli.command {
        Command::Transform {
            input,
            direction,
            out,
        } => {
            let file = FunctionFile::read(&input)?;
            let mut result = match direction {
                Direction::Forward => FunctionFile::from_coefficients(&file.to_coefficients()?),
                Direction::Inverse => FunctionFile::from_function(&file.to_function()?),
            };
            result.meta = file.meta;
            result.write(&out)?;
            Ok(Outcome::Done)
        }
        Command::Norm {
            input,
            kind,
            p,
            q,
            out,
        } => {
            let f = FunctionFile::read(&input)?.to_function()?;
            let mut cmd = format!(
                "dmorrey norm {} --kind {}",
                input.display(),
                kind_name(kind)
            );
            for (flag, v) in [("--p", p), ("--q", q)] {
                if let Some(v) = v {
                    cmd.push_str(&format!(" {flag} {}", fmt_num(v)));
                }
            }
            let table = norm_table(&f, kind, p, q, &cmd)?;
            table.emit(out.as_deref())?;
            Ok(Outcome::Done)
        }
        Command::Apply {
            op,
            input,
            symbol,
            alpha,
            cut,
            out,
        } => {
            let f = FunctionFile::read(&input)?.to_function()?;
            let a = match symbol {
                Some(path) => Some(FunctionFile::read(&path)?.to_function()?),
                None => None,
            };
            let result = apply(op, &f, a.as_ref(), alpha, cut)?;
            let mut file = FunctionFile::from_function(&result)
                .with_meta("op", op.name())
                .with_meta("input", input.display());
            if let Some(v) = alpha {
                file = file.with_meta("alpha", fmt_num(v));
            }
            if let Some(v) = cut {
                file = file.with_meta("cut", v);
            }
            file = file.with_meta("version", crate::report::VERSION);
            file.write(&out)?;
            Ok(Outcome::Done)
        }
        Command::Generate {
            grid,
            seed,
            theta,
            mean_zero,
            out,
        } => {
            let g = GridGeometry::new(grid.n, grid.jmin, grid.finest)?;
            let theta = theta.unwrap_or(-(grid.n as f64) / 2.0);
            let f = random_function(
                &mut rng_from_seed(seed),
                &EnsembleSpec::new(g, theta, mean_zero),
            );
            FunctionFile::from_function(&f)
                .with_meta("seed", seed)
                .with_meta("theta", fmt_num(theta))
                .with_meta("mean_zero", mean_zero)
                .with_meta("version", crate::report::VERSION)
                .write(&out)?;
            Ok(Outcome::Done)
        }
        Command::Verify {
            suite,
            n,
            jmin,
            finest,
            p,
            q,
            alpha,
            seed,
            ensemble_size,
            theta,
            out,
        } => {
            let cfg = VerifyConfig {
                n,
                jmin,
                finest,
                p,
                q,
                alpha,
                seed,
                ensemble_size,
                theta,
            };
            let outcome = suites::run(suite, &cfg)?;
            outcome.table.emit(out.as_deref())?;
            Ok(Outcome::Gates {
                failures: outcome.failures,
            })
        }
    }
}

fn kind_name(kind: NormArg) -> &'static str {
    match kind {
        NormArg::Lq => "lq",
        NormArg::Morrey => "morrey",
        NormArg::Bmo => "bmo",
        NormArg::Block => "block",
    }
}

fn required(v: Option<f64>, flag: &str, kind: &str) -> CliResult<f64> {
    v.ok_or_else(|| CliError::Usage(format!("--kind {kind} needs {flag}")))
}

/// One-row table for `dmorrey norm`.
pub fn norm_table(
    f: &GridFunction,
    kind: NormArg,
    p: Option<f64>,
    q: Option<f64>,
    cmd: &str,
) -> CliResult<ReportTable> {
    let g = f.geometry();
    let geometry = format!(
        "n={} j_min={} J={}",
        g.dim(),
        g.coarsest_level(),
        g.finest_level()
    );
    let table = match kind {
        NormArg::Lq => {
            let q = required(q, "--q", "lq")?;
            if !(q >= 1.0 && q.is_finite()) {
                return Err(CliError::Usage(format!("q = {q} violates 1 <= q < inf")));
            }
            let mut t = ReportTable::new(cmd, &["kind", "value"]);
            t.meta("geometry", geometry)
                .meta("params", format!("q={}", fmt_num(q)));
            t.push(vec!["lq".into(), fmt_num(lq_norm(f, q, None)?)]);
            t
        }
        NormArg::Morrey => {
            let (p, q) = (required(p, "--p", "morrey")?, required(q, "--q", "morrey")?);
            if q > p {
                return Err(CliError::Usage(format!(
                    "morrey exponents violate q <= p (p = {p}, q = {q})"
                )));
            }
            let r = morrey_norm(f, SpaceParams::new(p, q)?);
            let mut t = ReportTable::new(cmd, &["kind", "value", "witness"]);
            t.meta("geometry", geometry)
                .meta("params", format!("p={} q={}", fmt_num(p), fmt_num(q)));
            t.push(vec![
                "morrey".into(),
                fmt_num(r.value),
                r.witness.to_string(),
            ]);
            t
        }
        NormArg::Bmo => {
            let r = bmo_report(f);
            let mut t = ReportTable::new(cmd, &["kind", "value", "witness"]);
            t.meta("geometry", geometry);
            t.push(vec!["bmo".into(), fmt_num(r.value), r.witness.to_string()]);
            t
        }
        NormArg::Block => {
            let (p, q) = (required(p, "--p", "block")?, required(q, "--q", "block")?);
            if p > q {
                return Err(CliError::Usage(format!(
                    "block exponents violate p <= q (p = {p}, q = {q})"
                )));
            }
            let r = duality_gap_report(f, BlockParams::new(p, q)?)?;
            let mut t = ReportTable::new(cmd, &["kind", "upper", "lower", "gap", "converged"]);
            t.meta("geometry", geometry)
                .meta("params", format!("p={} q={}", fmt_num(p), fmt_num(q)));
            t.push(vec![
                "block".into(),
                fmt_num(r.upper),
                fmt_num(r.lower),
                fmt_num(r.gap),
                r.converged.to_string(),
            ]);
            t
        }
    };
    Ok(table)
}

/// Operator application behind `dmorrey apply`.
pub fn apply(
    op: OpArg,
    f: &GridFunction,
    a: Option<&GridFunction>,
    alpha: Option<f64>,
    cut: Option<i32>,
) -> CliResult<GridFunction> {
    let name = op.name();
    let need_alpha = || alpha.ok_or_else(|| CliError::Usage(format!("{name} needs --alpha")));
    let need_symbol = || a.ok_or_else(|| CliError::Usage(format!("{name} needs --symbol")));
    let need_cut = || cut.ok_or_else(|| CliError::Usage(format!("{name} needs --cut")));
    if let Some(a) = a {
        if a.geometry() != f.geometry() {
            return Err(CliError::Usage(
                "symbol and input have different geometries".into(),
            ));
        }
    }
    let out = match op {
        OpArg::Ialpha => fractional_integral(f, need_alpha()?)?,
        OpArg::Paraproduct => paraproduct(need_symbol()?, f)?,
        OpArg::Commutator => commutator_direct(need_symbol()?, f, need_alpha()?)?,
        OpArg::TailHigh => {
            commutator_tail_high(need_symbol()?, f, need_alpha()?, need_cut()?)?.function
        }
        OpArg::TailLow => {
            commutator_tail_low(need_symbol()?, f, need_alpha()?, need_cut()?)?.function
        }
    };
    Ok(out)
}
