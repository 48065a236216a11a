//! Command-line flags and the validated run configuration.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use pv5_jacobi::verify::SuiteKind;
use pv5_jacobi::{num, PrecisionContext, Real};
use rug::ops::Pow;
use rug::Float;

use crate::CliError;

#[derive(Parser, Debug, Clone)]
#[command(name = "pv5-jacobi-lab", version, about = "Orthogonal polynomials, ladder operators and Painleve V checks for the singularly perturbed Jacobi weight")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub args: RunArgs,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Moments mu_j, 0 <= j <= n_max.
    Moments,
    /// Norms h_n, recurrence coefficients beta_n and p(n, t).
    Recurrence,
    /// R_n, r_n, a_n, b_n.
    Ladder,
    /// Identity residual checks.
    Verify,
    /// Riccati and Painleve V initial value problems over the t-grid.
    Ode,
    /// Painleve V residual of Phi_n along the t-grid.
    PvResidual,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Moments => "moments",
            Command::Recurrence => "recurrence",
            Command::Ladder => "ladder",
            Command::Verify => "verify",
            Command::Ode => "ode",
            Command::PvResidual => "pv-residual",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Required,
    Diagnostic,
    All,
}

impl Suite {
    pub fn kind(self) -> SuiteKind {
        match self {
            Suite::Required => SuiteKind::Required,
            Suite::Diagnostic => SuiteKind::Diagnostic,
            Suite::All => SuiteKind::All,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Suite::Required => "required",
            Suite::Diagnostic => "diagnostic",
            Suite::All => "all",
        }
    }
}

#[derive(clap::Args, Debug, Clone)]
pub struct RunArgs {
    #[arg(long, global = true, default_value = "1", allow_hyphen_values = true)]
    pub alpha: String,
    #[arg(long, global = true, default_value = "0.25", allow_hyphen_values = true)]
    pub k2: String,
    /// Single deformation time; overrides the grid flags.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub t: Option<String>,
    #[arg(long, global = true, default_value = "0.05", allow_hyphen_values = true)]
    pub t_start: String,
    #[arg(long, global = true, default_value = "1.0", allow_hyphen_values = true)]
    pub t_stop: String,
    #[arg(long, global = true, default_value_t = 12)]
    pub t_count: usize,
    #[arg(long, global = true, value_enum, default_value_t = Spacing::Log)]
    pub t_spacing: Spacing,
    #[arg(long, global = true, default_value_t = 8)]
    pub n_max: usize,
    #[arg(long, global = true, default_value_t = 256)]
    pub bits: u32,
    /// Quadrature tolerance (default 1e-40, or near the precision floor).
    #[arg(long, global = true)]
    pub rel_tol: Option<String>,
    /// JSON report path; standard output when absent.
    #[arg(long, global = true)]
    pub out_json: Option<PathBuf>,
    #[arg(long, global = true)]
    pub out_csv: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Suite::Required)]
    pub suite: Suite,
    /// Seed for the z samples.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Local error tolerance of the `ode` integrations.
    #[arg(long, global = true, default_value = "1e-12")]
    pub ode_tol: String,
}

/// Validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub alpha: Real,
    pub k2: Real,
    pub t_grid: Vec<Real>,
    pub n_max: usize,
    pub ctx: PrecisionContext,
    pub out_json: Option<PathBuf>,
    pub out_csv: Option<PathBuf>,
    pub suite: Suite,
    pub seed: u64,
    pub ode_tol: Real,
}

fn parse(bits: u32, what: &str, s: &str) -> Result<Real, CliError> {
    num::parse(bits, s).map_err(|_| CliError::Usage(format!("--{what}: cannot parse {s:?} as a number")))
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> Result<Self, CliError> {
        let a = &cli.args;
        if a.bits < 64 {
            return Err(CliError::Usage(format!("--bits {} is below 64", a.bits)));
        }
        let p = a.bits;
        let ctx = match &a.rel_tol {
            Some(s) => PrecisionContext::new(p, parse(p, "rel-tol", s)?, 12)?,
            None => PrecisionContext::with_bits(p)?,
        };
        let t_grid = match &a.t {
            Some(t) => vec![parse(p, "t", t)?],
            None => t_grid(
                &parse(p, "t-start", &a.t_start)?,
                &parse(p, "t-stop", &a.t_stop)?,
                a.t_count,
                a.t_spacing,
            )?,
        };
        let ode_tol = parse(p, "ode-tol", &a.ode_tol)?;
        if !(ode_tol > 0) {
            return Err(CliError::Usage("--ode-tol must be positive".into()));
        }
        Ok(RunConfig {
            command: cli.command,
            alpha: parse(p, "alpha", &a.alpha)?,
            k2: parse(p, "k2", &a.k2)?,
            t_grid,
            n_max: a.n_max,
            ctx,
            out_json: a.out_json.clone(),
            out_csv: a.out_csv.clone(),
            suite: a.suite,
            seed: a.seed,
            ode_tol,
        })
    }

    pub fn bits(&self) -> u32 {
        self.ctx.bits
    }
}

/// `count` points from `start` to `stop`, both included.
pub fn t_grid(start: &Real, stop: &Real, count: usize, spacing: Spacing) -> Result<Vec<Real>, CliError> {
    if count == 0 {
        return Err(CliError::Usage("--t-count must be at least 1".into()));
    }
    if spacing == Spacing::Log && !(*start > 0 && *stop > 0) {
        return Err(CliError::Usage("log spacing needs t-start > 0 and t-stop > 0".into()));
    }
    if count == 1 {
        return Ok(vec![start.clone()]);
    }
    let p = start.prec();
    let last = (count - 1) as u32;
    let mut out: Vec<Real> = (0..last)
        .map(|i| {
            let s = num::ratio(p, i as i64, last as i64);
            match spacing {
                Spacing::Linear => Float::with_val(p, stop - start) * s + start,
                Spacing::Log => Float::with_val(p, stop / start).pow(&s) * start,
            }
        })
        .collect();
    out.push(stop.clone());
    Ok(out)
}
