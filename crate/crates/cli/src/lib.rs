//! Configuration-driven front end for `entropic-tail`.
//!
//! Every subcommand resolves a [`config::RunConfig`] from an optional TOML
//! file plus flags, validates it, computes, and writes CSV/JSON artifacts
//! and a `manifest.json` into the output directory.
//!
//! Exit status: 0 on success (including FAIL verdicts, which are data),
//! 2 on validation errors, 3 on computational diagnostics such as a
//! divergent entropy integral.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
mod output;

use config::{BoundSource, GridSpec, ModelSpec, PsiSpec, RunConfig};

pub const THREADS_ENV: &str = "ENTROPIC_TAIL_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Computation(String),
}

impl CliError {
    pub fn config(key: &str, msg: impl std::fmt::Display) -> Self {
        CliError::Validation(format!("config key `{key}`: {msg}"))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Computation(_) => 3,
        }
    }
}

impl From<entropic_tail::Error> for CliError {
    fn from(e: entropic_tail::Error) -> Self {
        use entropic_tail::Error as E;
        match e {
            E::Quadrature(_) | E::NoGlsHome(_) | E::NotConvex { .. } => CliError::Computation(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(format!("i/o: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Validation(format!("csv: {e}"))
    }
}

#[derive(Debug, Parser)]
#[command(name = "entropic-tail", version, about = "Tail bounds and continuity certificates for suprema of random fields")]
struct Cli {
    #[command(subcommand)]
    group: Group,
}

#[derive(Debug, Subcommand)]
enum Group {
    /// Generating functions of fields.
    Psi {
        #[command(subcommand)]
        cmd: PsiCmd,
    },
    /// Conjugate transforms of a generating function.
    Conjugate {
        #[command(subcommand)]
        cmd: ConjugateCmd,
    },
    /// Entropy tail bounds.
    Bound {
        #[command(subcommand)]
        cmd: BoundCmd,
    },
    /// Partition tail bounds.
    Partition {
        #[command(subcommand)]
        cmd: PartitionCmd,
    },
    /// Uniform continuity certificates.
    Continuity {
        #[command(subcommand)]
        cmd: ContinuityCmd,
    },
    /// The disjoint-peaks field.
    Counterexample {
        #[command(subcommand)]
        cmd: CounterexampleCmd,
    },
    /// Monte Carlo verification of bounds.
    Verify {
        #[command(subcommand)]
        cmd: VerifyCmd,
    },
}

#[derive(Debug, Subcommand)]
enum PsiCmd {
    /// Tabulate ψ and the GLS norm of every point.
    Estimate(Common),
}

#[derive(Debug, Subcommand)]
enum ConjugateCmd {
    /// Emit (x, v*, ν*) on the x grid.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = GridSpec::parse)]
        x_grid: Option<GridSpec>,
    },
}

#[derive(Debug, Subcommand)]
enum BoundCmd {
    /// Entropy integral and sup-tail bound.
    Compute {
        #[command(flatten)]
        common: Common,
        /// CSV distance matrix; overrides the model.
        #[arg(long)]
        distance_csv: Option<PathBuf>,
        #[arg(long)]
        anchor: Option<f64>,
    },
}

#[derive(Debug, Subcommand)]
enum PartitionCmd {
    /// Search for a partition with a small tail bound.
    Search {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        partition_file: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum ContinuityCmd {
    /// τ from the partition tail bound and the modulus Θ(T, ρ, δ).
    Certify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = GridSpec::parse)]
        delta_grid: Option<GridSpec>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        partition_file: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum CounterexampleCmd {
    /// Moment curves, compensated curve and exact tail.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        beta: Option<f64>,
        /// Number of peaks kept.
        #[arg(long = "N")]
        n: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
enum VerifyCmd {
    /// Compare a bound curve with the empirical sup tail.
    Mc {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = BoundSource::parse)]
        bound_source: Option<BoundSource>,
        #[arg(long)]
        bound_scale: Option<f64>,
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        alpha: Option<f64>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default from config, else ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Built-in model: gaussian_circle, peaks, symmetrized_peaks, two_point.
    #[arg(long)]
    model: Option<String>,
    /// natural or sqrt_p; other kinds need the config file.
    #[arg(long)]
    psi: Option<String>,
    #[arg(long, value_parser = GridSpec::parse)]
    p_grid: Option<GridSpec>,
    #[arg(long, value_parser = GridSpec::parse)]
    u_grid: Option<GridSpec>,
    #[arg(long)]
    theta_prefactor: Option<f64>,
}

/// Which computation a resolved run performs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    PsiEstimate,
    ConjugateEval,
    BoundCompute,
    PartitionSearch,
    ContinuityCertify,
    CounterexampleRun,
    VerifyMc,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::PsiEstimate => "psi estimate",
            Command::ConjugateEval => "conjugate eval",
            Command::BoundCompute => "bound compute",
            Command::PartitionSearch => "partition search",
            Command::ContinuityCertify => "continuity certify",
            Command::CounterexampleRun => "counterexample run",
            Command::VerifyMc => "verify mc",
        }
    }
}

fn apply_common(c: &Common) -> Result<(RunConfig, Option<String>), CliError> {
    let (mut cfg, text) = match &c.config {
        Some(p) => {
            let (cfg, text) = RunConfig::load(p)?;
            (cfg, Some(text))
        }
        None => (RunConfig::default(), None),
    };
    if let Some(o) = &c.out {
        cfg.output_dir = o.clone();
    }
    if let Some(name) = &c.model {
        let keep = cfg.model.as_ref().is_some_and(|m| m.kind() == name);
        if !keep {
            cfg.model = Some(ModelSpec::named(name)?);
        }
    }
    if let Some(name) = &c.psi {
        cfg.psi = Some(match name.as_str() {
            "natural" => PsiSpec::Natural,
            "sqrt_p" => PsiSpec::SqrtP,
            other => {
                return Err(CliError::config("psi.kind", format!("{other:?} is not available as a flag (natural, sqrt_p)")))
            }
        });
    }
    if let Some(g) = &c.p_grid {
        cfg.grids.p = Some(g.clone());
    }
    if let Some(g) = &c.u_grid {
        cfg.grids.u = Some(g.clone());
    }
    if let Some(t) = c.theta_prefactor {
        cfg.theta_prefactor = t;
    }
    Ok((cfg, text))
}

fn resolve(cli: Cli) -> Result<(Command, RunConfig, Option<String>), CliError> {
    let (cmd, (cfg, text)) = match &cli.group {
        Group::Psi { cmd: PsiCmd::Estimate(c) } => (Command::PsiEstimate, apply_common(c)?),
        Group::Conjugate { cmd: ConjugateCmd::Eval { common, x_grid } } => {
            let mut r = apply_common(common)?;
            if let Some(g) = x_grid {
                r.0.grids.x = Some(g.clone());
            }
            (Command::ConjugateEval, r)
        }
        Group::Bound { cmd: BoundCmd::Compute { common, distance_csv, anchor } } => {
            let mut r = apply_common(common)?;
            if let Some(p) = distance_csv {
                r.0.model = Some(ModelSpec::Distance { path: p.clone() });
            }
            if let Some(a) = anchor {
                r.0.bound = Some(config::BoundSection { anchor: Some(*a) });
            }
            (Command::BoundCompute, r)
        }
        Group::Partition { cmd: PartitionCmd::Search { common, budget, seed, partition_file } } => {
            let mut r = apply_common(common)?;
            if let Some(b) = budget {
                r.0.search.budget = *b;
            }
            if let Some(s) = seed {
                r.0.search.seed = *s;
            }
            if let Some(p) = partition_file {
                r.0.search.partition_file = Some(p.clone());
            }
            (Command::PartitionSearch, r)
        }
        Group::Continuity { cmd: ContinuityCmd::Certify { common, delta_grid, threshold, partition_file } } => {
            let mut r = apply_common(common)?;
            if let Some(g) = delta_grid {
                r.0.grids.delta = Some(g.clone());
            }
            if let Some(t) = threshold {
                r.0.continuity.threshold = *t;
            }
            if let Some(p) = partition_file {
                r.0.search.partition_file = Some(p.clone());
            }
            (Command::ContinuityCertify, r)
        }
        Group::Counterexample { cmd: CounterexampleCmd::Run { common, beta, n } } => {
            let mut r = apply_common(common)?;
            let (b0, n0) = match &r.0.model {
                Some(ModelSpec::Peaks { beta, truncation }) => (*beta, *truncation),
                _ => (1.0, entropic_tail::counterexample::DEFAULT_TRUNCATION),
            };
            r.0.model = Some(ModelSpec::Peaks { beta: beta.unwrap_or(b0), truncation: n.unwrap_or(n0) });
            (Command::CounterexampleRun, r)
        }
        Group::Verify { cmd: VerifyCmd::Mc { common, bound_source, bound_scale, paths, seed, alpha } } => {
            let mut r = apply_common(common)?;
            let mc = &mut r.0.mc;
            if let Some(s) = bound_source {
                mc.bound_source = *s;
            }
            if let Some(s) = bound_scale {
                mc.bound_scale = *s;
            }
            if let Some(n) = paths {
                mc.paths = *n;
            }
            if let Some(s) = seed {
                mc.seed = *s;
            }
            if let Some(a) = alpha {
                mc.alpha = *a;
            }
            (Command::VerifyMc, r)
        }
    };
    cfg.validate()?;
    Ok((cmd, cfg, text))
}

fn init_threads() -> Result<(), CliError> {
    let Some(v) = std::env::var_os(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .to_str()
        .and_then(|s| s.trim().parse().ok())
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Validation(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
    // a pool built earlier in the same process wins
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Parse `argv`, run, and return the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = init_threads().and_then(|_| resolve(cli)).and_then(|(cmd, cfg, text)| {
        let summary = commands::execute(cmd, &cfg, text.as_deref())?;
        println!("{summary}");
        Ok(())
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
