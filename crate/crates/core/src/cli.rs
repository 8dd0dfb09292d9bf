//! Command-line interface.
//!
//! Exit codes: 0 success, 1 I/O or parse failure, 2 validation failure,
//! 3 computation guard (node budget or enumeration size).

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand};
use thiserror::Error;

use crate::bisim::{self, BisimError, BisimRelation};
use crate::bounds::{self, BoundError};
use crate::distances::{self, DistanceError};
use crate::figures;
use crate::format::format_sig;
use crate::model::{load_chain, save_chain, LabeledMarkovChain, ModelError};
use crate::product::{encode_product, ProductError, ProductSpec};
use crate::trace::{EngineConfig, LevelSummary, TraceEngine, TraceError, DEFAULT_NODE_BUDGET};

/// Environment variable overriding the per-level node budget.
pub const NODE_BUDGET_ENV: &str = "CKDIST_NODE_BUDGET";

#[derive(Debug, Parser)]
#[command(name = "ckdist", version)]
#[command(about = "Cantor-Kantorovich distance between labeled Markov chains")]
pub struct Cli {
    /// Significant digits for printed numbers
    #[arg(long, global = true, default_value_t = 12)]
    digits: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a chain file
    Validate { path: PathBuf },
    /// Total variation between the k-long trace distributions
    Tv {
        chain_a: PathBuf,
        chain_b: PathBuf,
        #[arg(long)]
        horizon: usize,
    },
    /// Truncated CK distance with its certified error interval
    Ck(CkArgs),
    /// Continuity bounds
    Bound(BoundArgs),
    /// Check an approximate bisimulation relation, or compute its minimal epsilon
    Bisim {
        chain_a: PathBuf,
        chain_b: PathBuf,
        relation: PathBuf,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Write the chain encoding a product distribution over {0,1}^k
    EncodeProduct {
        /// Comma-separated parameters, e.g. "0.3,0.9"
        #[arg(long)]
        params: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the CSV series of a figure (2: bisimilarity bound, 3: truncated sums)
    Sweep {
        #[arg(long, value_parser = clap::value_parser!(u8).range(2..=3))]
        figure: u8,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("target").required(true).args(["horizon", "precision"])))]
struct CkArgs {
    chain_a: PathBuf,
    chain_b: PathBuf,
    #[arg(long)]
    horizon: Option<usize>,
    /// Target error; the horizon is the smallest k with m^-k <= precision
    #[arg(long)]
    precision: Option<f64>,
    /// Drop words below this probability in both chains (result is uncertified)
    #[arg(long)]
    prune_below: Option<f64>,
    /// Print the per-horizon terms of the series
    #[arg(long)]
    per_horizon: bool,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("mode").required(true).args(["delta", "d_lower", "d_upper"])))]
struct BoundArgs {
    /// Approximate bisimilarity level: prints the CK upper bound
    #[arg(long)]
    delta: Option<f64>,
    /// Known lower bound on the CK distance: prints the bisimilarity threshold
    #[arg(long)]
    d_lower: Option<f64>,
    /// Known upper bound on the CK distance
    #[arg(long)]
    d_upper: Option<f64>,
    /// TV tolerance for the safe-horizon computation (with --d-upper)
    #[arg(long, requires = "d_upper")]
    eps: Option<f64>,
    #[arg(long)]
    m: usize,
    /// Horizon for the TV bounds
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Distance(#[from] DistanceError),
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error(transparent)]
    Bisim(#[from] BisimError),
    #[error(transparent)]
    Product(#[from] ProductError),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("usage: {0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(e) => model_code(e),
            CliError::Trace(e) => trace_code(e),
            CliError::Distance(e) => distance_code(e),
            CliError::Bound(_) | CliError::Usage(_) => 2,
            CliError::Bisim(e) => match e {
                BisimError::Io { .. } | BisimError::Parse { .. } => 1,
                BisimError::TooManyStates { .. } => 3,
                _ => 2,
            },
            CliError::Product(e) => match e {
                ProductError::TooLarge { .. } => 3,
                ProductError::Distance(d) => distance_code(d),
                _ => 2,
            },
            CliError::Io(_) => 1,
        }
    }

    /// Message printed on stderr.
    pub fn report(&self) -> String {
        let mut msg = format!("error: {self}");
        if let Some(TraceError::NodeBudgetExceeded { .. }) = self.trace_error() {
            msg.push_str(&format!(
                "\nhint: lower the precision / horizon, or raise {NODE_BUDGET_ENV}"
            ));
        }
        msg
    }

    fn trace_error(&self) -> Option<&TraceError> {
        match self {
            CliError::Trace(t) | CliError::Distance(DistanceError::Trace(t)) => Some(t),
            CliError::Product(ProductError::Distance(DistanceError::Trace(t))) => Some(t),
            _ => None,
        }
    }
}

fn model_code(e: &ModelError) -> i32 {
    if e.is_input_error() {
        1
    } else {
        2
    }
}

fn trace_code(e: &TraceError) -> i32 {
    match e {
        TraceError::NodeBudgetExceeded { .. } => 3,
        _ => 2,
    }
}

fn distance_code(e: &DistanceError) -> i32 {
    match e {
        DistanceError::Trace(t) => trace_code(t),
        DistanceError::TooLarge { .. } => 3,
        _ => 2,
    }
}

/// Node budget from [`NODE_BUDGET_ENV`], or the default.
pub fn node_budget_from_env() -> Result<usize, CliError> {
    match std::env::var(NODE_BUDGET_ENV) {
        Err(_) => Ok(DEFAULT_NODE_BUDGET),
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|e| CliError::Usage(format!("{NODE_BUDGET_ENV}={v}: {e}"))),
    }
}

/// Runs a parsed command, writing the report to `out`.
pub fn run(cli: Cli, node_budget: usize, out: &mut impl Write) -> Result<(), CliError> {
    let digits = cli.digits;
    let num = |x: f64| format_sig(x, digits);
    match cli.command {
        Command::Validate { path } => {
            let c = load_chain(&path)?;
            writeln!(
                out,
                "valid: {} states, alphabet [{}]",
                c.num_states(),
                c.labels().join(", ")
            )?;
        }
        Command::Tv {
            chain_a,
            chain_b,
            horizon,
        } => {
            if horizon == 0 {
                return Err(CliError::Usage("--horizon must be at least 1".into()));
            }
            let (a, b) = (load_chain(&chain_a)?, load_chain(&chain_b)?);
            let engine = TraceEngine::new(&a, &b, EngineConfig::with_budget(node_budget))?;
            let levels = engine.summaries(horizon)?;
            let last: &LevelSummary = levels.last().expect("horizon >= 1");
            writeln!(out, "horizon: {horizon}")?;
            writeln!(out, "m_sum: {}", num(last.m_sum))?;
            writeln!(out, "tv: {}", num(1.0 - last.m_sum))?;
            writeln!(out, "tv_half_sum: {}", num(last.tv_direct))?;
            writeln!(out, "words: {}", last.words)?;
        }
        Command::Ck(args) => run_ck(args, node_budget, &num, out)?,
        Command::Bound(args) => run_bound(args, &num, out)?,
        Command::Bisim {
            chain_a,
            chain_b,
            relation,
            epsilon,
        } => {
            let (a, b) = (load_chain(&chain_a)?, load_chain(&chain_b)?);
            let rel = bisim::load_relation(&relation, &a, &b)?;
            run_bisim(&rel, epsilon, &a, &b, &num, out)?;
        }
        Command::EncodeProduct { params, out: path } => {
            let spec = ProductSpec::parse(&params)?;
            let chain = encode_product(&spec);
            save_chain(&chain, &path)?;
            writeln!(
                out,
                "wrote {} ({} states, k = {})",
                path.display(),
                chain.num_states(),
                spec.len()
            )?;
        }
        Command::Sweep { figure, out: path } => {
            let mut file = BufWriter::new(File::create(&path)?);
            let rows = match figure {
                2 => {
                    let rows = figures::bound_rows();
                    figures::write_bound_csv(&rows, &mut file)?;
                    rows.len()
                }
                3 => {
                    let rows = figures::truncation_rows()?;
                    figures::write_truncation_csv(&rows, &mut file)?;
                    rows.len()
                }
                other => return Err(CliError::Usage(format!("unknown figure {other}"))),
            };
            file.flush()?;
            writeln!(out, "wrote {rows} rows to {}", path.display())?;
        }
    }
    Ok(())
}

fn run_ck(
    args: CkArgs,
    node_budget: usize,
    num: &impl Fn(f64) -> String,
    out: &mut impl Write,
) -> Result<(), CliError> {
    let (a, b) = (load_chain(&args.chain_a)?, load_chain(&args.chain_b)?);
    let horizon = match (args.horizon, args.precision) {
        (Some(k), None) => k,
        (None, Some(eps)) => distances::horizon_for_precision(eps, a.alphabet_size())?,
        _ => unreachable!("clap enforces exactly one of --horizon / --precision"),
    };
    let config = EngineConfig {
        node_budget,
        prune_below: args.prune_below,
    };
    let report = distances::ck_truncated_with(&a, &b, horizon, &config)?;
    let (lo, hi) = report.interval();
    writeln!(out, "horizon: {}", report.horizon)?;
    writeln!(out, "s_k: {}", num(report.s_k))?;
    writeln!(out, "error_bound: {}", num(report.error_bound))?;
    writeln!(out, "interval: [{}, {}]", num(lo), num(hi))?;
    writeln!(out, "certified: {}", report.certified)?;
    if args.per_horizon {
        writeln!(out, "i,tv,weight,s_i")?;
        for t in &report.per_horizon {
            writeln!(
                out,
                "{},{},{},{}",
                t.horizon,
                num(t.tv),
                num(t.weight),
                num(t.partial_sum)
            )?;
        }
    }
    Ok(())
}

fn run_bound(
    args: BoundArgs,
    num: &impl Fn(f64) -> String,
    out: &mut impl Write,
) -> Result<(), CliError> {
    let m = args.m;
    if let Some(delta) = args.delta {
        writeln!(
            out,
            "ck_upper_bound: {}",
            num(bounds::ck_upper_bound(delta, m)?)
        )?;
        if let Some(k) = args.k {
            writeln!(
                out,
                "tv_bisim_bound: {}",
                num(bounds::tv_bisim_bound(delta, k)?)
            )?;
        }
    } else if let Some(d) = args.d_lower {
        writeln!(
            out,
            "bisim_impossibility_threshold: {}",
            num(bounds::bisim_impossibility_threshold(d, m)?)
        )?;
    } else if let Some(d) = args.d_upper {
        if args.eps.is_none() && args.k.is_none() {
            return Err(CliError::Usage(
                "--d-upper needs --eps (safe horizon) and/or --k (TV bound)".into(),
            ));
        }
        if let Some(eps) = args.eps {
            writeln!(
                out,
                "max_safe_horizon: {}",
                bounds::max_safe_horizon(eps, d, m)?
            )?;
        }
        if let Some(k) = args.k {
            writeln!(
                out,
                "tv_from_ck_bound: {}",
                num(bounds::tv_from_ck_bound(d, k, m)?)
            )?;
        }
    }
    Ok(())
}

fn run_bisim(
    rel: &BisimRelation,
    epsilon: Option<f64>,
    a: &LabeledMarkovChain,
    b: &LabeledMarkovChain,
    num: &impl Fn(f64) -> String,
    out: &mut impl Write,
) -> Result<(), CliError> {
    match epsilon {
        Some(eps) => {
            let v = bisim::check_bisim(rel, eps, a, b)?;
            writeln!(
                out,
                "verdict: {}",
                if v.accepted { "accept" } else { "reject" }
            )?;
            writeln!(out, "epsilon: {}", num(eps))?;
            if v.max_gap.is_finite() {
                writeln!(out, "max_gap: {}", num(v.max_gap))?;
            }
            if let Some(w) = &v.witness {
                if let Some(gap) = w.gap() {
                    writeln!(out, "witness_gap: {}", num(gap))?;
                }
                writeln!(out, "witness: {}", w.describe(a, b))?;
            }
        }
        None => {
            let min = bisim::minimal_epsilon(rel, a, b)?;
            writeln!(out, "minimal_epsilon: {}", num(min.value))?;
            writeln!(out, "exact_bisimulation: {}", min.exact_bisimulation)?;
            if let Some(w) = min.argmax.as_ref().filter(|_| !min.exact_bisimulation) {
                writeln!(out, "attained: {}", w.describe(a, b))?;
            }
        }
    }
    Ok(())
}
