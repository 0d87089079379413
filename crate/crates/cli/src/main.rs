//! `cluegain`: batch front end for pre-training, imputation, evaluation sweeps
//! and dataset similarity ranking.
//!
//! Exit status: 0 on success (for `similarity`, the 0-based index of the top
//! candidate), 64 for usage or configuration errors, 65 for bad input data,
//! 70 for training or internal failures, 74 for I/O errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cluegain::Strategy;

use config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "cluegain",
    version,
    about = "GAIN imputation with transfer from a complete source dataset"
)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// TOML column schema (label column, binary columns).
    #[arg(long, global = true)]
    schema: Option<PathBuf>,
    /// Single miss rate (evaluate, similarity).
    #[arg(long, global = true, conflicts_with = "miss_rates")]
    miss_rate: Option<f64>,
    /// Comma-separated miss rates (evaluate).
    #[arg(long, global = true, value_delimiter = ',')]
    miss_rates: Option<Vec<f64>>,
    /// direct_reuse | warm_start | append_layers | freeze_shallow | freeze_deep
    #[arg(long, global = true)]
    strategy: Option<Strategy>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    hint_rate: Option<f64>,
    #[arg(long, global = true)]
    iterations: Option<usize>,
    /// Pre-training iterations when they should differ from --iterations.
    #[arg(long, global = true)]
    pretrain_iterations: Option<usize>,
    /// Drop columns whose missing fraction exceeds this value.
    #[arg(long, global = true)]
    drop_missing_above: Option<f64>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Pre-train on a complete source CSV and write a bundle.
    Pretrain {
        #[arg(long)]
        source: Option<PathBuf>,
        /// Bundle file name inside the output directory.
        #[arg(long)]
        bundle: Option<PathBuf>,
    },
    /// Complete a target CSV, with a bundle (transfer) or without (plain GAIN).
    Impute {
        #[arg(long)]
        target: Option<PathBuf>,
        #[arg(long)]
        bundle: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Sweep miss rates and strategies on complete data; write mean ± std rows.
    Evaluate {
        /// Complete ground-truth CSV.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Complete pre-training source CSV.
        #[arg(long)]
        source: Option<PathBuf>,
        /// Also score post-imputation classification (needs a label column).
        #[arg(long)]
        predict: bool,
        /// Leave plain GAIN out of the sweep.
        #[arg(long)]
        no_gain: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Rank candidate datasets by transfer gain from a complete target.
    Similarity {
        #[arg(long)]
        target: Option<PathBuf>,
        /// Candidate CSV; repeat for each candidate.
        #[arg(long = "candidate")]
        candidates: Vec<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the resolved configuration as TOML.
    ShowConfig,
}

fn resolve(cli: &Cli) -> anyhow::Result<RunConfig> {
    let c = &cli.common;
    let mut cfg = match &c.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = c.seed {
        cfg.seed = v;
    }
    if let Some(v) = &c.out_dir {
        cfg.out_dir = v.clone();
    }
    if let Some(v) = &c.schema {
        cfg.schema = Some(v.clone());
    }
    if let Some(v) = c.drop_missing_above {
        cfg.drop_missing_above = Some(v);
    }
    if let Some(v) = c.alpha {
        cfg.hyper.alpha = v;
    }
    if let Some(v) = c.hint_rate {
        cfg.hyper.hint_rate = v;
    }
    if let Some(v) = c.iterations {
        cfg.hyper.iterations = v;
    }
    if let Some(v) = c.pretrain_iterations {
        cfg.hyper.pretrain_iterations = Some(v);
    }
    if let Some(v) = c.trials {
        cfg.evaluate.trials = v;
        cfg.similarity.trials = v;
    }
    if let Some(v) = c.strategy {
        cfg.impute.strategy = v;
        cfg.evaluate.strategies = vec![v];
        cfg.similarity.strategy = v;
    }
    if let Some(v) = c.miss_rate {
        cfg.evaluate.miss_rates = vec![v];
        cfg.similarity.miss_rate = v;
    }
    if let Some(v) = &c.miss_rates {
        if let [single] = v.as_slice() {
            cfg.similarity.miss_rate = *single;
        }
        cfg.evaluate.miss_rates = v.clone();
    }
    match &cli.command {
        Command::Pretrain { source, bundle } => {
            override_opt(&mut cfg.pretrain.source, source);
            if let Some(b) = bundle {
                cfg.pretrain.bundle = b.clone();
            }
        }
        Command::Impute { target, bundle, output } => {
            override_opt(&mut cfg.impute.target, target);
            override_opt(&mut cfg.impute.bundle, bundle);
            if let Some(o) = output {
                cfg.impute.output = o.clone();
            }
        }
        Command::Evaluate {
            data,
            source,
            predict,
            no_gain,
            output,
        } => {
            override_opt(&mut cfg.evaluate.data, data);
            override_opt(&mut cfg.evaluate.source, source);
            cfg.evaluate.predict |= *predict;
            cfg.evaluate.include_gain &= !*no_gain;
            if let Some(o) = output {
                cfg.evaluate.output = o.clone();
            }
        }
        Command::Similarity {
            target,
            candidates,
            output,
        } => {
            override_opt(&mut cfg.similarity.target, target);
            if !candidates.is_empty() {
                cfg.similarity.candidates = candidates.clone();
            }
            if let Some(o) = output {
                cfg.similarity.output = o.clone();
            }
        }
        Command::ShowConfig => {}
    }
    Ok(cfg)
}

fn override_opt<T: Clone>(slot: &mut Option<T>, value: &Option<T>) {
    if value.is_some() {
        *slot = value.clone();
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use cluegain::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Config(_) => 64,
                E::Input(_)
                | E::Load { .. }
                | E::Schema(_)
                | E::Normalization(_)
                | E::Precondition(_)
                | E::Format(_)
                | E::Csv(_) => 65,
                E::Io(_) => 74,
                E::NonFiniteLoss { .. } | E::Metric(_) | E::Internal(_) => 70,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 74;
        }
    }
    64
}

fn run(cli: &Cli) -> anyhow::Result<u8> {
    let cfg = resolve(cli)?;
    match cli.command {
        Command::Pretrain { .. } => commands::pretrain(&cfg).map(|_| 0),
        Command::Impute { .. } => commands::impute(&cfg).map(|_| 0),
        Command::Evaluate { .. } => commands::evaluate(&cfg).map(|_| 0),
        Command::Similarity { .. } => commands::similarity(&cfg).map(|top| top.min(63) as u8),
        Command::ShowConfig => {
            print!("{}", cfg.to_toml_string());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.common.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .init();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
