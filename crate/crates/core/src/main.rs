use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use idfield::cli::{emit_report, run_experiment, ExperimentConfig, OutputFormat, EXPERIMENT_NAMES};

/// Run property experiments on random fields driven by infinitely divisible random measures.
#[derive(Debug, Parser)]
#[command(name = "idfield", version)]
struct Args {
    /// TOML experiment configuration
    #[arg(long)]
    config: PathBuf,
    /// Master seed (overrides the config)
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo sample size (overrides the config)
    #[arg(long)]
    samples: Option<usize>,
    /// Output file; standard output when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
    /// Run only experiments of this kind
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(EXPERIMENT_NAMES))]
    experiment: Option<String>,
    /// Record wall-clock runtime per experiment (makes output non-reproducible)
    #[arg(long)]
    timing: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut cfg = match ExperimentConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(n) = args.samples {
        cfg.samples = n;
    }
    let reports = match run_experiment(&cfg, args.experiment.as_deref(), args.timing) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = emit_report(&reports, args.format, args.out.as_deref()) {
        eprintln!("output error: {e}");
        return ExitCode::from(2);
    }
    if reports.iter().all(|r| r.passed()) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
