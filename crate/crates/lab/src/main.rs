use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use gimlab::{emit, run_sweep, Format, SweepConfig};
use gimlab_core::Execution;

#[derive(Parser)]
#[command(name = "gimlab", version, about = "Quantum imaging Fisher-information sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Two-lens interferometric family sweeps and bound checks.
    Interferometric(RunArgs),
    /// Single-lens source-size sweeps.
    SingleLens(RunArgs),
    /// Sub-Rayleigh size and moment scaling.
    Superres(RunArgs),
    /// Bayesian bound eigenproblems and worst-case priors.
    Bayes(RunArgs),
    /// Monte Carlo ML estimation against the Cramér–Rao bound.
    Mc(RunArgs),
}

impl Command {
    fn parts(&self) -> (&'static str, &RunArgs) {
        match self {
            Self::Interferometric(a) => ("interferometric", a),
            Self::SingleLens(a) => ("single-lens", a),
            Self::Superres(a) => ("superres", a),
            Self::Bayes(a) => ("bayes", a),
            Self::Mc(a) => ("mc", a),
        }
    }
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON sweep configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Run every task on the calling thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    let (kind, args) = cli.command.parts();
    let mut config = SweepConfig::load(&args.config)?;
    if config.experiment.name() != kind {
        bail!(
            "{} describes a `{}` experiment, not `{kind}`",
            args.config.display(),
            config.experiment.name()
        );
    }
    if args.seed.is_some() {
        config.seed = args.seed;
    }
    let out_cfg = config.output.clone();
    let dir = args
        .out
        .clone()
        .or_else(|| out_cfg.as_ref().map(|o| o.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"));
    let format = match args.format {
        Some(FormatArg::Csv) => Format::Csv,
        Some(FormatArg::Json) => Format::Json,
        None => out_cfg.map(|o| o.format).unwrap_or(Format::Csv),
    };
    let exec = if args.sequential { Execution::Sequential } else { Execution::Parallel };
    let report = run_sweep(&config, exec)?;
    let files = emit(&config, &report, format, &dir).context("writing results")?;
    for c in &report.checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    if report.violations > 0 {
        eprintln!("{} bound violation(s)", report.violations);
    }
    if report.convergence_failures > 0 {
        eprintln!("{} optimizer convergence failure(s)", report.convergence_failures);
    }
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
