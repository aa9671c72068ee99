use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Parser, Subcommand};

use tda_portfolio::cli::{self, NormsOptions, Overrides, RunManifest};
use tda_portfolio::{AllocationMode, Error, PipelineConfig, RecencyMode};

#[derive(Debug, Parser)]
#[command(name = "tda-portfolio", version, about = "Persistence-landscape portfolio pipeline")]
struct Args {
    /// TOML configuration file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Restrict to the N currencies with the longest history.
    #[arg(long, global = true)]
    subset: Option<usize>,

    /// Allocation rule: normalized or paper_literal.
    #[arg(long, global = true)]
    mode: Option<AllocationMode>,

    /// Recency orientation: inverted or literal.
    #[arg(long, global = true)]
    recency: Option<RecencyMode>,

    /// First backtest day (formation day).
    #[arg(long, global = true)]
    from: Option<NaiveDate>,

    /// Last backtest day.
    #[arg(long, global = true)]
    to: Option<NaiveDate>,

    /// Output directory shared by all stages.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate the price file (or download it) and write the clean universe.
    Ingest {
        /// Local CSV path or http(s) URL, overriding data.source.
        #[arg(long)]
        source: Option<String>,
    },
    /// Compute landscape norms and their daily differences per currency.
    Norms {
        /// Also write every persistence diagram.
        #[arg(long)]
        dump_diagrams: bool,
    },
    /// Score currencies and write the allocation for each rebalance date.
    Score,
    /// Backtest the strategy against the equal-weight benchmark.
    Backtest,
    /// Write coverage, return, volatility and Sharpe statistics.
    Report,
}

fn config(args: &Args) -> Result<PipelineConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    Overrides {
        subset: args.subset,
        mode: args.mode,
        recency: args.recency,
        from: args.from,
        to: args.to,
        out: args.out.clone(),
    }
    .apply(&mut cfg);
    if let Command::Ingest {
        source: Some(source),
    } = &args.command
    {
        cfg.data.source = source.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: &Args) -> Result<RunManifest, Error> {
    let cfg = config(args)?;
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            return Err(Error::Config("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    match &args.command {
        Command::Ingest { .. } => cli::cmd_ingest(&cfg),
        Command::Norms { dump_diagrams } => cli::cmd_norms(
            &cfg,
            NormsOptions {
                dump_diagrams: *dump_diagrams,
            },
        ),
        Command::Score => cli::cmd_score(&cfg),
        Command::Backtest => cli::cmd_backtest(&cfg),
        Command::Report => cli::cmd_report(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match run(&args) {
        Ok(manifest) => {
            for line in &manifest.notes {
                println!("{line}");
            }
            for t in &manifest.timings {
                log::info!("{}: {:.2}s", t.stage, t.seconds);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
