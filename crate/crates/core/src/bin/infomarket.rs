//! Command-line driver: run experiments, recompute metrics from stored
//! transcripts, inspect presets.
//!
//! Exit status: 0 on success, 1 for configuration or usage errors, 2 when a
//! run or output step fails.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use infomarket::harness::{
    emit_outputs, load_config, preset, recompute_report, run_experiment_with, write_checkpoints, ExperimentConfig,
    OutputFormats, Retain, PRESET_NAMES,
};
use infomarket::harness::presets::PRESET_DESCRIPTIONS;

/// Replicate runs of the default desk-scale experiment; `--full-scale`
/// restores the configured count.
const DESK_RUNS: usize = 20;

#[derive(Parser)]
#[command(name = "infomarket", version, about = "Learning agents in a posted-price information market")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write result tables.
    Run(RunArgs),
    /// Rebuild result tables from the transcripts of a previous run.
    Metrics(MetricsArgs),
    /// List or print built-in experiments.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Experiment file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Name of a built-in experiment.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long)]
    parallel: Option<usize>,
    /// Runs per population (overrides the file).
    #[arg(long)]
    runs: Option<usize>,
    /// Auctions per run (overrides the file).
    #[arg(long)]
    auctions: Option<u64>,
    /// Base seed (overrides the file).
    #[arg(long)]
    seed: Option<u64>,
    /// Use the configured replicate count instead of the desk-scale default.
    #[arg(long)]
    full_scale: bool,
    /// Also write every run's transcript.
    #[arg(long)]
    transcripts: bool,
    /// Also write every run's final agent states as JSON.
    #[arg(long)]
    checkpoints: bool,
}

#[derive(Args)]
struct MetricsArgs {
    #[command(flatten)]
    source: Source,
    /// Directory written by `run --transcripts`.
    #[arg(long)]
    dir: PathBuf,
    /// Where to write the rebuilt tables (defaults to `--dir`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum PresetAction {
    /// Show the available presets.
    List,
    /// Print a preset as an experiment file.
    Dump { name: String },
}

enum Failure {
    Config(String),
    Runtime(String),
}

fn load(source: &Source) -> Result<ExperimentConfig, Failure> {
    let cfg = match (&source.config, &source.preset) {
        (Some(path), _) => load_config(path).map_err(|e| Failure::Config(e.to_string()))?,
        (None, Some(name)) => preset(name).ok_or_else(|| {
            Failure::Config(format!("unknown preset {name:?}; available: {}", PRESET_NAMES.join(", ")))
        })?,
        (None, None) => unreachable!("clap enforces a source"),
    };
    Ok(cfg)
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let mut cfg = load(&args.source)?;
    if !args.full_scale {
        cfg.runs_per_population = cfg.runs_per_population.min(DESK_RUNS);
    }
    if let Some(r) = args.runs {
        cfg.runs_per_population = r;
    }
    if let Some(a) = args.auctions {
        cfg.auctions_per_run = a;
    }
    if let Some(s) = args.seed {
        cfg.base_seed = s;
    }
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    let threads = args
        .parallel
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));

    eprintln!(
        "{}: {} populations x {} runs x {} auctions on {threads} threads",
        cfg.name,
        cfg.populations.len(),
        cfg.runs_per_population,
        cfg.auctions_per_run
    );
    let started = Instant::now();
    let retain = Retain {
        transcripts: args.transcripts,
        states: args.checkpoints,
    };
    let result = run_experiment_with(&cfg, threads, retain).map_err(|e| Failure::Runtime(e.to_string()))?;
    let formats = OutputFormats {
        transcripts: args.transcripts,
        ..Default::default()
    };
    emit_outputs(&result.report, &cfg, &result.transcripts, &args.out, formats)
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    if args.checkpoints {
        write_checkpoints(&cfg, &result.states, &args.out).map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    // Keep the effective configuration next to the results.
    let cfg_path = args.out.join("experiment.toml");
    std::fs::write(&cfg_path, cfg.to_toml()).map_err(|e| Failure::Runtime(format!("{}: {e}", cfg_path.display())))?;
    eprintln!("done in {:.1}s; results in {}", started.elapsed().as_secs_f64(), args.out.display());
    Ok(())
}

fn metrics(args: MetricsArgs) -> Result<(), Failure> {
    let cfg = load(&args.source)?;
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    let report = recompute_report(&cfg, &args.dir).map_err(|e| Failure::Runtime(e.to_string()))?;
    let out = args.out.unwrap_or_else(|| args.dir.clone());
    emit_outputs(&report, &cfg, &[], &out, OutputFormats::default()).map_err(|e| Failure::Runtime(e.to_string()))?;
    Ok(())
}

fn presets(action: PresetAction) -> Result<(), Failure> {
    match action {
        PresetAction::List => {
            for (name, desc) in PRESET_NAMES.iter().zip(PRESET_DESCRIPTIONS) {
                println!("{name:<20} {desc}");
            }
        }
        PresetAction::Dump { name } => {
            let cfg = preset(&name).ok_or_else(|| Failure::Config(format!("unknown preset {name:?}")))?;
            print!("{}", cfg.to_toml());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::Metrics(args) => metrics(args),
        Command::Presets { action } => presets(action),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
