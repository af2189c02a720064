use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ddrb::harness::{
    self, load_config, presets, run_experiment, summarize_dir, summary_csv, write_artifacts, ConfigSource,
    MetaSpec, TraceMode,
};

/// Model selection experiments for stochastic bandits.
#[derive(Debug, Parser)]
#[command(name = "ddrb", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment and write its CSV artifacts.
    Run(RunArgs),
    /// List the built-in presets.
    ListPresets,
    /// Recompute the summary table from a directory of trace files.
    Summarize {
        /// Run directory or its `traces/` subdirectory.
        dir: PathBuf,
        /// Checkpoint stride (defaults to the run's config, else T/100).
        #[arg(long)]
        stride: Option<usize>,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Built-in preset name.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    preset: Option<String>,
    /// Path to a TOML experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of repetitions.
    #[arg(long)]
    reps: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the horizon T.
    #[arg(long)]
    horizon: Option<usize>,
    /// Output directory (must not exist or be empty).
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Write every round or only the summary checkpoints.
    #[arg(long, value_enum, default_value_t = TraceArg::Checkpoints)]
    trace: TraceArg,
    /// Meta-learner: d3rb, ed2rb, corral[-low|-high], exp3[-low|-high], ucb,
    /// greedy, rb-grid or single:<index>.
    #[arg(long)]
    meta: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TraceArg {
    Full,
    Checkpoints,
}

fn run(args: RunArgs) -> Result<()> {
    let source = match (args.preset, args.config) {
        (Some(name), None) => ConfigSource::Preset(name),
        (None, Some(path)) => ConfigSource::File(path),
        _ => bail!("pass exactly one of --preset or --config"),
    };
    let mut cfg = load_config(&source)?;
    if let Some(t) = args.horizon {
        cfg.horizon = t;
        // a stride tied to the old horizon would no longer be T/100
        if matches!(source, ConfigSource::Preset(_)) {
            cfg.checkpoint_stride = None;
        }
    }
    if let Some(r) = args.reps {
        cfg.repetitions = r;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(m) = &args.meta {
        cfg.meta = MetaSpec::from_override(m, cfg.horizon)?;
    }
    let cfg = cfg.resolve()?;
    if args.threads == Some(0) {
        bail!("--threads must be >= 1");
    }
    let mode = match args.trace {
        TraceArg::Full => TraceMode::Full,
        TraceArg::Checkpoints => TraceMode::Checkpoints,
    };

    let start = Instant::now();
    let traces = run_experiment(&cfg, args.threads)?;
    write_artifacts(&args.out, &cfg, &traces, mode)
        .with_context(|| format!("writing results to {}", args.out.display()))?;
    let finals: Vec<f64> = traces.iter().map(|t| t.final_regret()).collect();
    let mean = finals.iter().sum::<f64>() / finals.len() as f64;
    eprintln!(
        "{} [{}]: {} reps x {} rounds in {:.1?}, mean final regret {mean:.2}",
        cfg.name,
        cfg.meta.label(),
        cfg.repetitions,
        cfg.horizon,
        start.elapsed()
    );
    if cfg.repetitions < 2 {
        eprintln!("note: summary.csv skipped, standard errors need at least 2 repetitions");
    }
    eprintln!("wrote {}", args.out.display());
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => run(args),
        Command::ListPresets => {
            for name in harness::PRESET_NAMES {
                println!("{name:<6} {}", presets::describe(name).unwrap_or(""));
            }
            Ok(())
        }
        Command::Summarize { dir, stride } => {
            let rows = summarize_dir(&dir, stride)?;
            print!("{}", summary_csv(&rows));
            Ok(())
        }
    }
}
