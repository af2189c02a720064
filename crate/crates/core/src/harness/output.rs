use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use crate::metrics::{
    checkpoints, comparator_quantities, summarize, CumulativeRegret, RegretTrace, SparseTrace, SummaryRow,
};
use crate::seeding::repetition_seed;
use crate::{Error, Result};

/// How much of each repetition's trajectory goes to disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceMode {
    /// Every round.
    Full,
    /// Only the summary checkpoints.
    #[default]
    Checkpoints,
}

pub const CONFIG_FILE: &str = "config.toml";
pub const SEEDS_FILE: &str = "seeds.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const TRACES_DIR: &str = "traces";

const CONFIG_PREAMBLE: &str = "\
# Resolved experiment config; rerunning it reproduces every file in this directory.
# Repetition r draws each random stream from ChaCha8 seeded with
# SHA-256(\"ddrb/stream\" | seed | r | role), role in {environment, base learner i, meta},
# integers little-endian. seeds.csv lists SHA-256(\"ddrb/rep\" | seed | r) per repetition.
";

pub fn trace_file_name(rep: usize) -> String {
    format!("rep_{rep:04}.csv")
}

/// Summary rows as CSV text.
pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("round,mean_regret,two_se,mean_regret_scale\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.round, r.mean_regret, r.two_se, r.mean_regret_scale);
    }
    out
}

fn trace_csv(trace: &RegretTrace, rounds: &[usize]) -> String {
    let mut out = String::from("round,cumulative_regret,chosen_learner\n");
    for &t in rounds {
        let _ = writeln!(out, "{},{},{}", t, trace.cumulative[t - 1], trace.chosen[t - 1]);
    }
    out
}

fn diagnostics_csv(cfg: &ExperimentConfig, traces: &[RegretTrace]) -> String {
    let d_min = cfg.meta.balancing_params().map_or(1.0, |p| p.d_min);
    let mut out = String::from("rep,seed,final_regret,dbar_star,d_star\n");
    for (rep, trace) in traces.iter().enumerate() {
        let c = comparator_quantities(trace, d_min);
        let d_star = c.d_star.map(|d| d.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{rep},{},{},{},{d_star}",
            trace.seed,
            trace.final_regret(),
            c.dbar_star
        );
    }
    out
}

/// Writes all run artifacts into `out`, which must not exist or be empty.
/// Files are staged in a sibling temporary directory and moved into place in
/// one rename, so an interrupted run leaves nothing behind.
pub fn write_artifacts(out: &Path, cfg: &ExperimentConfig, traces: &[RegretTrace], mode: TraceMode) -> Result<()> {
    if traces.len() != cfg.repetitions {
        return Err(Error::Contract(format!(
            "expected {} traces, got {}",
            cfg.repetitions,
            traces.len()
        )));
    }
    if out.exists() {
        let mut entries = fs::read_dir(out).map_err(|e| Error::io(out, e))?;
        if entries.next().is_some() {
            return Err(Error::io(
                out,
                std::io::Error::new(std::io::ErrorKind::AlreadyExists, "output directory is not empty"),
            ));
        }
    }
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(|e| Error::io(&parent, e))?;
    let stage = tempfile::Builder::new()
        .prefix(".ddrb-stage-")
        .tempdir_in(&parent)
        .map_err(|e| Error::io(&parent, e))?;
    let root = stage.path();
    let write = |name: &str, text: &str| -> Result<()> {
        let path = root.join(name);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    };

    let mut config_text = String::from(CONFIG_PREAMBLE);
    config_text.push_str(&cfg.to_toml_string()?);
    write(CONFIG_FILE, &config_text)?;

    let mut seeds = String::from("rep,seed\n");
    for rep in 0..cfg.repetitions {
        let _ = writeln!(seeds, "{rep},{}", repetition_seed(cfg.seed, rep));
    }
    write(SEEDS_FILE, &seeds)?;

    let grid = checkpoints(cfg.horizon, cfg.stride());
    let all: Vec<usize> = (1..=cfg.horizon).collect();
    let rows = match mode {
        TraceMode::Full => &all,
        TraceMode::Checkpoints => &grid,
    };
    let traces_dir = root.join(TRACES_DIR);
    fs::create_dir(&traces_dir).map_err(|e| Error::io(&traces_dir, e))?;
    for (rep, trace) in traces.iter().enumerate() {
        write(&format!("{TRACES_DIR}/{}", trace_file_name(rep)), &trace_csv(trace, rows))?;
    }

    // standard errors need two repetitions
    if traces.len() >= 2 {
        write(SUMMARY_FILE, &summary_csv(&summarize(traces, &grid)?))?;
    }
    write(DIAGNOSTICS_FILE, &diagnostics_csv(cfg, traces))?;

    if out.exists() {
        fs::remove_dir(out).map_err(|e| Error::io(out, e))?;
    }
    let staged = stage.keep();
    fs::rename(&staged, out).map_err(|e| {
        let _ = fs::remove_dir_all(&staged);
        Error::io(out, e)
    })
}

/// Loads every `rep_*.csv` trace below `dir` (or `dir/traces`), in file-name order.
pub fn load_traces(dir: &Path) -> Result<Vec<SparseTrace>> {
    let dir = if dir.join(TRACES_DIR).is_dir() {
        dir.join(TRACES_DIR)
    } else {
        dir.to_path_buf()
    };
    let mut files: Vec<PathBuf> = fs::read_dir(&dir)
        .map_err(|e| Error::io(&dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|x| x == "csv")
                && p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("rep_"))
        })
        .collect();
    files.sort();
    files.iter().map(|p| load_trace(p)).collect()
}

fn load_trace(path: &Path) -> Result<SparseTrace> {
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut trace = SparseTrace::default();
    for record in reader.deserialize::<(usize, f64, usize)>() {
        let (round, cumulative, _) = record.map_err(csv_err)?;
        trace.rows.insert(round, cumulative);
    }
    Ok(trace)
}

/// Recomputes the summary table from trace files. The checkpoint stride is
/// taken from `stride`, else from the run's `config.toml`, else `T/100`.
pub fn summarize_dir(dir: &Path, stride: Option<usize>) -> Result<Vec<SummaryRow>> {
    let traces = load_traces(dir)?;
    let horizon = traces.first().map_or(0, CumulativeRegret::horizon);
    let run_dir = if dir.file_name().is_some_and(|n| n == TRACES_DIR) {
        dir.parent().unwrap_or(dir)
    } else {
        dir
    };
    let stride = match stride {
        Some(s) => s,
        None => {
            let config = run_dir.join(CONFIG_FILE);
            if config.is_file() {
                ExperimentConfig::from_path(&config)?.stride()
            } else {
                (horizon / 100).max(1)
            }
        }
    };
    summarize(&traces, &checkpoints(horizon, stride))
}
