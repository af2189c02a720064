//! Experiment configs, presets, the seeded round loop and CSV artifacts.

mod config;
mod output;
pub mod presets;
mod runner;

pub use config::{BaseLearnerSpec, ExperimentConfig, MetaSpec};
pub use output::{
    load_traces, summarize_dir, summary_csv, trace_file_name, write_artifacts, TraceMode, CONFIG_FILE,
    DIAGNOSTICS_FILE, SEEDS_FILE, SUMMARY_FILE, TRACES_DIR,
};
pub use presets::{preset, PRESET_NAMES};
pub use runner::{
    build_learners, run_experiment, run_repetition, run_repetition_observed, RoundRecord, Selector,
};

/// Loads a named preset or a TOML file.
pub fn load_config(source: &ConfigSource) -> crate::Result<ExperimentConfig> {
    match source {
        ConfigSource::Preset(name) => preset(name).ok_or_else(|| {
            crate::Error::config(
                "preset",
                format!("unknown preset `{name}` (known: {})", PRESET_NAMES.join(", ")),
            )
        }),
        ConfigSource::File(path) => ExperimentConfig::from_path(path),
    }
}

/// Where a config comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigSource {
    Preset(String),
    File(std::path::PathBuf),
}
