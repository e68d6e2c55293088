//! Experiment configuration, score-CSV ingestion, experiment runners and
//! CSV/JSON emission.

mod config;
mod emit;
mod experiments;
mod scores;

use crate::error::{Error, Result};

pub use config::{ChannelSource, ExperimentConfig, ExperimentKind, LogBase, OutputFormat, OutputSpec};
pub use emit::{emit, format_float, render, render_csv, render_json, Cell, Table, Unit};
pub use experiments::{
    run, run_bonferroni_compare, run_bounds_curve, run_exponent_table, run_gutman_sim, run_one_shot_audit,
    GIT_DESCRIBE,
};
pub use scores::{load_scores_csv, parse_scores_csv, ScoreDataset, ROW_SUM_TOLERANCE};

/// Runs `cfg` and writes the result to `cfg.output.path`.
pub fn run_and_emit(cfg: &ExperimentConfig) -> Result<Table> {
    let path = cfg
        .output
        .path
        .as_ref()
        .ok_or_else(|| Error::Precondition("no output path".into()))?;
    let table = run(cfg)?;
    emit(&table, cfg.output.format, cfg.log_base, path)?;
    Ok(table)
}
