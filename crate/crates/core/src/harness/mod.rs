//! Experiment configuration, seeded multi-realization runs, aggregation and
//! CSV/JSON export.
//!
//! Realization `i` draws its schedule from stream `(seed, i, 0)`, its reward
//! noise from `(seed, i, 1)` (shared by all algorithms, so comparisons are
//! paired) and each algorithm's private randomness from `(seed, i, 16 + id)`.
//! See [`crate::rng`] for the mixing function.

mod calibrate;
mod config;
mod run;
mod trace;

pub use calibrate::{calibrate_od_threshold, nearest_rank, MIN_CALIBRATION_TRIALS};
pub use config::{preset, presets, ExperimentConfig, ExperimentKind};
pub use run::{
    algorithms, realization_agent_rng, realization_noise, realization_schedule, realization_wcst_schedule,
    resolve_xi, run_algorithm, run_experiment, run_realization, summarize, summary_path, to_rows, write_outputs,
    Algorithm, AlgorithmSummary, ExperimentOutput, Summary,
};
pub use trace::{
    aggregate, export_csv, import_csv, read_csv, write_csv, AggregateRow, AggregateTrace, Stats, TraceRow, CSV_HEADER,
};
