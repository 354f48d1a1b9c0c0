//! Configuration, experiment runs, sweeps and result files.

pub mod config;
pub mod emit;
pub mod run;
pub mod sweep;

pub use config::{load_config, valid_paths, ExperimentConfig, PolicyConfig, SweepSpec};
pub use emit::{emit, read_records, read_summaries, write_rows, Format, Tabular};
pub use run::{
    prepare_policy, run, run_with_policy, simulate, train_dqn, training_seed, RunSummary,
    SlotRecord,
};
pub use sweep::{run_jobs, sweep, sweep_with_threads, thread_cap, SweepRow, THREADS_ENV};
