//! Stream sources, experiments and reports.

mod experiment;
mod generator;
mod ingest;
mod report;
mod verify;

pub use experiment::{
    run_bench, run_experiment, trial_seed, BenchPoint, BenchReport, Checkpoints, Experiment,
    Source, Workload,
};
pub use generator::{overlap_pair, GeneratorKind, GeneratorSpec};
pub use ingest::{ingest_file, read_ids, write_ids, Format};
pub use report::{
    Check, CheckpointRecord, GuaranteeSummary, OracleOutput, RunReport, SketchOutput, Summary,
    TaskConfig, TrialRecord, RUN_REPORT_SCHEMA,
};
pub use verify::{bucket_bound, verify_histograms, InvariantCounts, VerifyReport};
