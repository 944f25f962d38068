//! Experiment front end: spec files, seeded ensemble execution, measurement
//! cost ledgers, and CSV trace emission.

pub mod compare;
pub mod ensemble;
pub mod specfile;

pub use compare::{first_crossing, frontier_curve, merge_frontiers, FrontierCurve, MergedFrontier};
pub use ensemble::{
    build_task, reference_step_cost, run_ensemble, AccuracyRow, BuiltTask, EnsembleResult,
    SummaryRow, SUMMARY_HEADER,
};
pub use specfile::{load_spec, parse_spec, EdgeSpec, ExperimentSpec, TaskSpec};
