//! Closed-loop pushing experiments: benchmark tasks, single trials with
//! ground-truth or filtered state, and parallel suites over
//! sampler/k/object grids with CSV summaries.

pub mod suite;
pub mod task;
pub mod trial;

pub use suite::{run_cell, summarize, Cell, CellSummary, Grid};
pub use task::{GoalRegion, TaskKind, TaskSpec};
pub use trial::{run_trial, EstimatorMode, TrialRecord, TrialSetup};
