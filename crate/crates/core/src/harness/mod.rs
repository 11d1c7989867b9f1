//! Experiment orchestration: schedules, the online loop, hindsight reference
//! programs, regret accounting and output artifacts.

pub mod config;
pub mod output;
pub mod run;
pub mod schedule;
pub mod sweep;

pub use config::{EtaSpec, ExperimentConfig};
pub use output::{emit_csv, emit_plot, read_csv, CurveSeries, CSV_HEADER};
pub use run::{compute_regret, run_online, solve_reference, RunResult, StepRecord};
pub use schedule::{gen_schedule, ScheduleKind, ScheduleSpec};
pub use sweep::{run_sweep, write_sweep, SweepConfig, SweepResult};
