//! Experiment harness for the sketched refinement solvers.
//!
//! An [`ExperimentSpec`] names a grid of planted problems and a list of
//! solvers. [`experiments::run`] solves every instance (in parallel across
//! instances) and appends rows to a versioned CSV file in a fixed order, so
//! the same spec and master seed always produce the same file apart from the
//! `wall_time_s` column.

pub mod analysis;
pub mod error;
pub mod experiments;
pub mod output;
pub mod solve;
pub mod spec;

pub use error::{BenchError, Result};
pub use experiments::{
    run, run_convergence, run_failrate, run_instance, run_nscale, run_residual_size, run_sweep, Instance, RunOutcome,
};
pub use output::{read_rows, CsvSink, ResultRow};
pub use solve::{run_solve, solve_system, SolveOptions, SolveSummary};
pub use spec::{Experiment, ExperimentSpec, SketchDim, Solver};
