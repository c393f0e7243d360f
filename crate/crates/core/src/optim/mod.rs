//! Loss models, smoothness constants and compressed gradient descent.

mod cgd;
mod problem;
mod sweep;

pub use cgd::{
    cgd_run, cgd_run_with_iterate, reference_gd_iterations, CgdOptions, Prepared, RunStatus,
    RunTrace, TraceRow, CSV_HEADER, DIVERGENCE_GUARD,
};
pub use problem::{LossKind, Problem};
pub use sweep::{iteration_ratio_sweep, SweepFamily, SweepRow, SweepTable};
