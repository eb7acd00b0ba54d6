//! Minimum-energy-path relaxation: string method and nudged elastic band.

mod path;
mod report;
mod solver;
mod spline;

pub use path::{init_path_convex, PathState};
pub use report::{
    read_path_csv, write_iterations_csv, write_node_metrics_csv, write_path_csv, IterationRecord,
    NodeMetrics, SolveReport,
};
pub use solver::{
    convergence_metrics, max_residual, neb_force, neb_tangent, relax, string_step, NebConfig,
    PathMethod,
};
pub use spline::reparametrize;
