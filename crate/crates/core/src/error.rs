//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by landscape construction, path solvers, and the
/// multibody machinery.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A library, preset, or system description is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// A required propensity view is absent from the library.
    #[error("missing view: {0}")]
    MissingView(String),

    /// Boltzmann inversion of a nonpositive probability.
    #[error("cannot Boltzmann-invert nonpositive probability P = {value}")]
    NonpositiveProbability { value: f64 },

    /// A path whose total length is too small to parametrize.
    #[error("degenerate path: {0}")]
    DegeneratePath(String),

    /// Geometry from which an angle cannot be measured.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// The constraint Jacobian lost row rank.
    #[error("rank-deficient constraint Jacobian: {0}")]
    RankDeficient(String),

    /// A direct linear solve hit a singular matrix.
    #[error("singular saddle-point system: {0}")]
    SingularSystem(String),

    /// An iterative solver ran out of iterations.
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// A relaxation produced a non-finite energy or gradient.
    #[error("non-finite energy or gradient at iteration {iteration}, node {node}")]
    NonFiniteValue { iteration: usize, node: usize },

    /// The integrator aborted mid-run.
    #[error("integration aborted at step {step} (t = {time:.6}): {reason}")]
    IntegrationAborted {
        step: usize,
        time: f64,
        reason: String,
    },

    /// Malformed row in a CSV input.
    #[error("{path}:{line}: {message}")]
    CsvRow {
        path: String,
        line: usize,
        message: String,
    },

    /// Malformed library or preset file.
    #[error("bad file format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
