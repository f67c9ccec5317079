use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

/// Every failure the numerical core can report.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid parameters ({clause}): {message}")]
    InvalidParams { clause: &'static str, message: String },

    #[error("negative argument u = {0} (sources are defined for u >= 0)")]
    NegativeArgument(f64),

    #[error("no convergence after {iterations} iterations (best value {best}, residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        best: f64,
        residual: f64,
    },

    #[error("no root: I(eps u) keeps sign {sign} on [1e-8, 1e8]")]
    NoRoot { sign: i8 },

    #[error("linear solve failed: {0}")]
    LinearSolveFailure(String),

    #[error("Picard iteration stalled after {iterations} iterations (update {update:e})")]
    PicardStall { iterations: usize, update: f64 },

    #[error("bound not applicable: {0}")]
    NotApplicable(String),

    #[error("norm did not decay enough for a fit (ratio {ratio:.3})")]
    InsufficientDecay { ratio: f64 },
}
