use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the solvers and helpers can report.
///
/// The variants are coarse on purpose so that front ends can map them onto
/// a small exit-code table; the message carries the detail.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("format error at line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("linear solver stagnated after {iters} iterations (relative residual {residual:.3e})")]
    LinearStagnation { iters: usize, residual: f64 },
    #[error("singular linear system: {0}")]
    Singular(String),
    #[error("frozen operator not elliptic: min(c^2 - |grad w|^2 + eps) = {min_lambda:.3e} at node {node}")]
    IndefiniteSystem { min_lambda: f64, node: usize },
    #[error("iterate sup-norm {norm:.3e} exceeds cap {cap:.3e}")]
    CapExceeded { norm: f64, cap: f64 },
    #[error("no convergence after {iters} iterations (last change {last_change:.3e}): {reason}")]
    NonConvergence {
        iters: usize,
        last_change: f64,
        reason: String,
    },
    #[error("input field is not solenoidal: max |div W| = {0:.3e}")]
    NonSolenoidalInput(f64),
    #[error("{count} nodes not reached by any inflow characteristic")]
    UncoveredNodes { count: usize },
    #[error("gradient target is not integrable: curl defect {0:.3e}")]
    NonIntegrable(f64),
    #[error("sonic encroachment: max L^2 = {0:.6}")]
    SonicEncroachment(f64),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
