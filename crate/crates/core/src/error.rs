use thiserror::Error;

/// Errors raised by the solvers and builders in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("risk level r = {0} is outside (0, 1]")]
    RiskLevel(f64),

    #[error("joint mass totals {total}, expected 1")]
    MassMismatch { total: f64 },

    #[error("unsupported risk specification: {0}")]
    UnsupportedRisk(String),

    #[error("clique evaluation over {vertices} vertices exceeds the cap of {cap}")]
    CliqueCap { vertices: usize, cap: usize },

    #[error("size guard: {what} has {size} elements, cap is {cap}")]
    SizeGuard {
        what: &'static str,
        size: u128,
        cap: u128,
    },

    #[error("IC margin is undefined for a single-action instance")]
    MarginUndefined,

    #[error("no crossing: one action dominates on the whole belief interval")]
    NoCrossing,

    #[error("empty signal alphabet: no (grid posterior, action) pair passes the filter")]
    EmptyAlphabet,

    #[error("empty probe set")]
    EmptyProbes,

    #[error("empty scheme")]
    EmptyScheme,

    #[error("linear program {0}")]
    Lp(String),

    #[error("post-hoc verification failed: {0}")]
    Verification(String),

    #[error("malformed graph: {0}")]
    Graph(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
