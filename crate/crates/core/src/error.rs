use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid charge profile: {0}")]
    InvalidProfile(String),

    #[error("radius must be non-negative, got {0}")]
    NegativeRadius(f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid under-resolves the charge support: {cells:.2} cells across 2*R_rho, need at least {needed}")]
    UnderResolved { cells: f64, needed: f64 },

    #[error("quadrature for {what} did not converge (achieved tolerance {achieved:.3e})")]
    QuadratureNonConvergence { what: &'static str, achieved: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite {what} at t = {t}")]
    NonFinite { what: &'static str, t: f64 },

    #[error("omega history is undefined on [{from}, {to}] (defined from {defined_from} to {defined_to})")]
    HistoryDomain {
        from: f64,
        to: f64,
        defined_from: f64,
        defined_to: f64,
    },

    #[error("need at least {need} samples, got {got}")]
    InsufficientSamples { need: usize, got: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
