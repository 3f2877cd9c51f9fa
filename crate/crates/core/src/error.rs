use thiserror::Error;

/// Errors raised by the simulator and its I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("Hermitian symmetry violated: relative defect {defect:.3e} exceeds {limit:.1e}")]
    NotHermitian { defect: f64, limit: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("numerical blow-up at t = {t:.6e} (last valid time {last_valid_t:.6e}): {reason}")]
    BlowUp {
        t: f64,
        last_valid_t: f64,
        reason: String,
    },

    #[error("finite-difference oracle unstable at t = {t:.6e}: norm grew by {growth:.3e}")]
    FdUnstable { t: f64, growth: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error("csv error: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
