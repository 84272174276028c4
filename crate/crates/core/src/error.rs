use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("index ({i}, {j}, {k}) out of range for dims ({}, {}, {})", dims[0], dims[1], dims[2])]
    Bounds {
        i: usize,
        j: usize,
        k: usize,
        dims: [usize; 3],
    },

    #[error("model format error: {0}")]
    Format(String),

    #[error("model kind mismatch: expected {expected}, found {found}")]
    KindMismatch { expected: String, found: String },

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("training diverged at epoch {epoch} (step size {eta:e}): loss is {loss}")]
    Divergence { epoch: usize, eta: f64, loss: f64 },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
