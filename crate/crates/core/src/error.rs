use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point is off the hyperboloid: {0}")]
    OffManifold(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("generation failed: {0}")]
    Generation(String),

    #[error("non-finite value during optimisation: {0}")]
    NonFinite(String),

    #[error("reconstruction failed: {0}")]
    Reconstruction(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("scale error: {0}")]
    Scale(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by numerics rather than by bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonFinite(_)
                | Error::Reconstruction(_)
                | Error::Construction(_)
                | Error::Scale(_)
                | Error::Generation(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
