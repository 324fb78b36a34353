use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EcsError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Raised when normalizing a state (or projecting onto an outcome) whose
    /// squared norm is below the zero-norm tolerance.
    #[error("state has vanishing norm (norm² = {norm2:e})")]
    ZeroNorm { norm2: f64 },

    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("mode amplitude {re}+{im}i is neither +β nor -β")]
    AmplitudeOffGrid { re: f64, im: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, EcsError>;

pub(crate) fn check_index(what: &'static str, index: usize, len: usize) -> Result<()> {
    if index < len {
        Ok(())
    } else {
        Err(EcsError::IndexOutOfRange { what, index, len })
    }
}
