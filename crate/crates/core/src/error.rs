use thiserror::Error;

use crate::sdp::SolveStatus;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("k = {k} out of range 1..={max}")]
    KOutOfRange { k: usize, max: usize },

    #[error("map is not Hermitian-preserving (Choi anti-Hermitian residual {0:.3e})")]
    NotHermitianPreserving(f64),

    #[error("map is not completely positive (minimal Choi eigenvalue {0:.3e})")]
    NotCompletelyPositive(f64),

    #[error("matrix is not positive semidefinite (minimal eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("supplied inverse does not invert the reference map (residual {0:.3e})")]
    InverseMismatch(f64),

    #[error("matrix is not Hermitian (residual {0:.3e})")]
    NotHermitian(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown map name `{0}`")]
    UnknownMap(String),

    #[error("seed rejected: {0}")]
    SeedRejected(String),

    #[error("solver finished with status {status:?}: {detail}")]
    Solver { status: SolveStatus, detail: String },

    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}
