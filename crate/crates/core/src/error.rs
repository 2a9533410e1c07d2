use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("empty data")]
    EmptyData,
    #[error("matrix is not positive semi-definite: {0}")]
    NotPsd(String),
    #[error("window out of bounds: {0}")]
    InvalidWindow(String),
    #[error("invalid selection: {0}")]
    InvalidSelection(String),
    #[error("spectral gap undefined for a single eigenvalue group")]
    UndefinedGap,
    #[error("matrix is not a rank-{expected} projector: {detail}")]
    NotAProjector { expected: usize, detail: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("degrees of freedom {n} smaller than factor rank {r}")]
    DegreesOfFreedomTooSmall { n: usize, r: usize },
    #[error("rank mismatch: {0}")]
    RankMismatch(String),
    #[error("too few observations: {0}")]
    TooFewObservations(usize),
    #[error("matrix violates the required off-diagonal block form: {0}")]
    BlockFormViolation(String),
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-greppable code for CLI error lines.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "E_INVALID_INPUT",
            Error::NumericalFailure(_) => "E_NUMERICAL",
            Error::EmptyData => "E_EMPTY_DATA",
            Error::NotPsd(_) => "E_NOT_PSD",
            Error::InvalidWindow(_) => "E_INVALID_WINDOW",
            Error::InvalidSelection(_) => "E_INVALID_SELECTION",
            Error::UndefinedGap => "E_UNDEFINED_GAP",
            Error::NotAProjector { .. } => "E_NOT_A_PROJECTOR",
            Error::Unsupported(_) => "E_UNSUPPORTED",
            Error::DegreesOfFreedomTooSmall { .. } => "E_DOF_TOO_SMALL",
            Error::RankMismatch(_) => "E_RANK_MISMATCH",
            Error::TooFewObservations(_) => "E_TOO_FEW_OBS",
            Error::BlockFormViolation(_) => "E_BLOCK_FORM",
            Error::InvalidDimension(_) => "E_INVALID_DIM",
            Error::Parse { .. } => "E_PARSE",
            Error::Io(_) => "E_IO",
        }
    }

    /// True for failures of iterative numerics (CLI exit code 2), as opposed
    /// to usage errors (exit code 1).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NumericalFailure(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
