use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not diagonal (off-diagonal energy {energy:e})")]
    NotDiagonal { energy: f64 },

    #[error("matrix is not para-Hermitian (relative deviation {deviation:e})")]
    NotParaHermitian { deviation: f64 },

    #[error("input contains non-finite coefficients")]
    NonFinite,

    #[error("polynomial is identically zero")]
    ZeroPolynomial,

    #[error("normal equations are singular (pivot {pivot} of {size})")]
    Singular { pivot: usize, size: usize },

    #[error("inversion of diagonal element {index} failed: {source}")]
    DiagonalInversion {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unsupported overlap factor K = {0} (only K = 4 is supported)")]
    UnsupportedOverlap(usize),

    #[error("invalid subcarrier count {0}: must be a power of two >= {1}")]
    InvalidSubcarrierCount(usize, usize),

    #[error("subcarrier index {index} out of range for M = {m}")]
    SubcarrierOutOfRange { index: i64, m: usize },

    #[error("frames have unequal lengths")]
    RaggedFrames,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("signal has zero power")]
    ZeroPower,

    #[error("filter is empty")]
    EmptyFilter,

    #[error("no precoder for subcarrier {0}")]
    MissingPrecoder(usize),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
