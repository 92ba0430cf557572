use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{function} has a pole at {at}")]
    Pole { function: &'static str, at: String },

    #[error("{function} is not supported at {at}: {detail}")]
    UnsupportedRegion {
        function: &'static str,
        at: String,
        detail: &'static str,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("unsupported weight {weight}: {detail}")]
    UnsupportedWeight { weight: u32, detail: &'static str },

    #[error("{what}: requested {requested} exceeds limit {limit}")]
    ResourceLimit {
        what: &'static str,
        requested: u64,
        limit: u64,
    },

    #[error("truncation mismatch: need {needed} coefficients, factor has {available}")]
    TruncationMismatch { needed: usize, available: usize },

    #[error("weight mismatch: {0} vs {1}")]
    WeightMismatch(u32, u32),

    #[error("{op}: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("index {index} out of range 1..={max}")]
    OutOfRange { index: usize, max: usize },

    #[error("insufficient coefficients: need {needed}, have {available}")]
    InsufficientCoefficients { needed: usize, available: usize },

    #[error("integrand does not decay: |F| = {magnitude:e} at height {height} vs integral {integral:e}")]
    NonDecay { height: f64, magnitude: f64, integral: f64 },

    #[error("quadrature did not converge: step-halving change {change:e} exceeds estimate {estimate:e}")]
    QuadratureNotConverged { change: f64, estimate: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("integer overflow in {0}")]
    Overflow(&'static str),

    #[error("cache: {0}")]
    Cache(String),

    #[error("checksum mismatch: header {expected:016x}, payload {actual:016x}")]
    ChecksumMismatch { expected: u64, actual: u64 },

    #[error("cache version {found} not supported (expected {expected})")]
    VersionMismatch { found: u16, expected: u16 },

    #[error("cached expansion has {cached} coefficients, {requested} requested")]
    InsufficientCache { cached: u64, requested: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            op,
            detail: detail.into(),
        }
    }
}
