use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("site index {index} out of range for {len} sites")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("at least two sites are required, got {0}")]
    TooFewSites(usize),

    #[error("sites {0} and {1} coincide")]
    DuplicateSites(usize, usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),

    #[error("{0:?} and {1:?} are not lattice neighbours")]
    NotNeighbors(Vec<i64>, Vec<i64>),

    #[error("point {0:?} lies outside the simulation box")]
    OutsideBox(Vec<f64>),

    #[error("rounded sources {0} and {1} collapse onto the same lattice point")]
    CollapsedSources(usize, usize),

    #[error("seed balls around sites {0} and {1} overlap")]
    OverlappingSeeds(usize, usize),

    #[error("vector must be non-zero")]
    ZeroVector,

    #[error("site {site} has norm {value}, expected 1")]
    NotOnUnitSphere { site: usize, value: f64 },

    #[error("segment between sites {0} and {1} has no point of norm below 1")]
    FlatSegment(usize, usize),

    #[error("reference set has no mass in any of the requested balls")]
    UndefinedDensity,

    #[error("box too small: no measured points remain after a guard margin of {0}")]
    GuardMargin(f64),

    #[error("no site has a cell of positive density")]
    EmptyIndexSet,

    #[error("{fraction:.3} of replicates were truncated at distance {distance}")]
    Truncated { distance: f64, fraction: f64 },

    #[error("invalid parameter: {0}")]
    Invalid(String),

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
