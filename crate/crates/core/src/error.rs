use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("split leaves the {0} segment empty")]
    SplitTooSmall(&'static str),
    #[error("channel {channel} has zero variance")]
    DegenerateChannel { channel: usize },
    #[error("series of length {len} is shorter than lookback + horizon = {needed}")]
    SeriesTooShort { len: usize, needed: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("spectrum with {bins} bins is inconsistent with length {len}")]
    InvalidSpectrum { bins: usize, len: usize },
    #[error("band partition needs at least 3 bins, got {0}")]
    TooFewBins(usize),
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("bin {0} cannot be rescaled")]
    InvalidIndex(usize),
    #[error("no data")]
    NoData,
    #[error("frequency norm must be positive, got {0}")]
    InvalidFrequency(f64),
    #[error("frequency {0} does not fall on a bin centre of the probe")]
    NonIntegerFrequency(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn shape(expected: (usize, usize), found: (usize, usize)) -> Self {
        Error::ShapeMismatch { expected, found }
    }
}
