use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A lattice-density or pulse-grid constraint for the chosen scheme is violated.
    #[error("constraint `{constraint}` violated: {detail}")]
    Constraint { constraint: String, detail: String },

    #[error("bit count mismatch: expected {expected}, got {actual}")]
    BitCount { expected: usize, actual: usize },

    #[error("invalid constellation order {0}")]
    InvalidConstellation(usize),

    #[error("offset-QAM requires a square constellation order, got {0}")]
    NonSquareOqam(usize),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("pulse energy {0} differs from unity")]
    PulseEnergy(f64),

    #[error("frame of {requested} samples exceeds the configured maximum of {max}")]
    FrameTooLong { requested: usize, max: usize },

    #[error("negative EVM fraction {0}")]
    NegativeEvm(f64),

    #[error("unsupported pulse: {0}")]
    UnsupportedPulse(String),

    #[error("shift out of range: {0}")]
    ShiftOutOfRange(String),

    #[error("empty channel profile")]
    EmptyProfile,

    #[error("invalid channel profile: {0}")]
    InvalidProfile(String),

    #[error("block {block} out of range for a realization of {duration} samples")]
    BlockOutOfRange { block: usize, duration: usize },

    #[error("interference window L={given} smaller than the required {required}")]
    WindowTooSmall { given: usize, required: usize },

    #[error("least-squares system is rank deficient: rank {rank} < {full}")]
    RankDeficient { rank: usize, full: usize },

    #[error("MMSE equalizer needs a positive noise variance")]
    NonPositiveNoise,

    #[error("linear algebra failure: {0}")]
    Numerical(String),

    #[error("variance estimate diverged: {0}")]
    DivergentVariance(String),

    #[error("too few samples: {0}")]
    TooFewSamples(String),

    #[error("symbol period is not an integer number of samples: {0}")]
    FractionalSymbolPeriod(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
