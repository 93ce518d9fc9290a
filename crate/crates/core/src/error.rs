use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Both siphons have the same diameter and the tie policy refuses to pick.
    #[error("degenerate tie: lambda_a = lambda_b = {0}")]
    DegenerateTie(f64),

    #[error("invalid siphon diameter {name} = {value}: must be finite and > 0")]
    InvalidDiameter { name: &'static str, value: f64 },

    #[error("invalid total volume {0}: must be finite and > 0")]
    InvalidVolume(f64),

    #[error("invalid integration step dt = {0}: must be finite and > 0")]
    InvalidStep(f64),

    #[error("invalid sampler bounds [{low}, {high}]: need 0 < low < high")]
    InvalidSampler { low: f64, high: f64 },

    #[error("sample count must be at least 1")]
    NoSamples,

    #[error("empty hidden-variable sample set")]
    EmptySampleSet,

    #[error("estimates do not cover the four coincidence pairs: {0}")]
    MismatchedPairs(String),

    #[error("amplitudes not normalized: sum |amp|^2 = {0}")]
    NotNormalized(f64),

    #[error("wrong number of amplitudes: expected {expected}, got {found}")]
    WrongArity { expected: usize, found: usize },

    #[error("measurement direction is not a unit vector (norm {0})")]
    NotUnit(f64),

    #[error("invalid tolerance {0}: must be >= 0")]
    InvalidTolerance(f64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code for the CLI: 2 for configuration problems, 3 for
    /// everything raised by the simulation itself.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io(_) => 2,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
