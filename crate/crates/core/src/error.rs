use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{func}: argument {arg} outside the domain ({reason})")]
    Domain {
        func: &'static str,
        arg: f64,
        reason: &'static str,
    },

    #[error("index {index} out of range (table holds {available} entries)")]
    Range { index: usize, available: usize },

    #[error("Bernoulli recurrence check failed at B_{index}: table has {found}, recurrence gives {expected}")]
    BernoulliRecurrence {
        index: usize,
        expected: String,
        found: String,
    },

    #[error("matrix is not Hermitian: |H - H^dagger| = {deviation:e} exceeds tolerance {tolerance:e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("not a density matrix: {0}")]
    NotDensity(String),

    #[error("singular state: eigenvalue {eigenvalue:e} <= {threshold:e}")]
    Singular { eigenvalue: f64, threshold: f64 },

    #[error("shape mismatch: expected {expected}, got {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no published large-dimension limit for the {0} pairing")]
    UnsupportedLimit(String),

    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("sample {index}: {source}")]
    Sample {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True when the failure came from the operating system's I/O layer.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io(_) => true,
            Error::Csv(e) => matches!(e.kind(), csv::ErrorKind::Io(_)),
            Error::Sample { source, .. } => source.is_io(),
            _ => false,
        }
    }

    pub(crate) fn domain(func: &'static str, arg: f64, reason: &'static str) -> Self {
        Error::Domain { func, arg, reason }
    }
}
