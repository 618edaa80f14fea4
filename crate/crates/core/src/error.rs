use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("variant {variant}: every genotype is missing")]
    AllMissing { variant: String },

    #[error("phenotype has no cases")]
    NoCases,

    #[error("phenotype has no controls")]
    NoControls,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid variant record: {0}")]
    InvalidVariant(String),

    #[error("invalid unit {name}: {reason}")]
    InvalidUnit { name: String, reason: String },

    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{}: not a PLINK .bed file (bad magic bytes)", .0.display())]
    NotABed(PathBuf),

    #[error("{}: unsupported .bed mode byte {mode:#04x} (only variant-major 0x01)", path.display())]
    UnsupportedMode { path: PathBuf, mode: u8 },

    #[error("{}: .bed size mismatch, expected {expected} bytes, found {actual}", path.display())]
    BedSize {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },

    #[error("matrix holds imputed real-valued dosages and cannot be written as hard calls")]
    ImputedNotSerializable,

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("genotype counts must be non-negative")]
    NegativeCount,

    #[error("unknown variant id {0}")]
    UnknownVariant(String),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("pooled covariance is singular after regularization")]
    SingularCovariance,

    #[error("haplotype frequencies infeasible: {0}")]
    LdInfeasible(String),

    #[error("rho grid is empty")]
    EmptyGrid,

    #[error("invalid rho {0}: must lie in [0, 1]")]
    InvalidRho(f64),

    #[error("too few permutations: {got} < {min}")]
    TooFewPermutations { got: usize, min: usize },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
