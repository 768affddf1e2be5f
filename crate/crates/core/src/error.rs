use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("site index {site} out of range for {sites} sites")]
    SiteOutOfRange { site: usize, sites: usize },

    #[error("matrix is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("basis is not orthonormal (deviation {deviation:.3e})")]
    NotOrthonormal { deviation: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("invalid observable: {0}")]
    InvalidObservable(String),

    #[error("invalid state specification: {0}")]
    InvalidState(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("state leaks {leakage:.3e} of its population outside the expected subspace (tolerance {tolerance:.1e})")]
    Leakage { leakage: f64, tolerance: f64 },

    #[error("measurement branch has zero probability")]
    ZeroProbability,

    #[error("target state is not pure (purity {purity:.6})")]
    NotPure { purity: f64 },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("observable {0} is not value-assignable (only X, Z and I factors are)")]
    NotValueAssignable(String),

    #[error("unknown witness `{0}`")]
    UnknownWitness(String),

    #[error("cell (k={k}, s={s}) has {count} samples, at least {required} required")]
    Undersampled {
        k: u8,
        s: u8,
        count: usize,
        required: usize,
    },

    #[error("malformed transcript: {0}")]
    Transcript(String),
}

pub type Result<T> = std::result::Result<T, Error>;
