use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("capacity exceeded: requested {requested}, configured limit {limit}")]
    Capacity { requested: u64, limit: u64 },

    #[error("argument {value} outside table range 1..={max}")]
    Range { value: u64, max: u64 },

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("gcd({a}, {q}) != 1")]
    NotCoprime { a: i64, q: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("pole at s = {0}")]
    Pole(f64),

    #[error("empty grid")]
    EmptyGrid,

    #[error("identity violated: {0}")]
    Identity(String),

    #[error("numerical check failed: {0}")]
    Numerical(String),

    #[error("corrupt cache file: {0}")]
    CorruptCache(String),

    #[error("cache checksum mismatch: stored {stored:#018x}, computed {computed:#018x}")]
    Checksum { stored: u64, computed: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
