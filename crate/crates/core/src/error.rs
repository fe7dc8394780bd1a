use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by code construction, decoding and the simulation harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("code length {0} is not a power of two >= 2")]
    InvalidLength(usize),
    #[error("dimension {k} plus {crc_len} CRC bits exceeds code length {n}")]
    DimensionTooLarge { n: usize, k: usize, crc_len: usize },
    #[error("code length {n} exceeds the reliability sequence length {max}")]
    SequenceTooShort { n: usize, max: usize },
    #[error("malformed reliability sequence: {0}")]
    BadSequence(String),
    #[error("expected {expected} payload bits, got {got}")]
    PayloadLength { expected: usize, got: usize },
    #[error("expected {expected} channel values, got {got}")]
    FrameLength { expected: usize, got: usize },
    #[error("enumeration bound exceeded: {k} information bits (limit {limit})")]
    EnumerationTooLarge { k: usize, limit: usize },
    #[error("residual bracket {value:e} is below the tolerance -{tol:e}")]
    NegativeResidual { value: f64, tol: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
