use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the watchdog library.
#[derive(Debug, Error)]
pub enum WatchdogError {
    #[error("field width n={0} is outside the supported range 1..=20")]
    FieldWidth(u32),

    #[error("polynomial {poly:#x} is not an irreducible polynomial of degree {n}")]
    NotIrreducible { n: u32, poly: u32 },

    #[error("value {value} does not fit in a {n}-bit field element")]
    ValueOutOfRange { value: u32, n: u32 },

    #[error("field parameters differ between operands")]
    FieldMismatch,

    #[error("bit-vector widths differ ({0} vs {1})")]
    WidthMismatch(u32, u32),

    #[error("linear combination needs equal, non-empty coefficient and payload lists (got {coeffs} and {payloads})")]
    BadCombination { coeffs: usize, payloads: usize },

    #[error("crossover probability {0} is outside [0, 0.5]")]
    Probability(f64),

    #[error("invalid hash parameters: {0}")]
    Hash(String),

    #[error("observed word {observed:#x} has digest {actual:#x} but a noiseless channel requires digest {digest:#x}")]
    ImpossibleObservation { observed: u32, digest: u32, actual: u32 },

    #[error("no codeword hashes to digest {0:#x}")]
    EmptyHashClass(u32),

    #[error("coding coefficient for source {0} is zero")]
    ZeroCoefficient(usize),

    #[error("relay observation has zero likelihood under the protected digest")]
    ZeroLikelihood,

    #[error("threshold {0} is outside [0, 1]")]
    Threshold(f64),

    #[error("invalid analysis parameters: {0}")]
    Analysis(String),

    #[error("no trials to summarize")]
    NoTrials,

    #[error("invalid scenario: {0}")]
    Config(String),

    #[error("topology contains a cycle through node {0}")]
    Cyclic(u32),

    #[error("failed to parse topology: {0}")]
    Parse(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, WatchdogError>;
