use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite {what}: {value}")]
    NonFinite { what: &'static str, value: f64 },

    /// `yA1 - yA2 = l3`: the first loop degenerates into a parallelogram and
    /// the virtual angle is free.
    #[error("parallel singularity: gamma is indeterminate (B = {b:e} mm)")]
    IndeterminateGamma { b: f64 },

    #[error("first loop cannot close: |B / 2 l2| = {ratio} > 1")]
    GammaOutOfRange { ratio: f64 },

    #[error("second hybrid chain cannot reach: H2 = {h2} mm^2 < 0")]
    ChainIIUnreachable { h2: f64 },

    #[error("no real alpha: {reason}")]
    AlphaUnreachable { reason: String },

    #[error("target unreachable: {reason}")]
    Unreachable { reason: String },

    #[error("cotangent singular: |sin {angle}| = {value:e}")]
    CotangentSingular { angle: &'static str, value: f64 },

    #[error("finite-difference check not comparable: {0}")]
    NonComparable(String),

    #[error("invalid Assur kinematic chain: constraint degrees sum to {sum}, expected 0")]
    InvalidAkc { sum: i64 },

    #[error("invalid loop: {0}")]
    InvalidLoop(String),

    #[error("invalid scan: {0}")]
    InvalidScan(String),

    #[error("{axis} = {value} is outside the scan range [{min}, {max}]")]
    OutOfRange {
        axis: char,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}
