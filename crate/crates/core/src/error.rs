//! Crate-wide error type.
//!
//! Every fallible operation in this crate returns one of the variants below.
//! `Error::name` yields the bare variant name, which the CLI prints on stderr
//! so scripts can match on it without parsing the human-readable message.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("required key {0:?} not found in calibration file")]
    MissingKey(String),
    #[error("malformed value on line {line}")]
    MalformedValue { line: usize },
    #[error("key {key:?} carries {got} values, expected {expected}")]
    WrongArity {
        key: String,
        expected: usize,
        got: usize,
    },
    #[error("point record stream length {len} is not a multiple of 16")]
    TruncatedRecord { len: usize },
    #[error("line {line} has {got} fields, expected 15")]
    WrongFieldCount { line: usize, got: usize },
    #[error("unknown object category {0:?}")]
    UnknownCategory(String),
    #[error("depth {depth} cannot be stored in the 16-bit raster (valid range [0, 256) m)")]
    DepthOutOfRange { depth: f64 },
    #[error("malformed raster header: {0}")]
    MalformedHeader(String),
    #[error("input depth map has no valid pixels")]
    EmptyInput,
    #[error("bad colorization range: d_min {min} must be < d_max {max}")]
    BadRange { min: f64, max: f64 },
    #[error("channel mismatch: expected {expected}, got {got}")]
    ChannelMismatch { expected: usize, got: usize },
    #[error("shapes {a:?} and {b:?} do not match")]
    ShapeMismatch { a: Vec<usize>, b: Vec<usize> },
    #[error("spatial dims of {a:?} and {b:?} do not match")]
    SpatialMismatch { a: Vec<usize>, b: Vec<usize> },
    #[error("matrix dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("noise schedule needs at least one step")]
    BadSteps,
    #[error("step {t} outside schedule range 0..={max}")]
    StepOutOfRange { t: usize, max: usize },
    #[error("box counts differ: {left} vs {right}")]
    CountMismatch { left: usize, right: usize },
    #[error("{gt} ground-truth boxes exceed the proposal budget {n_train}")]
    TooManyGt { gt: usize, n_train: usize },
    #[error("bad reverse-step ladder: {0}")]
    BadStepLadder(String),
    #[error("both boxes have zero area")]
    DegenerateBox,
    #[error("gradient evaluation produced a non-finite value")]
    NonFiniteGradient,
}

impl Error {
    /// Bare variant name, stable for machine consumption.
    pub fn name(&self) -> &'static str {
        match self {
            Error::MissingKey(_) => "MissingKey",
            Error::MalformedValue { .. } => "MalformedValue",
            Error::WrongArity { .. } => "WrongArity",
            Error::TruncatedRecord { .. } => "TruncatedRecord",
            Error::WrongFieldCount { .. } => "WrongFieldCount",
            Error::UnknownCategory(_) => "UnknownCategory",
            Error::DepthOutOfRange { .. } => "DepthOutOfRange",
            Error::MalformedHeader(_) => "MalformedHeader",
            Error::EmptyInput => "EmptyInput",
            Error::BadRange { .. } => "BadRange",
            Error::ChannelMismatch { .. } => "ChannelMismatch",
            Error::ShapeMismatch { .. } => "ShapeMismatch",
            Error::SpatialMismatch { .. } => "SpatialMismatch",
            Error::DimMismatch(_) => "DimMismatch",
            Error::BadSteps => "BadSteps",
            Error::StepOutOfRange { .. } => "StepOutOfRange",
            Error::CountMismatch { .. } => "CountMismatch",
            Error::TooManyGt { .. } => "TooManyGt",
            Error::BadStepLadder(_) => "BadStepLadder",
            Error::DegenerateBox => "DegenerateBox",
            Error::NonFiniteGradient => "NonFiniteGradient",
        }
    }
}
