// SPDX-License-Identifier: MIT OR Apache-2.0

use thiserror::Error;

/// Errors raised by the detection and estimation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorrError {
    #[error("invalid dimensions: {0}")]
    InvalidShape(String),
    #[error("non-finite entry at variable {row}, time {col} (0-based)")]
    NonFinite { row: usize, col: usize },
    #[error("variable {0} (0-based) has zero variance")]
    ZeroVarianceRow(usize),
    #[error("matrix dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("split index {t} outside the valid range {min}..={max}")]
    SplitOutOfRange { t: usize, min: usize, max: usize },
    #[error("series too short: need at least {needed} time points, got {got}")]
    SeriesTooShort { needed: usize, got: usize },
    #[error("number of signflip trials must be positive")]
    TrialCountZero,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no pair exceeds the threshold; support is empty")]
    EmptySupport,
    #[error("minority window holds {0} columns; at least 2 are needed")]
    MinorityWindowTooSmall(usize),
    #[error("kernel bandwidth is zero (all observations coincide)")]
    ZeroBandwidth,
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("no closed form for this distribution: {0}")]
    UnsupportedDistribution(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

impl From<std::io::Error> for CorrError {
    fn from(err: std::io::Error) -> Self {
        CorrError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CorrError>;
