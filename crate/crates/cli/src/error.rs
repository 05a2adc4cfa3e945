// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;

use corrcp::CorrError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("input file is empty")]
    EmptyFile,
    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedRows { row: usize, expected: usize, found: usize },
    /// Row and column are 1-based positions in the file.
    #[error("cell at row {row}, column {col} is not numeric: {value:?}")]
    NonNumericCell { row: usize, col: usize, value: String },
    #[error("malformed csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Method(#[from] CorrError),
    #[error("cannot serialize report: {0}")]
    Serialize(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 0 success, 1 usage, 2 data, 3 method.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io { .. }
            | CliError::EmptyFile
            | CliError::RaggedRows { .. }
            | CliError::NonNumericCell { .. }
            | CliError::Csv(_) => 2,
            CliError::Method(e) => match e {
                CorrError::InvalidConfig(_) | CorrError::TrialCountZero | CorrError::InvalidScenario(_) => 1,
                CorrError::InvalidShape(_)
                | CorrError::NonFinite { .. }
                | CorrError::ZeroVarianceRow(_)
                | CorrError::DimensionTooSmall(_)
                | CorrError::SeriesTooShort { .. }
                | CorrError::Io(_) => 2,
                _ => 3,
            },
            CliError::Serialize(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
