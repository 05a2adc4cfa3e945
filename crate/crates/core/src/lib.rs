// SPDX-License-Identifier: MIT OR Apache-2.0

//! Detection and location of a single change point in the correlation
//! matrix of a high-dimensional time series.
//!
//! The pipeline standardizes a `p x T` matrix, contrasts left and right
//! segment correlations for every split, calibrates thresholds by randomly
//! signflipping the data, and scans a CUSUM over the pairs that survive.
//! Tail change points are handled by SMOTE inflation of the last columns.

pub mod baselines;
pub mod detect;
pub mod error;
pub mod estimate;
pub mod halfvec;
pub mod seed;
pub mod series;
pub mod signflip;
pub mod simlab;
pub mod smote;
pub mod stat;

pub use detect::{decide, spad_detect, DetectionReport};
pub use error::{CorrError, Result};
pub use estimate::{
    cusum_curve, cusum_from_columns, reduce_dimension, space_estimate, space_from_parts, EstimationReport,
    Method, ReducedSeries,
};
pub use halfvec::{vecho, HalfVector, SupportIndexSet};
pub use series::{standardize, ObservationMatrix, StandardizedSeries};
pub use signflip::{compute_thresholds, SignflipConfig, ThresholdReport, TrialStorage};
pub use smote::{smote_extend, smote_generate, smote_space, AugmentedSeries, SmoteConfig};
pub use stat::{compute_vt, compute_w};
