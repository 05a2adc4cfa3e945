// SPDX-License-Identifier: MIT OR Apache-2.0

//! Comparison methods for change-point location.

pub mod dette;
pub mod kcp;

pub use dette::{
    dette_curve, dette_d, dette_detect, dette_estimate, dette_estimate_calibrated,
    dette_thresholds, vech_entries, vech_len, DetteVector,
};
pub use kcp::{kcp_estimate, KcpState};
