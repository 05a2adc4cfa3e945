// SPDX-License-Identifier: MIT OR Apache-2.0

//! Change-point location estimation: threshold-based dimension reduction
//! followed by a CUSUM scan.

use serde::{Deserialize, Serialize};

use crate::error::{CorrError, Result};
use crate::halfvec::{offset_to_pair, HalfVector, SupportIndexSet};
use crate::series::{standardize, ObservationMatrix, StandardizedSeries};
use crate::signflip::{compute_thresholds, SignflipConfig, ThresholdReport};
use crate::stat::compute_w;

/// First split index scanned by every estimator.
pub const SCAN_START: usize = 2;

/// Products `x_{t,a} x_{t,b}` over the retained pairs, one `d`-vector per
/// time point (time-major).
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedSeries {
    z: Vec<f64>,
    d: usize,
    len: usize,
    support: SupportIndexSet,
}

impl ReducedSeries {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn support(&self) -> &SupportIndexSet {
        &self.support
    }

    /// `z_t` for time `t` (0-based).
    pub fn column(&self, t: usize) -> &[f64] {
        &self.z[t * self.d..(t + 1) * self.d]
    }
}

/// Keeps the pairs with `w(i, j) > tau2` and assembles their products.
pub fn reduce_dimension(w: &HalfVector, tau2: f64, x: &StandardizedSeries) -> Result<ReducedSeries> {
    if !(tau2 >= 0.0) {
        return Err(CorrError::InvalidConfig(format!(
            "tau2 must be nonnegative, got {tau2}"
        )));
    }
    if w.p() != x.p() {
        return Err(CorrError::InvalidShape(format!(
            "w is for p={} but the series has p={}",
            w.p(),
            x.p()
        )));
    }
    let support = w.exceedances(tau2);
    if support.is_empty() {
        return Err(CorrError::EmptySupport);
    }
    let d = support.len();
    let len = x.len();
    let pairs: Vec<(usize, usize)> = support
        .offsets()
        .iter()
        .map(|&k| offset_to_pair(x.p(), k))
        .collect();
    let mut z = vec![0.0; d * len];
    for (c, &(a, b)) in pairs.iter().enumerate() {
        let (ra, rb) = (x.row(a), x.row(b));
        for t in 0..len {
            z[t * d + c] = ra[t] * rb[t];
        }
    }
    Ok(ReducedSeries { z, d, len, support })
}

/// CUSUM values `U_T(t)` for `t = 2..=T-2`.
pub fn cusum_curve(z: &ReducedSeries) -> Result<Vec<f64>> {
    cusum_from_columns(&z.z, z.d, z.len)
}

/// CUSUM over arbitrary time-major `d`-vectors:
/// `U_T(t) = ‖(T-t) L_t - t R_t‖² / T⁴` with `L_t`, `R_t` the left and right
/// segment sums.
pub fn cusum_from_columns(z: &[f64], d: usize, len: usize) -> Result<Vec<f64>> {
    if len < 4 {
        return Err(CorrError::SeriesTooShort { needed: 4, got: len });
    }
    if d == 0 || z.len() != d * len {
        return Err(CorrError::InvalidShape(format!(
            "expected {len} columns of dimension {d}, got {} values",
            z.len()
        )));
    }
    let mut total = vec![0.0; d];
    for col in z.chunks_exact(d) {
        for (s, v) in total.iter_mut().zip(col) {
            *s += v;
        }
    }
    let n = len as f64;
    let scale = 1.0 / (n * n * n * n);
    let mut left = vec![0.0; d];
    let mut curve = Vec::with_capacity(len - 3);
    for (k, col) in z.chunks_exact(d).take(len - 2).enumerate() {
        for (s, v) in left.iter_mut().zip(col) {
            *s += v;
        }
        let t = k + 1;
        if t >= SCAN_START {
            let (a, b) = ((len - t) as f64, t as f64);
            let norm: f64 = left
                .iter()
                .zip(&total)
                .map(|(l, s)| {
                    let diff = a * l - b * (s - l);
                    diff * diff
                })
                .sum();
            curve.push(norm * scale);
        }
    }
    Ok(curve)
}

/// Index of the largest value; the first one wins ties.
pub fn argmax_first(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if !(v > b) => {}
            _ => best = Some((k, v)),
        }
    }
    best.map(|(k, _)| k)
}

/// Index of the smallest value; the first one wins ties.
pub fn argmin_first(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if !(v < b) => {}
            _ => best = Some((k, v)),
        }
    }
    best.map(|(k, _)| k)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Space,
    SmoteSpace,
    Dette,
    Kcp,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Space => "space",
            Method::SmoteSpace => "smote_space",
            Method::Dette => "dette",
            Method::Kcp => "kcp",
        }
    }
}

/// Result of a single change-point location estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    pub method: Method,
    /// Estimated change-point fraction `t_hat / T`.
    pub beta_hat: f64,
    pub t_hat: usize,
    /// Length of the series `beta_hat` refers to.
    pub series_len: usize,
    /// Scanned objective, starting at split [`SCAN_START`].
    pub curve: Vec<f64>,
    pub support: SupportIndexSet,
    /// Variables whose own variance entry was retained (diagonal-aware
    /// methods only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub support_diagonal: Vec<usize>,
    pub thresholds: Option<ThresholdReport>,
    pub smote_iterations: usize,
    /// `t_hat` sits on the edge of the scan range (or was clamped).
    pub boundary: bool,
    /// False when an iterative method stopped at its iteration cap.
    pub converged: bool,
    /// Thresholds come from a stand-in calibration rather than the method's
    /// own procedure.
    pub surrogate_threshold: bool,
}

impl EstimationReport {
    pub(crate) fn from_curve(
        method: Method,
        curve: Vec<f64>,
        t_hat: usize,
        len: usize,
        support: SupportIndexSet,
        thresholds: Option<ThresholdReport>,
    ) -> Self {
        Self {
            method,
            beta_hat: t_hat as f64 / len as f64,
            t_hat,
            series_len: len,
            boundary: t_hat == SCAN_START || t_hat + 2 == len,
            curve,
            support,
            support_diagonal: Vec::new(),
            thresholds,
            smote_iterations: 0,
            converged: true,
            surrogate_threshold: false,
        }
    }
}

/// Reduction, CUSUM scan and argmax for a precomputed `w` and `tau2`.
pub fn space_from_parts(
    x: &StandardizedSeries,
    w: &HalfVector,
    thresholds: ThresholdReport,
) -> Result<EstimationReport> {
    let z = reduce_dimension(w, thresholds.tau2, x)?;
    let curve = cusum_curve(&z)?;
    let k = argmax_first(&curve).ok_or(CorrError::SeriesTooShort { needed: 4, got: x.len() })?;
    Ok(EstimationReport::from_curve(
        Method::Space,
        curve,
        k + SCAN_START,
        x.len(),
        z.support,
        Some(thresholds),
    ))
}

/// Full pipeline: standardize, `w`, signflip `tau2`, reduce, scan.
pub fn space_estimate(data: &ObservationMatrix, cfg: &SignflipConfig) -> Result<EstimationReport> {
    cfg.validate()?;
    let x = standardize(data)?;
    let w = compute_w(&x)?;
    let thresholds = compute_thresholds(data, cfg)?;
    space_from_parts(&x, &w, thresholds)
}
