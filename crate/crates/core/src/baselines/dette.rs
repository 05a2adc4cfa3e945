// SPDX-License-Identifier: MIT OR Apache-2.0

//! U-statistic detection vector and location estimator on the half
//! vectorization (with diagonal) of demeaned outer products.
//!
//! Entry order is column-major over the lower triangle including the
//! diagonal: `(0,0), (1,0), .., (p-1,0), (1,1), (2,1), ..`.

use rayon::prelude::*;

use crate::error::{CorrError, Result};
use crate::estimate::{argmax_first, EstimationReport, Method, SCAN_START};
use crate::halfvec::SupportIndexSet;
use crate::series::ObservationMatrix;
use crate::signflip::{compute_thresholds_with, SignflipConfig, ThresholdReport};

/// Length of `vech` for `p` variables.
pub const fn vech_len(p: usize) -> usize {
    p * (p + 1) / 2
}

/// `(row, col)` of each `vech` entry, `row >= col`.
pub fn vech_entries(p: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..p).flat_map(move |c| (c..p).map(move |r| (r, c)))
}

/// Detection vector `D` (length `p(p+1)/2`).
#[derive(Clone, Debug, PartialEq)]
pub struct DetteVector {
    pub p: usize,
    pub entries: Vec<f64>,
}

/// Demeaned observations, time-major.
fn demeaned_time_major(data: &ObservationMatrix) -> Vec<f64> {
    let (p, len) = (data.p(), data.len());
    let mut out = vec![0.0; p * len];
    for i in 0..p {
        let row = data.row(i);
        let mean = row.iter().sum::<f64>() / len as f64;
        for (t, v) in row.iter().enumerate() {
            out[t * p + i] = v - mean;
        }
    }
    out
}

pub fn dette_d(data: &ObservationMatrix) -> Result<DetteVector> {
    let (p, len) = (data.p(), data.len());
    if len < 5 {
        return Err(CorrError::SeriesTooShort { needed: 5, got: len });
    }
    let y = demeaned_time_major(data);
    let n = len as f64;
    let coef: Vec<(f64, f64, f64, f64)> = (2..=len - 2)
        .map(|t| {
            let (a, b) = (t as f64, (len - t) as f64);
            (a * b / n / (n - 3.0), 1.0 / (a * (a - 1.0)), 1.0 / (b * (b - 1.0)), 2.0 / (a * b))
        })
        .collect();

    let mut entries = vec![0.0; vech_len(p)];
    let mut blocks: Vec<(usize, &mut [f64])> = Vec::with_capacity(p);
    let mut rest = entries.as_mut_slice();
    for c in 0..p {
        let (head, tail) = rest.split_at_mut(p - c);
        blocks.push((c, head));
        rest = tail;
    }
    blocks.into_par_iter().for_each(|(c, out)| {
        let m = out.len();
        let (mut tot, mut tot_sq) = (vec![0.0; m], vec![0.0; m]);
        for t in 0..len {
            let row = &y[t * p..(t + 1) * p];
            for k in 0..m {
                let a = row[c] * row[c + k];
                tot[k] += a;
                tot_sq[k] += a * a;
            }
        }
        let (mut run, mut run_sq) = (vec![0.0; m], vec![0.0; m]);
        for s in 0..len - 2 {
            let row = &y[s * p..(s + 1) * p];
            for k in 0..m {
                let a = row[c] * row[c + k];
                run[k] += a;
                run_sq[k] += a * a;
            }
            if s >= 1 {
                let (wgt, inv_l, inv_r, inv_x) = coef[s - 1];
                for k in 0..m {
                    let (pl, ql) = (run[k], run_sq[k]);
                    let (pr, qr) = (tot[k] - pl, tot_sq[k] - ql);
                    let within_l = (pl * pl - ql) * inv_l;
                    let within_r = (pr * pr - qr) * inv_r;
                    let cross = pl * pr * inv_x;
                    out[k] += wgt * (within_l + within_r - cross);
                }
            }
        }
    });
    Ok(DetteVector { p, entries })
}

/// Objective per split, `t = 2..=T-2`, for time-major `d`-vectors:
/// the quadruple sum over `i != s <= t`, `j != l > t` of
/// `(y_i - y_j)'(y_s - y_l)`, divided by `T⁴`.
pub fn dette_curve(y: &[f64], d: usize, len: usize) -> Result<Vec<f64>> {
    if len < 4 {
        return Err(CorrError::SeriesTooShort { needed: 4, got: len });
    }
    if d == 0 || y.len() != d * len {
        return Err(CorrError::InvalidShape(format!(
            "expected {len} columns of dimension {d}, got {} values",
            y.len()
        )));
    }
    let mut total = vec![0.0; d];
    let mut total_sq = 0.0;
    for col in y.chunks_exact(d) {
        for (s, v) in total.iter_mut().zip(col) {
            *s += v;
        }
        total_sq += col.iter().map(|v| v * v).sum::<f64>();
    }
    let scale = 1.0 / (len as f64).powi(4);
    let mut left = vec![0.0; d];
    let mut left_sq = 0.0;
    let mut curve = Vec::with_capacity(len - 3);
    for (k, col) in y.chunks_exact(d).take(len - 2).enumerate() {
        for (s, v) in left.iter_mut().zip(col) {
            *s += v;
        }
        left_sq += col.iter().map(|v| v * v).sum::<f64>();
        let t = k + 1;
        if t < SCAN_START {
            continue;
        }
        let (n1, n2) = (t as f64, (len - t) as f64);
        let mut ll = 0.0;
        let mut rr = 0.0;
        let mut lr = 0.0;
        for (l, s) in left.iter().zip(&total) {
            let r = s - l;
            ll += l * l;
            rr += r * r;
            lr += l * r;
        }
        let right_sq = total_sq - left_sq;
        let value = n2 * (n2 - 1.0) * (ll - left_sq) + n1 * (n1 - 1.0) * (rr - right_sq)
            - 2.0 * (n1 - 1.0) * (n2 - 1.0) * lr;
        curve.push(value * scale);
    }
    Ok(curve)
}

/// Location estimate restricted to the `vech` entries with `D > tau`.
pub fn dette_estimate(data: &ObservationMatrix, tau: f64) -> Result<EstimationReport> {
    let d_vec = dette_d(data)?;
    dette_estimate_from(data, &d_vec, tau, None)
}

fn dette_estimate_from(
    data: &ObservationMatrix,
    d_vec: &DetteVector,
    tau: f64,
    thresholds: Option<ThresholdReport>,
) -> Result<EstimationReport> {
    if !(tau >= 0.0) {
        return Err(CorrError::InvalidConfig(format!("tau must be nonnegative, got {tau}")));
    }
    let (p, len) = (data.p(), data.len());
    let kept: Vec<(usize, usize)> = vech_entries(p)
        .zip(&d_vec.entries)
        .filter(|(_, &v)| v > tau)
        .map(|(rc, _)| rc)
        .collect();
    if kept.is_empty() {
        return Err(CorrError::EmptySupport);
    }
    let y = demeaned_time_major(data);
    let d = kept.len();
    let mut z = vec![0.0; d * len];
    for t in 0..len {
        let row = &y[t * p..(t + 1) * p];
        for (k, &(r, c)) in kept.iter().enumerate() {
            z[t * d + k] = row[r] * row[c];
        }
    }
    let curve = dette_curve(&z, d, len)?;
    let t_hat = argmax_first(&curve).expect("nonempty scan") + SCAN_START;

    let off_diag: Vec<(usize, usize)> = kept
        .iter()
        .filter(|(r, c)| r != c)
        .map(|&(r, c)| (c, r))
        .collect();
    let mut report = EstimationReport::from_curve(
        Method::Dette,
        curve,
        t_hat,
        len,
        SupportIndexSet::from_pairs(p, &off_diag)?,
        thresholds,
    );
    report.support_diagonal = kept.iter().filter(|(r, c)| r == c).map(|&(r, _)| r).collect();
    Ok(report)
}

/// Stand-in thresholds for `D`: signflip trials of the raw data pushed
/// through [`dette_d`]; `tau1` is the pooled maximum and `tau2` the pooled
/// `alpha`-quantile.
pub fn dette_thresholds(data: &ObservationMatrix, cfg: &SignflipConfig) -> Result<ThresholdReport> {
    compute_thresholds_with(data, cfg, |flipped| Ok(dette_d(flipped)?.entries))
}

/// Estimate with the stand-in `tau2`; the report is flagged as surrogate.
pub fn dette_estimate_calibrated(
    data: &ObservationMatrix,
    cfg: &SignflipConfig,
) -> Result<EstimationReport> {
    let d_vec = dette_d(data)?;
    let thresholds = dette_thresholds(data, cfg)?;
    let tau = thresholds.tau2.max(0.0);
    let mut report = dette_estimate_from(data, &d_vec, tau, Some(thresholds))?;
    report.surrogate_threshold = true;
    Ok(report)
}

/// Detection with the stand-in `tau1`: true when any entry of `D` exceeds it.
pub fn dette_detect(data: &ObservationMatrix, cfg: &SignflipConfig) -> Result<(bool, ThresholdReport)> {
    let d_vec = dette_d(data)?;
    let thresholds = dette_thresholds(data, cfg)?;
    let rejected = d_vec.entries.iter().any(|&v| v > thresholds.tau1);
    Ok((rejected, thresholds))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pseudo(n: usize, mut state: u64) -> Vec<f64> {
        (0..n)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            })
            .collect()
    }

    /// Direct U-statistic sums over all index pairs.
    fn naive_d(data: &ObservationMatrix) -> Vec<f64> {
        let (p, len) = (data.p(), data.len());
        let means: Vec<f64> = (0..p).map(|i| data.row(i).iter().sum::<f64>() / len as f64).collect();
        let a = |i: usize, r: usize, c: usize| (data.get(r, i) - means[r]) * (data.get(c, i) - means[c]);
        let n = len as f64;
        vech_entries(p)
            .map(|(r, c)| {
                let mut total = 0.0;
                for t in 2..=len - 2 {
                    let (tf, rf) = (t as f64, (len - t) as f64);
                    let (mut wl, mut wr, mut cross) = (0.0, 0.0, 0.0);
                    for i in 0..len {
                        for j in 0..len {
                            let prod = a(i, r, c) * a(j, r, c);
                            if i != j && i < t && j < t {
                                wl += prod;
                            }
                            if i != j && i >= t && j >= t {
                                wr += prod;
                            }
                            if i < t && j >= t {
                                cross += prod;
                            }
                        }
                    }
                    total += tf * rf / n
                        * (wl / (tf * (tf - 1.0)) + wr / (rf * (rf - 1.0)) - 2.0 * cross / (tf * rf));
                }
                total / (n - 3.0)
            })
            .collect()
    }

    #[test]
    fn matches_naive_small() {
        let data = ObservationMatrix::new(2, 5, pseudo(10, 3)).unwrap();
        let fast = dette_d(&data).unwrap();
        for (a, b) in fast.entries.iter().zip(naive_d(&data)) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn identical_columns_match_naive() {
        let cols = vec![vec![1.0, -2.0, 0.5]; 7];
        let data = ObservationMatrix::from_columns(&cols).unwrap();
        let fast = dette_d(&data).unwrap();
        let slow = naive_d(&data);
        assert_eq!(fast.entries.len(), 6);
        for (a, b) in fast.entries.iter().zip(slow) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn curve_matches_quadruple_sum() {
        let (d, len) = (2, 8);
        let y = pseudo(d * len, 21);
        let col = |t: usize| &y[t * d..(t + 1) * d];
        let curve = dette_curve(&y, d, len).unwrap();
        let mut oracle = Vec::new();
        for t in 2..=len - 2 {
            let mut s = 0.0;
            for i in 0..t {
                for ss in 0..t {
                    if i == ss {
                        continue;
                    }
                    for j in t..len {
                        for l in t..len {
                            if j == l {
                                continue;
                            }
                            s += (0..d)
                                .map(|c| (col(i)[c] - col(j)[c]) * (col(ss)[c] - col(l)[c]))
                                .sum::<f64>();
                        }
                    }
                }
            }
            oracle.push(s / (len as f64).powi(4));
        }
        for (a, b) in curve.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-10);
        }
        assert_eq!(argmax_first(&curve), argmax_first(&oracle));
    }

    #[test]
    fn noiseless_single_entry() {
        // variance of variable 0 jumps at t0; only that vech entry survives
        let (len, t0) = (40, 14);
        let cols: Vec<Vec<f64>> = (0..len)
            .map(|t| {
                let s = if t % 2 == 0 { 1.0 } else { -1.0 };
                vec![if t < t0 { s } else { 3.0 * s }, 0.5 * s]
            })
            .collect();
        let data = ObservationMatrix::from_columns(&cols).unwrap();
        let d = dette_d(&data).unwrap();
        let tau = d.entries[1].max(d.entries[2]);
        let rep = dette_estimate(&data, tau).unwrap();
        assert_eq!(rep.support_diagonal, vec![0]);
        assert_eq!(rep.t_hat, t0);
    }

    #[test]
    fn empty_support() {
        let data = ObservationMatrix::new(2, 9, pseudo(18, 5)).unwrap();
        assert_eq!(dette_estimate(&data, f64::MAX), Err(CorrError::EmptySupport));
    }
}
