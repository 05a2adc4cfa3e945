// SPDX-License-Identifier: MIT OR Apache-2.0

//! Segment correlations, the split statistic `v_t` and its weighted
//! aggregate `w`.
//!
//! Segment "correlations" are products of globally standardized data with
//! divisors `t` and `T - t`; there is no per-segment re-centering.

use rayon::prelude::*;

use crate::error::{CorrError, Result};
use crate::halfvec::{pair_count, pairs, HalfVector};
use crate::series::StandardizedSeries;

/// Series longer than this use compensated summation for the running sums.
pub const KAHAN_THRESHOLD: usize = 10_000;

/// Minimum series length for which `w` is defined.
pub const MIN_LEN_W: usize = 5;

/// Left (`1..=t`) and right (`t+1..=T`) segment correlations for one split.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentCorrelations {
    pub left: HalfVector,
    pub right: HalfVector,
    pub split: usize,
}

/// Segment correlations at split `t` (left segment holds the first `t`
/// observations), `1 <= t <= T - 1`.
pub fn segment_correlations(x: &StandardizedSeries, t: usize) -> Result<SegmentCorrelations> {
    let len = x.len();
    if t < 1 || t + 1 > len {
        return Err(CorrError::SplitOutOfRange {
            t,
            min: 1,
            max: len.saturating_sub(1),
        });
    }
    let p = x.p();
    let mut left = Vec::with_capacity(pair_count(p));
    let mut right = Vec::with_capacity(pair_count(p));
    for (i, j) in pairs(p) {
        let (ri, rj) = (x.row(i), x.row(j));
        let l: f64 = ri[..t].iter().zip(&rj[..t]).map(|(a, b)| a * b).sum();
        let r: f64 = ri[t..].iter().zip(&rj[t..]).map(|(a, b)| a * b).sum();
        left.push(l / t as f64);
        right.push(r / (len - t) as f64);
    }
    Ok(SegmentCorrelations {
        left: HalfVector::new(p, left)?,
        right: HalfVector::new(p, right)?,
        split: t,
    })
}

/// Squared differences of left and right segment correlations at split `t`,
/// `2 <= t <= T - 2`.
///
/// Computed from the prefix sum of `vecho(x_k x_k')` up to `t` and the full
/// sum, then squared entrywise.
pub fn compute_vt(x: &StandardizedSeries, t: usize) -> Result<HalfVector> {
    let len = x.len();
    if len < 4 || t < 2 || t > len - 2 {
        return Err(CorrError::SplitOutOfRange {
            t,
            min: 2,
            max: len.saturating_sub(2),
        });
    }
    let p = x.p();
    let (a, b) = (1.0 / t as f64, 1.0 / (len - t) as f64);
    let entries = pairs(p)
        .map(|(i, j)| {
            let (ri, rj) = (x.row(i), x.row(j));
            let mut prefix = 0.0;
            let mut total = 0.0;
            for (k, (u, v)) in ri.iter().zip(rj).enumerate() {
                let prod = u * v;
                if k < t {
                    prefix += prod;
                }
                total += prod;
            }
            let d = prefix * a - (total - prefix) * b;
            d * d
        })
        .collect();
    HalfVector::new(p, entries)
}

/// Per-split coefficients: weight `t(T-t)/T/(T-3)`, `1/t`, `1/(T-t)`.
fn split_coefficients(len: usize) -> Vec<(f64, f64, f64)> {
    let n = len as f64;
    let norm = 1.0 / (n - 3.0);
    (2..=len - 2)
        .map(|t| {
            let tf = t as f64;
            (tf * (n - tf) / n * norm, 1.0 / tf, 1.0 / (n - tf))
        })
        .collect()
}

/// Weighted aggregate `w = (1/(T-3)) Σ_{t=2}^{T-2} t(T-t)/T · v_t`.
///
/// One pass per variable over the time-major data; cost `O(T p²)`. Pairs are
/// independent, so the parallel split over the first index is bit-stable.
pub fn compute_w(x: &StandardizedSeries) -> Result<HalfVector> {
    let len = x.len();
    if len < MIN_LEN_W {
        return Err(CorrError::SeriesTooShort {
            needed: MIN_LEN_W,
            got: len,
        });
    }
    let p = x.p();
    let data = x.time_major();
    let coef = split_coefficients(len);
    let compensated = len > KAHAN_THRESHOLD;

    let mut out = vec![0.0; pair_count(p)];
    let mut blocks: Vec<(usize, &mut [f64])> = Vec::with_capacity(p);
    let mut rest = out.as_mut_slice();
    for i in 0..p.saturating_sub(1) {
        let (head, tail) = rest.split_at_mut(p - i - 1);
        blocks.push((i, head));
        rest = tail;
    }
    blocks.into_par_iter().for_each(|(i, block)| {
        if compensated {
            w_block_compensated(&data, p, len, i, &coef, block);
        } else {
            w_block(&data, p, len, i, &coef, block);
        }
    });
    HalfVector::new(p, out)
}

fn w_block(data: &[f64], p: usize, len: usize, i: usize, coef: &[(f64, f64, f64)], out: &mut [f64]) {
    let m = out.len();
    let mut total = vec![0.0; m];
    for t in 0..len {
        let row = &data[t * p..(t + 1) * p];
        let xi = row[i];
        for (s, &xj) in total.iter_mut().zip(&row[i + 1..]) {
            *s += xi * xj;
        }
    }
    let mut run = vec![0.0; m];
    // after absorbing observation k (0-based), the left segment has k + 1 points
    for k in 0..len - 2 {
        let row = &data[k * p..(k + 1) * p];
        let xi = row[i];
        for (s, &xj) in run.iter_mut().zip(&row[i + 1..]) {
            *s += xi * xj;
        }
        if k >= 1 {
            let (c, a, b) = coef[k - 1];
            for ((acc, &s), &tot) in out.iter_mut().zip(&run).zip(&total) {
                let d = s * a - (tot - s) * b;
                *acc += c * d * d;
            }
        }
    }
}

#[inline]
fn kahan_add(sum: &mut f64, comp: &mut f64, value: f64) {
    let y = value - *comp;
    let t = *sum + y;
    *comp = (t - *sum) - y;
    *sum = t;
}

fn w_block_compensated(
    data: &[f64],
    p: usize,
    len: usize,
    i: usize,
    coef: &[(f64, f64, f64)],
    out: &mut [f64],
) {
    let m = out.len();
    let mut total = vec![0.0; m];
    let mut total_c = vec![0.0; m];
    for t in 0..len {
        let row = &data[t * p..(t + 1) * p];
        let xi = row[i];
        for k in 0..m {
            kahan_add(&mut total[k], &mut total_c[k], xi * row[i + 1 + k]);
        }
    }
    let mut run = vec![0.0; m];
    let mut run_c = vec![0.0; m];
    let mut acc_c = vec![0.0; m];
    for k in 0..len - 2 {
        let row = &data[k * p..(k + 1) * p];
        let xi = row[i];
        for q in 0..m {
            kahan_add(&mut run[q], &mut run_c[q], xi * row[i + 1 + q]);
        }
        if k >= 1 {
            let (c, a, b) = coef[k - 1];
            for q in 0..m {
                let d = run[q] * a - (total[q] - run[q]) * b;
                kahan_add(&mut out[q], &mut acc_c[q], c * d * d);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{standardize, ObservationMatrix};

    fn pseudo(n: usize, mut state: u64) -> Vec<f64> {
        (0..n)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            })
            .collect()
    }

    #[test]
    fn identical_segments_give_zero() {
        // columns 1..2 and 3..4 hold the same multiset
        let rows = vec![vec![1.0, 2.0, 1.0, 2.0], vec![3.0, -1.0, 3.0, -1.0]];
        let x = standardize(&ObservationMatrix::from_rows(&rows).unwrap()).unwrap();
        let v = compute_vt(&x, 2).unwrap();
        assert!(v.entries().iter().all(|e| e.abs() < 1e-24));
    }

    #[test]
    fn hand_computed_p2_t4() {
        let c = (3.0f64 / 4.0).sqrt();
        let rows = vec![
            vec![c, -c, c, -c],
            vec![c, -c, -c, c],
        ];
        let x = standardize(&ObservationMatrix::from_rows(&rows).unwrap()).unwrap();
        let r1 = x.row(0);
        let r2 = x.row(1);
        let left = (r1[0] * r2[0] + r1[1] * r2[1]) / 2.0;
        let right = (r1[2] * r2[2] + r1[3] * r2[3]) / 2.0;
        let v = compute_vt(&x, 2).unwrap();
        assert!((v.entries()[0] - (left - right).powi(2)).abs() < 1e-14);
        // products are +c² on the left, -c² on the right
        assert!((v.entries()[0] - 4.0 * c.powi(4)).abs() < 1e-12);
    }

    #[test]
    fn vt_matches_segment_expansion() {
        let (p, len) = (5, 13);
        let data = ObservationMatrix::new(p, len, pseudo(p * len, 9)).unwrap();
        let x = standardize(&data).unwrap();
        for t in 2..=len - 2 {
            let seg = segment_correlations(&x, t).unwrap();
            let v = compute_vt(&x, t).unwrap();
            for (k, &got) in v.entries().iter().enumerate() {
                let (l, r) = (seg.left.entries()[k], seg.right.entries()[k]);
                assert!((got - (l * l - 2.0 * l * r + r * r)).abs() < 1e-12);
                assert!(got >= 0.0);
            }
        }
    }

    #[test]
    fn split_range_checked() {
        let data = ObservationMatrix::new(2, 6, pseudo(12, 1)).unwrap();
        let x = standardize(&data).unwrap();
        assert!(matches!(compute_vt(&x, 1), Err(CorrError::SplitOutOfRange { .. })));
        assert!(matches!(compute_vt(&x, 5), Err(CorrError::SplitOutOfRange { .. })));
        assert!(compute_vt(&x, 4).is_ok());
        assert!(matches!(segment_correlations(&x, 6), Err(CorrError::SplitOutOfRange { .. })));
    }

    #[test]
    fn too_short_for_w() {
        let data = ObservationMatrix::new(2, 4, pseudo(8, 3)).unwrap();
        let x = standardize(&data).unwrap();
        assert_eq!(
            compute_w(&x),
            Err(CorrError::SeriesTooShort { needed: 5, got: 4 })
        );
    }

    #[test]
    fn constant_vt_gives_weight_sum() {
        // v_t is not a free input, so check the identity on the weights
        // directly: w of a series whose v_t is identical for every t.
        let len = 9usize;
        let n = len as f64;
        let weight_sum: f64 = (2..=len - 2).map(|t| t as f64 * (n - t as f64) / n).sum::<f64>() / (n - 3.0);
        let coef = split_coefficients(len);
        let sum: f64 = coef.iter().map(|c| c.0).sum();
        assert!((sum - weight_sum).abs() < 1e-14);
    }

    #[test]
    fn compensated_path_matches_plain() {
        let (p, len) = (3, 40);
        let data = ObservationMatrix::new(p, len, pseudo(p * len, 77)).unwrap();
        let x = standardize(&data).unwrap();
        let tm = x.time_major();
        let coef = split_coefficients(len);
        for i in 0..p - 1 {
            let mut a = vec![0.0; p - i - 1];
            let mut b = vec![0.0; p - i - 1];
            w_block(&tm, p, len, i, &coef, &mut a);
            w_block_compensated(&tm, p, len, i, &coef, &mut b);
            for (u, v) in a.iter().zip(&b) {
                assert!((u - v).abs() < 1e-12);
            }
        }
    }
}
