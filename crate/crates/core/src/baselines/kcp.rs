// SPDX-License-Identifier: MIT OR Apache-2.0

//! Gaussian-kernel single change point on raw observations, with the
//! median pairwise distance as bandwidth.

use crate::error::{CorrError, Result};
use crate::estimate::{argmin_first, EstimationReport, Method, SCAN_START};
use crate::halfvec::SupportIndexSet;
use crate::series::ObservationMatrix;

/// Gram matrix `g(y_a, y_b) = exp(-‖y_a - y_b‖² / (2 h²))` and its bandwidth.
#[derive(Clone, Debug, PartialEq)]
pub struct KcpState {
    pub bandwidth: f64,
    len: usize,
    gram: Vec<f64>,
}

impl KcpState {
    pub fn new(data: &ObservationMatrix) -> Result<Self> {
        let len = data.len();
        if len < 4 {
            return Err(CorrError::SeriesTooShort { needed: 4, got: len });
        }
        let cols = data.columns();
        let mut sq = vec![0.0; len * len];
        let mut dists = Vec::with_capacity(len * (len - 1) / 2);
        for a in 0..len {
            for b in a + 1..len {
                let d2: f64 = cols[a]
                    .iter()
                    .zip(&cols[b])
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum();
                sq[a * len + b] = d2;
                sq[b * len + a] = d2;
                dists.push(d2.sqrt());
            }
        }
        let bandwidth = median(&mut dists);
        if !(bandwidth > 0.0) {
            return Err(CorrError::ZeroBandwidth);
        }
        let denom = 2.0 * bandwidth * bandwidth;
        let gram = sq.into_iter().map(|d2| (-d2 / denom).exp()).collect();
        Ok(Self { bandwidth, len, gram })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn kernel(&self, a: usize, b: usize) -> f64 {
        self.gram[a * self.len + b]
    }

    /// `(v1 + v2) / T` for `t = 2..=T-2`, where
    /// `v1 = (t-1) - Σ_{a,b=2..t} g / (t-1)` and
    /// `v2 = (T-t) - Σ_{a,b=t+1..T} g / (T-t)` (1-based indices).
    pub fn objective(&self) -> Vec<f64> {
        let len = self.len;
        // left[t]: kernel block over 0-based 1..t
        let mut left = vec![0.0; len];
        for t in 2..len {
            let new = t - 1;
            let cross: f64 = (1..new).map(|a| self.kernel(a, new)).sum();
            left[t] = left[t - 1] + 2.0 * cross + self.kernel(new, new);
        }
        // right[t]: kernel block over 0-based t..len
        let mut right = vec![0.0; len + 1];
        for t in (0..len).rev() {
            let cross: f64 = (t + 1..len).map(|b| self.kernel(t, b)).sum();
            right[t] = right[t + 1] + 2.0 * cross + self.kernel(t, t);
        }
        let n = len as f64;
        (SCAN_START..=len - 2)
            .map(|t| {
                let (m1, m2) = ((t - 1) as f64, (len - t) as f64);
                let v1 = m1 - left[t] / m1;
                let v2 = m2 - right[t] / m2;
                (v1 + v2) / n
            })
            .collect()
    }
}

/// Median of the values; the mean of the two middle ones for an even count.
pub fn median(values: &mut [f64]) -> f64 {
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

pub fn kcp_estimate(data: &ObservationMatrix) -> Result<EstimationReport> {
    let state = KcpState::new(data)?;
    let curve = state.objective();
    let t_hat = argmin_first(&curve).expect("nonempty scan") + SCAN_START;
    Ok(EstimationReport::from_curve(
        Method::Kcp,
        curve,
        t_hat,
        data.len(),
        SupportIndexSet::empty(data.p()),
        None,
    ))
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

    #[test]
    fn median_conventions() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn objective_matches_direct_sums() {
        let data = ObservationMatrix::new(3, 10, pseudo(30, 2)).unwrap();
        let st = KcpState::new(&data).unwrap();
        let curve = st.objective();
        let len = 10;
        for t in 2..=len - 2 {
            let mut bl = 0.0;
            for a in 1..t {
                for b in 1..t {
                    bl += st.kernel(a, b);
                }
            }
            let mut br = 0.0;
            for a in t..len {
                for b in t..len {
                    br += st.kernel(a, b);
                }
            }
            let (m1, m2) = ((t - 1) as f64, (len - t) as f64);
            let want = (m1 - bl / m1 + m2 - br / m2) / len as f64;
            assert!((curve[t - 2] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_series_has_zero_bandwidth() {
        let data = ObservationMatrix::new(2, 8, vec![1.0; 16]).unwrap();
        assert_eq!(KcpState::new(&data), Err(CorrError::ZeroBandwidth));
    }

    #[test]
    fn mean_shift_is_found() {
        let len = 60;
        let noise = pseudo(2 * len, 13);
        let vals: Vec<f64> = (0..2 * len)
            .map(|k| noise[k] * 0.3 + if k % len >= 37 { 4.0 } else { 0.0 })
            .collect();
        let data = ObservationMatrix::new(2, len, vals).unwrap();
        assert_eq!(kcp_estimate(&data).unwrap().t_hat, 37);
    }

    #[test]
    fn signed_permutation_is_exact() {
        let data = ObservationMatrix::new(3, 15, pseudo(45, 6)).unwrap();
        let rotated = ObservationMatrix::from_rows(&[
            data.row(2).iter().map(|v| -v).collect(),
            data.row(0).to_vec(),
            data.row(1).iter().map(|v| -v).collect(),
        ])
        .unwrap();
        let a = kcp_estimate(&data).unwrap();
        let b = kcp_estimate(&rotated).unwrap();
        assert_eq!(a.t_hat, b.t_hat);
        assert_eq!(a.beta_hat.to_bits(), b.beta_hat.to_bits());
    }
}
