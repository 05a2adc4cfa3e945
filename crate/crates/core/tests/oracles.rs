// SPDX-License-Identifier: MIT OR Apache-2.0

//! Fast paths checked against direct, unoptimized evaluations of the same
//! sums on random small inputs.

use corrcp::baselines::{dette_curve, dette_d, vech_entries, KcpState};
use corrcp::estimate::{argmax_first, cusum_from_columns};
use corrcp::signflip::max_and_quantile;
use corrcp::{compute_vt, compute_w, standardize, vecho, HalfVector, ObservationMatrix, StandardizedSeries};
use proptest::prelude::*;

fn matrix(max_p: usize, min_len: usize, max_len: usize) -> impl Strategy<Value = ObservationMatrix> {
    (2..=max_p, min_len..=max_len).prop_flat_map(|(p, len)| {
        prop::collection::vec(-3.0f64..3.0, p * len)
            .prop_map(move |v| ObservationMatrix::new(p, len, v).unwrap())
    })
}

fn nonconstant(m: &ObservationMatrix) -> bool {
    (0..m.p()).all(|i| {
        let r = m.row(i);
        let mean = r.iter().sum::<f64>() / r.len() as f64;
        r.iter().map(|v| (v - mean).powi(2)).sum::<f64>() > 1e-6
    })
}

/// Two-pass standardization, then every segment mean recomputed from scratch.
fn naive_w(m: &ObservationMatrix) -> Vec<f64> {
    let (p, len) = (m.p(), m.len());
    let n = len as f64;
    let x: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            let r = m.row(i);
            let mean = r.iter().sum::<f64>() / n;
            let sd = (r.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            r.iter().map(|v| (v - mean) / sd).collect()
        })
        .collect();
    let mut out = Vec::new();
    for i in 0..p {
        for j in i + 1..p {
            let mut acc = 0.0;
            for t in 2..=len - 2 {
                let left: f64 = (0..t).map(|k| x[i][k] * x[j][k]).sum::<f64>() / t as f64;
                let right: f64 = (t..len).map(|k| x[i][k] * x[j][k]).sum::<f64>() / (len - t) as f64;
                acc += (t * (len - t)) as f64 / n * (left - right).powi(2);
            }
            out.push(acc / (n - 3.0));
        }
    }
    out
}

fn naive_cusum(z: &[f64], d: usize, len: usize) -> Vec<f64> {
    let col = |t: usize| &z[t * d..(t + 1) * d];
    (2..=len - 2)
        .map(|t| {
            let mut s = 0.0;
            for i in 0..t {
                for k in 0..t {
                    for j in t..len {
                        for l in t..len {
                            s += (0..d).map(|c| (col(i)[c] - col(j)[c]) * (col(k)[c] - col(l)[c])).sum::<f64>();
                        }
                    }
                }
            }
            s / (len as f64).powi(4)
        })
        .collect()
}

fn naive_dette(m: &ObservationMatrix) -> Vec<f64> {
    let (p, len) = (m.p(), m.len());
    let n = len as f64;
    let means: Vec<f64> = (0..p).map(|i| m.row(i).iter().sum::<f64>() / n).collect();
    let a = |k: usize, r: usize, c: usize| (m.get(r, k) - means[r]) * (m.get(c, k) - means[c]);
    vech_entries(p)
        .map(|(r, c)| {
            let mut total = 0.0;
            for t in 2..=len - 2 {
                let (tf, rf) = (t as f64, (len - t) as f64);
                let (mut wl, mut wr, mut cross) = (0.0, 0.0, 0.0);
                for i in 0..len {
                    for j in 0..len {
                        let prod = a(i, r, c) * a(j, r, c);
                        match (i < t, j < t) {
                            (true, true) if i != j => wl += prod,
                            (false, false) if i != j => wr += prod,
                            (true, false) => cross += prod,
                            _ => {}
                        }
                    }
                }
                total += tf * rf / n * (wl / (tf * (tf - 1.0)) + wr / (rf * (rf - 1.0)) - 2.0 * cross / (tf * rf));
            }
            total / (n - 3.0)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn cusum_matches_quadruple_sum(
        (d, len, z) in (1usize..=3, 4usize..=10)
            .prop_flat_map(|(d, len)| (Just(d), Just(len), prop::collection::vec(-5.0f64..5.0, d * len)))
    ) {
        let fast = cusum_from_columns(&z, d, len).unwrap();
        let slow = naive_cusum(&z, d, len);
        for (a, b) in fast.iter().zip(&slow) {
            prop_assert!((a - b).abs() <= 1e-10, "{} vs {}", a, b);
        }
    }
}

proptest! {
    #[test]
    fn w_matches_double_loop(m in matrix(5, 5, 12).prop_filter("constant row", nonconstant)) {
        let fast = compute_w(&standardize(&m).unwrap()).unwrap();
        for (a, b) in fast.entries().iter().zip(naive_w(&m)) {
            prop_assert!((a - b).abs() <= 1e-10, "{} vs {}", a, b);
        }
    }

    #[test]
    fn w_is_weighted_sum_of_vt(m in matrix(4, 5, 12).prop_filter("constant row", nonconstant)) {
        let x = standardize(&m).unwrap();
        let len = m.len();
        let w = compute_w(&x).unwrap();
        let mut acc = vec![0.0; w.len()];
        for t in 2..=len - 2 {
            let v = compute_vt(&x, t).unwrap();
            let c = (t * (len - t)) as f64 / len as f64 / (len as f64 - 3.0);
            for (s, e) in acc.iter_mut().zip(v.entries()) {
                *s += c * e;
            }
        }
        for (a, b) in w.entries().iter().zip(&acc) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn dette_d_matches_triple_loop(m in matrix(3, 5, 8)) {
        let fast = dette_d(&m).unwrap();
        for (a, b) in fast.entries.iter().zip(naive_dette(&m)) {
            prop_assert!((a - b).abs() <= 1e-9, "{} vs {}", a, b);
        }
    }

    #[test]
    fn dette_curve_matches_quadruple_sum(
        (d, len, y) in (1usize..=3, 4usize..=8)
            .prop_flat_map(|(d, len)| (Just(d), Just(len), prop::collection::vec(-2.0f64..2.0, d * len)))
    ) {
        let col = |t: usize| &y[t * d..(t + 1) * d];
        let fast = dette_curve(&y, d, len).unwrap();
        for t in 2..=len - 2 {
            let mut s = 0.0;
            for i in 0..t {
                for k in (0..t).filter(|&k| k != i) {
                    for j in t..len {
                        for l in (t..len).filter(|&l| l != j) {
                            s += (0..d).map(|c| (col(i)[c] - col(j)[c]) * (col(k)[c] - col(l)[c])).sum::<f64>();
                        }
                    }
                }
            }
            prop_assert!((fast[t - 2] - s / (len as f64).powi(4)).abs() <= 1e-10);
        }
    }

    #[test]
    fn kernel_matrix_shape(m in matrix(4, 4, 15)) {
        if let Ok(state) = KcpState::new(&m) {
            for a in 0..m.len() {
                prop_assert_eq!(state.kernel(a, a), 1.0);
                for b in 0..m.len() {
                    let g = state.kernel(a, b);
                    prop_assert!(g > 0.0 && g <= 1.0);
                    prop_assert_eq!(g, state.kernel(b, a));
                }
            }
        }
    }

    #[test]
    fn quantile_matches_sort(mut v in prop::collection::vec(-1e3f64..1e3, 1..200), alpha in 0.01f64..=1.0) {
        let mut sorted = v.clone();
        sorted.sort_by(f64::total_cmp);
        let k = ((alpha * v.len() as f64 - 1e-9).ceil().max(1.0) as usize).min(v.len());
        let (max, q) = max_and_quantile(&mut v, alpha);
        prop_assert_eq!(max, *sorted.last().unwrap());
        prop_assert_eq!(q, sorted[k - 1]);
    }

    #[test]
    fn vecho_scatter_gather(p in 2usize..8, seed in any::<u64>()) {
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut sym = vec![0.0; p * p];
        for i in 0..p {
            for j in 0..=i {
                let v = next();
                sym[j * p + i] = v;
                sym[i * p + j] = v;
            }
        }
        let h = vecho(&sym, p).unwrap();
        let back = h.to_symmetric(0.0);
        for i in 0..p {
            for j in 0..p {
                let want = if i == j { 0.0 } else { sym[j * p + i] };
                prop_assert_eq!(back[j * p + i], want);
            }
        }
        prop_assert_eq!(HalfVector::new(p, h.entries().to_vec()).unwrap(), h);
    }
}

#[test]
fn dette_argmax_agrees_with_oracle_on_jump() {
    let (d, len) = (2, 9);
    let y: Vec<f64> = (0..len).flat_map(|t| if t < 4 { [0.1, -0.2] } else { [1.4, 0.9] }).collect();
    let curve = dette_curve(&y, d, len).unwrap();
    assert_eq!(argmax_first(&curve).unwrap() + 2, 4);
}

#[test]
fn assume_standardized_keeps_values() {
    let m = ObservationMatrix::new(2, 6, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 0.5, 0.1, 0.2, 0.3, 0.9, 0.0]).unwrap();
    let x = StandardizedSeries::assume_standardized(&m);
    assert_eq!(x.values(), m.values());
}
