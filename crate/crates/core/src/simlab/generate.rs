// SPDX-License-Identifier: MIT OR Apache-2.0

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution as _, StandardNormal};

use super::scenario::{Distribution, SimScenario, VarianceModel};
use crate::error::{CorrError, Result};
use crate::seed::substream;
use crate::series::ObservationMatrix;

/// Steps discarded before recording a VAR(1) path.
pub const VAR_BURN_IN: usize = 200;

const T5_DF: f64 = 5.0;

/// Symmetric square root `V diag(sqrt λ) V'` of a correlation matrix given
/// column-major. Fails for clearly indefinite targets; round-off negatives
/// are set to zero.
pub fn symmetric_sqrt(r: &[f64], p: usize) -> Result<DMatrix<f64>> {
    if r.len() != p * p {
        return Err(CorrError::InvalidShape(format!("expected {} entries, got {}", p * p, r.len())));
    }
    let m = DMatrix::from_column_slice(p, p, r);
    if (0..p).any(|i| (0..i).any(|j| m[(i, j)] != m[(j, i)])) {
        return Err(CorrError::InvalidScenario("correlation target is not symmetric".into()));
    }
    let eig = SymmetricEigen::new(m);
    let top = eig.eigenvalues.iter().copied().fold(1.0, f64::max);
    let low = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if low < -1e-10 * top {
        return Err(CorrError::InvalidScenario(format!(
            "correlation target is not positive semidefinite (smallest eigenvalue {low:.3e})"
        )));
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&roots) * v.transpose())
}

fn is_identity(r: &[f64], p: usize) -> bool {
    (0..p).all(|j| (0..p).all(|i| r[j * p + i] == if i == j { 1.0 } else { 0.0 }))
}

/// Generator for one scenario with the square roots precomputed.
#[derive(Clone, Debug)]
pub struct Sampler {
    scenario: SimScenario,
    /// `None` for identity segments.
    roots: Vec<Option<DMatrix<f64>>>,
}

impl Sampler {
    pub fn new(scenario: &SimScenario) -> Result<Self> {
        scenario.validate()?;
        let p = scenario.p;
        let roots = scenario
            .case
            .correlations(p)
            .iter()
            .map(|r| {
                if is_identity(r, p) {
                    Ok(None)
                } else {
                    symmetric_sqrt(r, p).map(Some)
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            scenario: scenario.clone(),
            roots,
        })
    }

    pub fn scenario(&self) -> &SimScenario {
        &self.scenario
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, cols: usize) -> DMatrix<f64> {
        let p = self.scenario.p;
        match self.scenario.distribution {
            Distribution::Gaussian => DMatrix::from_fn(p, cols, |_, _| rng.sample(StandardNormal)),
            Distribution::StudentT => {
                // multivariate t: one chi-square mixing draw per time point,
                // shared by all variables, rescaled to unit variance
                let mut z = DMatrix::from_fn(p, cols, |_, _| rng.sample(StandardNormal));
                let chi = ChiSquared::new(T5_DF).expect("valid degrees of freedom");
                for t in 0..cols {
                    let w: f64 = chi.sample(rng);
                    let scale = ((T5_DF - 2.0) / w).sqrt();
                    z.column_mut(t).iter_mut().for_each(|v| *v *= scale);
                }
                z
            }
        }
    }

    /// Unit-variance innovations with the segment correlations applied in
    /// place; column `t` is time `t`.
    fn correlate(&self, mut eta: DMatrix<f64>, bounds: &[usize]) -> DMatrix<f64> {
        for (seg, root) in self.roots.iter().enumerate() {
            let (start, end) = (bounds[seg], bounds[seg + 1]);
            if let (Some(root), true) = (root, end > start) {
                let block = eta.columns(start, end - start).into_owned();
                eta.columns_mut(start, end - start).copy_from(&(root * block));
            }
        }
        eta
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ObservationMatrix {
        let sc = &self.scenario;
        let (p, len) = (sc.p, sc.len);
        let scales: Option<Vec<f64>> = match sc.variance {
            VarianceModel::UniformHetero { low, high } | VarianceModel::Var1Hetero { low, high, .. } => {
                Some((0..p).map(|_| rng.random_range(low..=high)).collect())
            }
            _ => None,
        };
        let burn = match sc.variance {
            VarianceModel::Var1 { .. } | VarianceModel::Var1Hetero { .. } => {
                let e = self.draw(rng, VAR_BURN_IN);
                Some(self.correlate(e, &[0, VAR_BURN_IN, VAR_BURN_IN, VAR_BURN_IN]))
            }
            _ => None,
        };
        let mut e = self.correlate(self.draw(rng, len), &sc.boundaries());
        if let Some(s) = &scales {
            for t in 0..len {
                for i in 0..p {
                    e[(i, t)] *= s[i];
                }
            }
        }

        let mut y = DMatrix::zeros(p, len);
        match sc.variance {
            VarianceModel::Unit | VarianceModel::UniformHetero { .. } => y = e,
            VarianceModel::Var1 { psi } | VarianceModel::Var1Hetero { psi, .. } => {
                let mut burn = burn.expect("burn-in drawn");
                if let Some(s) = &scales {
                    for b in 0..VAR_BURN_IN {
                        for i in 0..p {
                            burn[(i, b)] *= s[i];
                        }
                    }
                }
                let mut state = vec![0.0; p];
                for b in 0..VAR_BURN_IN {
                    for i in 0..p {
                        state[i] = psi * state[i] + burn[(i, b)];
                    }
                }
                for t in 0..len {
                    for i in 0..p {
                        state[i] = psi * state[i] + e[(i, t)];
                        y[(i, t)] = state[i];
                    }
                }
            }
            VarianceModel::Garch { alpha1, alpha2 } => {
                let omega = 1.0 - alpha1 - alpha2;
                for i in 0..p {
                    let (mut sigma2, mut prev) = (1.0, 0.0);
                    for t in 0..len {
                        sigma2 = omega + alpha1 * prev * prev + alpha2 * sigma2;
                        let a = sigma2.sqrt() * e[(i, t)];
                        y[(i, t)] = a;
                        prev = a;
                    }
                }
            }
            VarianceModel::UnconditionalShift { sigma0, delta } => {
                for t in 0..len {
                    let jump = if 2 * (t + 1) > len { 1.0 + delta } else { 1.0 };
                    for i in 0..p {
                        y[(i, t)] = sigma0 * jump * e[(i, t)];
                    }
                }
            }
        }
        let mut values = Vec::with_capacity(p * len);
        for i in 0..p {
            values.extend(y.row(i).iter());
        }
        ObservationMatrix::new(p, len, values).expect("finite draws")
    }
}

/// One draw of the scenario from substream 0 of its seed.
pub fn generate(scenario: &SimScenario) -> Result<ObservationMatrix> {
    let sampler = Sampler::new(scenario)?;
    Ok(sampler.sample(&mut substream(scenario.seed, 0)))
}

#[cfg(test)]
mod tests {
    use super::super::scenario::CaseId;
    use super::*;

    fn corr(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
        cov / (va * vb).sqrt()
    }

    #[test]
    fn sqrt_squares_back() {
        let r = CaseId::Case8.correlations(9)[1].clone();
        let s = symmetric_sqrt(&r, 9).unwrap();
        let back = &s * &s;
        for j in 0..9 {
            for i in 0..9 {
                assert!((back[(i, j)] - r[j * 9 + i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn indefinite_target_rejected() {
        let r = vec![1.0, 0.9, -0.9, 0.9, 1.0, 0.9, -0.9, 0.9, 1.0];
        assert!(matches!(symmetric_sqrt(&r, 3), Err(CorrError::InvalidScenario(_))));
    }

    #[test]
    fn case9_is_always_definite() {
        for p in [2, 3, 10, 57] {
            for r in CaseId::Case9.correlations(p) {
                symmetric_sqrt(&r, p).unwrap();
            }
        }
    }

    #[test]
    fn post_break_correlation() {
        let sc = SimScenario::new(CaseId::Case6, 2, 20_000).with_seed(5);
        let y = generate(&sc).unwrap();
        let t0 = sc.change_point();
        let pre = corr(&y.row(0)[..t0], &y.row(1)[..t0]);
        let post = corr(&y.row(0)[t0..], &y.row(1)[t0..]);
        assert!(pre.abs() < 0.05, "{pre}");
        assert!((post - 0.5).abs() < 0.05, "{post}");
    }

    #[test]
    fn student_t_unit_variance() {
        let sc = SimScenario::new(CaseId::H0, 2, 40_000)
            .with_distribution(Distribution::StudentT)
            .with_seed(8);
        let y = generate(&sc).unwrap();
        let var = y.row(0).iter().map(|v| v * v).sum::<f64>() / 40_000.0;
        assert!((var - 1.0).abs() < 0.06, "{var}");
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let sc = SimScenario::new(CaseId::Case7, 6, 50).with_variance(VarianceModel::GARCH);
        assert_eq!(generate(&sc).unwrap(), generate(&sc).unwrap());
        assert_ne!(generate(&sc).unwrap(), generate(&sc.clone().with_seed(1)).unwrap());
    }

    #[test]
    fn unconditional_shift_doubles_scale() {
        let sc = SimScenario::new(CaseId::H0, 3, 20_000)
            .with_variance(VarianceModel::SHIFT)
            .with_seed(2);
        let y = generate(&sc).unwrap();
        let half = 10_000;
        let sd = |s: &[f64]| (s.iter().map(|v| v * v).sum::<f64>() / s.len() as f64).sqrt();
        let ratio = sd(&y.row(1)[half..]) / sd(&y.row(1)[..half]);
        assert!((ratio - 2.0).abs() < 0.06, "{ratio}");
    }

    #[test]
    fn var1_stationary_variance() {
        let sc = SimScenario::new(CaseId::H0, 2, 20_000)
            .with_variance(VarianceModel::SERIAL)
            .with_seed(4);
        let y = generate(&sc).unwrap();
        let var = y.row(0).iter().map(|v| v * v).sum::<f64>() / 20_000.0;
        // 1 / (1 - 0.64)
        assert!((var - 2.7778).abs() < 0.25, "{var}");
    }
}
