// SPDX-License-Identifier: MIT OR Apache-2.0

//! Closed-form expectations of `v_t(i, j)` for independent, unit-variance
//! data with one correlation break at `t0`, before and after signflipping.
//! `beta_k` is the fourth moment `E(x_i x_j)²` in segment `k`.

use super::scenario::{Distribution, SimScenario, VarianceModel};
use crate::error::{CorrError, Result};

/// `E(x_i x_j)²` for a standard bivariate normal with correlation `rho`.
pub fn gaussian_fourth_moment(rho: f64) -> f64 {
    1.0 + 2.0 * rho * rho
}

/// Moment inputs for one pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairMoments {
    pub rho1: f64,
    pub rho2: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl PairMoments {
    pub fn gaussian(rho1: f64, rho2: f64) -> Self {
        Self {
            rho1,
            rho2,
            beta1: gaussian_fourth_moment(rho1),
            beta2: gaussian_fourth_moment(rho2),
        }
    }
}

/// `E v_t(i, j)` for split `t`, break `t0` and length `len`.
pub fn expected_v(m: PairMoments, t: usize, t0: usize, len: usize) -> f64 {
    let (t, t0, n) = (t as f64, t0 as f64, len as f64);
    let gap = (m.rho1 - m.rho2).powi(2);
    let (v1, v2) = (m.beta1 - m.rho1 * m.rho1, m.beta2 - m.rho2 * m.rho2);
    if t == t0 {
        gap + v1 / t0 + v2 / (n - t0)
    } else if t < t0 {
        let r = n - t;
        (n - t0).powi(2) / (r * r) * gap + (1.0 / t + (t0 - t) / (r * r)) * v1 + (n - t0) / (r * r) * v2
    } else {
        t0 * t0 / (t * t) * gap + t0 / (t * t) * v1 + ((t - t0) / (t * t) + 1.0 / (n - t)) * v2
    }
}

/// `E ṽ_t(i, j)` after independent Rademacher flips of every entry.
pub fn expected_v_flipped(m: PairMoments, t: usize, t0: usize, len: usize) -> f64 {
    let (t, t0, n) = (t as f64, t0 as f64, len as f64);
    if t == t0 {
        m.beta1 / t0 + m.beta2 / (n - t0)
    } else if t < t0 {
        let r = n - t;
        (1.0 / t + (t0 - t) / (r * r)) * m.beta1 + (n - t0) / (r * r) * m.beta2
    } else {
        t0 / (t * t) * m.beta1 + ((t - t0) / (t * t) + 1.0 / (n - t)) * m.beta2
    }
}

/// The weight `t(T - t)/T` used when summing the `v_t` into `w`.
pub fn split_weight(t: usize, len: usize) -> f64 {
    (t * (len - t)) as f64 / len as f64
}

fn scenario_moments(scenario: &SimScenario, pair: (usize, usize)) -> Result<(PairMoments, usize)> {
    scenario.validate()?;
    if scenario.distribution != Distribution::Gaussian {
        return Err(CorrError::UnsupportedDistribution(format!(
            "closed-form moments need Gaussian data, got {}",
            scenario.distribution.name()
        )));
    }
    if scenario.variance != VarianceModel::Unit {
        return Err(CorrError::InvalidScenario(format!(
            "closed-form moments need independent unit-variance data, got {}",
            scenario.variance.name()
        )));
    }
    let p = scenario.p;
    let (i, j) = pair;
    if i >= j || j >= p {
        return Err(CorrError::InvalidConfig(format!("pair ({i}, {j}) is not an off-diagonal pair for p={p}")));
    }
    let r = scenario.case.correlations(p);
    if r.len() != 2 {
        return Err(CorrError::InvalidScenario("closed-form moments need a single break".into()));
    }
    let moments = PairMoments::gaussian(r[0][j * p + i], r[1][j * p + i]);
    Ok((moments, scenario.change_point()))
}

fn check_split(t: usize, len: usize) -> Result<()> {
    if t < 1 || t + 1 > len {
        return Err(CorrError::SplitOutOfRange { t, min: 1, max: len - 1 });
    }
    Ok(())
}

/// `E v_t(i, j)` for a Gaussian unit-variance scenario (0-based pair).
pub fn expected_v_oracle(scenario: &SimScenario, t: usize, pair: (usize, usize)) -> Result<f64> {
    let (m, t0) = scenario_moments(scenario, pair)?;
    check_split(t, scenario.len)?;
    Ok(expected_v(m, t, t0, scenario.len))
}

/// `E ṽ_t(i, j)` for signflipped Gaussian unit-variance data.
pub fn expected_v_flipped_oracle(scenario: &SimScenario, t: usize, pair: (usize, usize)) -> Result<f64> {
    let (m, t0) = scenario_moments(scenario, pair)?;
    check_split(t, scenario.len)?;
    Ok(expected_v_flipped(m, t, t0, scenario.len))
}
