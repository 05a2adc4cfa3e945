// SPDX-License-Identifier: MIT OR Apache-2.0

//! SMOTE augmentation of the right tail and the iterated SMOTE + SPACE
//! estimator for change points close to the end of a series.
//!
//! The minority window is the last `T - floor(gamma T)` columns of the
//! un-augmented series. Synthetic columns `y_t + u (y_t* - y_t)` are appended
//! after the working matrix, so the original prefix keeps its time order.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CorrError, Result};
use crate::estimate::{space_estimate, EstimationReport, Method};
use crate::seed::{derive_seed, substream};
use crate::series::ObservationMatrix;
use crate::signflip::SignflipConfig;

/// Neighbors considered per base sample.
pub const NEIGHBORS: usize = 5;

const SEED_LABEL_ROUND: u64 = 0x736d_6f74_65;

/// How the interpolation weight `u` is drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    Uniform,
    /// Always use this weight; for tests.
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoteConfig {
    pub gamma: f64,
    pub epsilon: f64,
    pub max_iterations: usize,
    pub k: usize,
    pub seed: u64,
    #[serde(default)]
    pub interpolation: Interpolation,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            epsilon: 1e-3,
            max_iterations: 25,
            k: NEIGHBORS,
            seed: 0,
            interpolation: Interpolation::Uniform,
        }
    }
}

impl SmoteConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.9 && self.gamma < 1.0) {
            return Err(CorrError::InvalidConfig(format!(
                "gamma must lie in [0.9, 1), got {}",
                self.gamma
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(CorrError::InvalidConfig("epsilon must be positive".into()));
        }
        if self.k != NEIGHBORS {
            return Err(CorrError::InvalidConfig(format!(
                "neighbor count is fixed at {NEIGHBORS}, got {}",
                self.k
            )));
        }
        if self.max_iterations == 0 {
            return Err(CorrError::InvalidConfig("max_iterations must be positive".into()));
        }
        if let Interpolation::Fixed(u) = self.interpolation {
            if !(0.0..=1.0).contains(&u) {
                return Err(CorrError::InvalidConfig(format!("fixed u must lie in [0, 1], got {u}")));
            }
        }
        Ok(())
    }
}

/// Original columns followed by synthetic ones.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedSeries {
    pub data: ObservationMatrix,
    pub original_len: usize,
    pub synthetic_count: usize,
}

/// First column (0-based) of the minority window, `floor(gamma T)`.
pub fn minority_start(len: usize, gamma: f64) -> usize {
    ((gamma * len as f64 + 1e-9).floor() as usize).min(len)
}

/// Number of synthetic samples per round, `ceil((1 - gamma) T)`.
pub fn synthetic_target(len: usize, gamma: f64) -> usize {
    ((1.0 - gamma) * len as f64 - 1e-9).ceil().max(0.0) as usize
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Up to `k` nearest other members of `window`, nearest first; equal
/// distances go to the lower column index.
fn nearest_neighbors(window: &[Vec<f64>], k: usize) -> Vec<Vec<usize>> {
    (0..window.len())
        .map(|a| {
            let mut cand: Vec<(f64, usize)> = (0..window.len())
                .filter(|&b| b != a)
                .map(|b| (squared_distance(&window[a], &window[b]), b))
                .collect();
            cand.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            cand.into_iter().take(k).map(|(_, b)| b).collect()
        })
        .collect()
}

/// Appends `ceil((1 - gamma) T)` synthetic samples drawn from the minority
/// window, `T` being the length of `data`.
pub fn smote_generate(data: &ObservationMatrix, cfg: &SmoteConfig) -> Result<AugmentedSeries> {
    smote_extend(data, data.len(), cfg)
}

/// Appends `ceil((1 - gamma) T)` synthetic samples to `working`, where the
/// minority window is columns `floor(gamma T)..T` and `T = base_len` is the
/// length of the series before any augmentation. Earlier synthetic columns
/// are kept but never resampled.
pub fn smote_extend(working: &ObservationMatrix, base_len: usize, cfg: &SmoteConfig) -> Result<AugmentedSeries> {
    cfg.validate()?;
    if base_len > working.len() {
        return Err(CorrError::InvalidShape(format!(
            "base length {base_len} exceeds the working length {}",
            working.len()
        )));
    }
    let start = minority_start(base_len, cfg.gamma);
    let window: Vec<Vec<f64>> = (start..base_len).map(|t| working.column(t)).collect();
    if window.len() < 2 {
        return Err(CorrError::MinorityWindowTooSmall(window.len()));
    }
    let neighbors = nearest_neighbors(&window, cfg.k);
    let count = synthetic_target(base_len, cfg.gamma);

    let synthetic: Vec<Vec<f64>> = (0..count)
        .into_par_iter()
        .map(|s| {
            let mut rng = substream(cfg.seed, s as u64);
            let base = rng.random_range(0..window.len());
            let nbrs = &neighbors[base];
            let other = nbrs[rng.random_range(0..nbrs.len())];
            let u = match cfg.interpolation {
                Interpolation::Uniform => rng.random::<f64>(),
                Interpolation::Fixed(u) => u,
            };
            let (y, z) = (&window[base], &window[other]);
            y.iter().zip(z).map(|(a, b)| a + u * (b - a)).collect()
        })
        .collect();

    Ok(AugmentedSeries {
        data: working.append_columns(&synthetic)?,
        original_len: working.len(),
        synthetic_count: count,
    })
}

/// Maps a split found on an inflated series back to the original time
/// frame. Splits beyond the original end are clamped to `T - 1`.
fn original_frame(t_hat: usize, original_len: usize) -> (usize, bool) {
    if t_hat <= original_len - 1 {
        (t_hat, false)
    } else {
        (original_len - 1, true)
    }
}

/// SPACE on the original data, then repeated SMOTE inflation of the working
/// matrix (always sampling the original tail window) and re-estimation until
/// consecutive estimates, in the original frame, differ by at most `epsilon`.
pub fn smote_space(
    data: &ObservationMatrix,
    sf_cfg: &SignflipConfig,
    sm_cfg: &SmoteConfig,
) -> Result<EstimationReport> {
    sm_cfg.validate()?;
    let original_len = data.len();
    let initial = space_estimate(data, sf_cfg)?;
    let mut beta_prev = initial.beta_hat;

    let mut working = data.clone();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let round_cfg = SmoteConfig {
            seed: derive_seed(sm_cfg.seed, SEED_LABEL_ROUND, iterations as u64),
            ..sm_cfg.clone()
        };
        working = smote_extend(&working, original_len, &round_cfg)?.data;
        let inflated = space_estimate(&working, sf_cfg)?;
        let (t_hat, clamped) = original_frame(inflated.t_hat, original_len);
        let beta = t_hat as f64 / original_len as f64;
        let converged = (beta - beta_prev).abs() <= sm_cfg.epsilon;
        if converged || iterations >= sm_cfg.max_iterations {
            return Ok(EstimationReport {
                method: Method::SmoteSpace,
                beta_hat: beta,
                t_hat,
                series_len: original_len,
                boundary: clamped || inflated.boundary,
                curve: inflated.curve,
                support: inflated.support,
                support_diagonal: Vec::new(),
                thresholds: inflated.thresholds,
                smote_iterations: iterations,
                converged,
                surrogate_threshold: false,
            });
        }
        beta_prev = beta;
    }
}
