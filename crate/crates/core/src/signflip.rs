// SPDX-License-Identifier: MIT OR Apache-2.0

//! Thresholds from Rademacher signflip trials.
//!
//! Each trial multiplies every raw entry by an independent ±1, re-standardizes
//! the flipped matrix from scratch and recomputes the aggregate statistic.
//! The detection threshold `tau1` is the largest pooled trial entry; the
//! estimation threshold `tau2` is the lower empirical `alpha`-quantile
//! (order statistic `ceil(alpha * n)`, 1-based) of the same pool.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CorrError, Result};
use crate::halfvec::HalfVector;
use crate::series::{standardize, ObservationMatrix};
use crate::stat::compute_w;

/// Default number of trials for detection.
pub const DETECTION_TRIALS: usize = 30;
/// Default number of trials for estimation.
pub const ESTIMATION_TRIALS: usize = 20;
pub const DEFAULT_ALPHA: f64 = 0.95;
/// Pooled trial entries kept in memory under [`TrialStorage::Auto`].
pub const MAX_RETAINED_ENTRIES: usize = 10_000_000;

/// Where pooled trial entries live while the quantile is taken.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStorage {
    /// In memory up to [`MAX_RETAINED_ENTRIES`], spilled to disk beyond.
    #[default]
    Auto,
    InMemory,
    /// Entries go to a temporary file; the quantile is an exact two-pass
    /// radix selection over it. The trial matrix is not retained.
    Spill,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignflipConfig {
    pub trials: usize,
    pub alpha: f64,
    pub seed: u64,
    #[serde(default)]
    pub storage: TrialStorage,
}

impl SignflipConfig {
    pub fn detection(seed: u64) -> Self {
        Self {
            trials: DETECTION_TRIALS,
            alpha: DEFAULT_ALPHA,
            seed,
            storage: TrialStorage::Auto,
        }
    }

    pub fn estimation(seed: u64) -> Self {
        Self {
            trials: ESTIMATION_TRIALS,
            ..Self::detection(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(CorrError::TrialCountZero);
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(CorrError::InvalidConfig(format!(
                "alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub tau1: f64,
    pub tau2: f64,
    pub trials: usize,
    pub alpha: f64,
    pub seed: u64,
    /// The `q` trial vectors, when retained.
    #[serde(skip)]
    pub trial_matrix: Option<Vec<Vec<f64>>>,
}

/// Signs for trial `trial`: entry `(i, t)` is read from bit `i * T + t` of a
/// ChaCha8 keystream keyed by `seed` on stream `trial`. `true` means `-1`.
pub fn rademacher_signs(seed: u64, trial: usize, p: usize, len: usize) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    let n = p * len;
    let mut signs = Vec::with_capacity(n);
    while signs.len() < n {
        let word = rng.next_u64();
        let take = (n - signs.len()).min(64);
        signs.extend((0..take).map(|b| (word >> b) & 1 == 1));
    }
    signs
}

/// `R_m ∘ Y` for trial `m`.
pub fn flip(data: &ObservationMatrix, trial: usize, seed: u64) -> ObservationMatrix {
    let signs = rademacher_signs(seed, trial, data.p(), data.len());
    let len = data.len();
    data.map_indexed(|i, t, v| if signs[i * len + t] { -v } else { v })
}

/// One signflip trial of the `w` statistic.
pub fn signflip_trial(data: &ObservationMatrix, trial: usize, seed: u64) -> Result<HalfVector> {
    let flipped = flip(data, trial, seed);
    compute_w(&standardize(&flipped)?)
}

/// Thresholds for the `w` statistic.
pub fn compute_thresholds(data: &ObservationMatrix, cfg: &SignflipConfig) -> Result<ThresholdReport> {
    compute_thresholds_with(data, cfg, |flipped| {
        Ok(compute_w(&standardize(flipped)?)?.into_entries())
    })
}

/// Signflip thresholds for an arbitrary entrywise statistic of the raw data.
pub fn compute_thresholds_with<F>(
    data: &ObservationMatrix,
    cfg: &SignflipConfig,
    statistic: F,
) -> Result<ThresholdReport>
where
    F: Fn(&ObservationMatrix) -> Result<Vec<f64>> + Sync,
{
    cfg.validate()?;
    let run = |m: usize| statistic(&flip(data, m, cfg.seed));

    let spill = match cfg.storage {
        TrialStorage::InMemory => false,
        TrialStorage::Spill => true,
        TrialStorage::Auto => {
            let per_trial = data.p() * data.p().saturating_sub(1) / 2;
            per_trial.saturating_mul(cfg.trials) > MAX_RETAINED_ENTRIES
        }
    };

    if !spill {
        let trials: Vec<Vec<f64>> = (0..cfg.trials)
            .into_par_iter()
            .map(run)
            .collect::<Result<_>>()?;
        let mut pooled: Vec<f64> = trials.iter().flatten().copied().collect();
        let (tau1, tau2) = max_and_quantile(&mut pooled, cfg.alpha);
        return Ok(ThresholdReport {
            tau1,
            tau2,
            trials: cfg.trials,
            alpha: cfg.alpha,
            seed: cfg.seed,
            trial_matrix: Some(trials),
        });
    }

    let mut pool = SpillPool::new()?;
    let batch = rayon::current_num_threads().max(1);
    for start in (0..cfg.trials).step_by(batch) {
        let end = (start + batch).min(cfg.trials);
        let results: Vec<Vec<f64>> = (start..end)
            .into_par_iter()
            .map(run)
            .collect::<Result<_>>()?;
        for r in &results {
            pool.push(r)?;
        }
    }
    let (tau1, tau2) = pool.max_and_quantile(cfg.alpha)?;
    Ok(ThresholdReport {
        tau1,
        tau2,
        trials: cfg.trials,
        alpha: cfg.alpha,
        seed: cfg.seed,
        trial_matrix: None,
    })
}

/// 1-based rank of the lower empirical `alpha`-quantile among `n` values.
pub fn quantile_rank(n: usize, alpha: f64) -> usize {
    let k = (alpha * n as f64 - 1e-9).ceil();
    (k.max(1.0) as usize).min(n)
}

/// Maximum and lower `alpha`-quantile; reorders `values`. `(NaN, NaN)` when
/// empty.
pub fn max_and_quantile(values: &mut [f64], alpha: f64) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let k = quantile_rank(values.len(), alpha);
    let (_, q, _) = values.select_nth_unstable_by(k - 1, f64::total_cmp);
    (max, *q)
}

/// Order-preserving map from `f64` to `u64`.
fn order_key(v: f64) -> u64 {
    let bits = v.to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits | (1 << 63)
    }
}

struct SpillPool {
    file: tempfile::NamedTempFile,
    count: usize,
    max: f64,
}

impl SpillPool {
    fn new() -> Result<Self> {
        Ok(Self {
            file: tempfile::NamedTempFile::new()?,
            count: 0,
            max: f64::NEG_INFINITY,
        })
    }

    fn push(&mut self, values: &[f64]) -> Result<()> {
        let mut w = BufWriter::new(self.file.as_file_mut());
        for &v in values {
            w.write_all(&v.to_le_bytes())?;
            self.max = self.max.max(v);
        }
        w.flush()?;
        self.count += values.len();
        Ok(())
    }

    fn scan(&self, mut f: impl FnMut(f64)) -> Result<()> {
        let mut r = BufReader::new(File::open(self.file.path())?);
        let mut buf = [0u8; 8];
        for _ in 0..self.count {
            r.read_exact(&mut buf)?;
            f(f64::from_le_bytes(buf));
        }
        Ok(())
    }

    /// Exact quantile: histogram of the top 16 key bits, then a selection
    /// within the bucket holding the target rank.
    fn max_and_quantile(&self, alpha: f64) -> Result<(f64, f64)> {
        if self.count == 0 {
            return Ok((f64::NAN, f64::NAN));
        }
        let mut hist = vec![0usize; 1 << 16];
        self.scan(|v| hist[(order_key(v) >> 48) as usize] += 1)?;
        let k = quantile_rank(self.count, alpha);
        let mut below = 0;
        let mut bucket = 0;
        for (b, &c) in hist.iter().enumerate() {
            if below + c >= k {
                bucket = b;
                break;
            }
            below += c;
        }
        let mut members = Vec::with_capacity(hist[bucket]);
        self.scan(|v| {
            if (order_key(v) >> 48) as usize == bucket {
                members.push(v);
            }
        })?;
        let (_, q, _) = members.select_nth_unstable_by(k - below - 1, f64::total_cmp);
        Ok((self.max, *q))
    }
}
