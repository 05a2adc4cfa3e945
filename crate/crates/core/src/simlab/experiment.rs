// SPDX-License-Identifier: MIT OR Apache-2.0

//! Monte Carlo drivers: repeated draws of a scenario pushed through one
//! method, and the iterated SMOTE detection-rate experiment.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generate::Sampler;
use super::scenario::SimScenario;
use crate::baselines::{dette_detect, dette_estimate_calibrated, kcp_estimate};
use crate::detect::spad_detect;
use crate::error::{CorrError, Result};
use crate::estimate::space_estimate;
use crate::seed::{derive_seed, substream};
use crate::series::ObservationMatrix;
use crate::signflip::{SignflipConfig, TrialStorage, DEFAULT_ALPHA, DETECTION_TRIALS, ESTIMATION_TRIALS};
use crate::smote::{smote_extend, smote_space, SmoteConfig};

const LABEL_SIGNFLIP: u64 = 0x7369_676e;
const LABEL_SMOTE: u64 = 0x736d_6f74;
const LABEL_DATASETS: u64 = 0x6461_7461;

/// Default cap on augmentation rounds of the detection-rate experiment.
pub const MAX_RATE_ROUNDS: usize = 25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentMethod {
    Spad,
    Space,
    SmoteSpace,
    Dette,
    DetteDetect,
    Kcp,
}

impl ExperimentMethod {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentMethod::Spad => "spad",
            ExperimentMethod::Space => "space",
            ExperimentMethod::SmoteSpace => "smote_space",
            ExperimentMethod::Dette => "dette",
            ExperimentMethod::DetteDetect => "dette_detect",
            ExperimentMethod::Kcp => "kcp",
        }
    }

    pub fn is_detection(self) -> bool {
        matches!(self, ExperimentMethod::Spad | ExperimentMethod::DetteDetect)
    }
}

impl fmt::Display for ExperimentMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentMethod {
    type Err = CorrError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "spad" => ExperimentMethod::Spad,
            "space" => ExperimentMethod::Space,
            "smote_space" | "smote" => ExperimentMethod::SmoteSpace,
            "dette" => ExperimentMethod::Dette,
            "dette_detect" => ExperimentMethod::DetteDetect,
            "kcp" | "kcp_raw" => ExperimentMethod::Kcp,
            other => return Err(CorrError::InvalidConfig(format!("unknown method {other:?}"))),
        })
    }
}

/// Tuning shared by all replications.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOptions {
    /// Signflip trials; `None` picks 30 for detection and 20 for estimation.
    pub trials: Option<usize>,
    pub alpha: f64,
    pub storage: TrialStorage,
    pub smote: SmoteConfig,
    pub keep_records: bool,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            trials: None,
            alpha: DEFAULT_ALPHA,
            storage: TrialStorage::Auto,
            smote: SmoteConfig::default(),
            keep_records: false,
        }
    }
}

impl ExperimentOptions {
    fn signflip(&self, detection: bool, seed: u64) -> SignflipConfig {
        let default = if detection { DETECTION_TRIALS } else { ESTIMATION_TRIALS };
        SignflipConfig {
            trials: self.trials.unwrap_or(default),
            alpha: self.alpha,
            seed,
            storage: self.storage,
        }
    }
}

/// Outcome of one replication.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub replication: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_hat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_hat: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejected: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Aggregate over replications. Estimation methods fill `mean`, `sd` and
/// `mse` of `beta_hat`; detection methods fill the rates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub method: ExperimentMethod,
    pub scenario: SimScenario,
    pub seed: u64,
    pub replications: usize,
    /// Replications whose method call returned an error.
    pub failures: usize,
    pub true_beta: f64,
    pub mean: Option<f64>,
    /// Sample standard deviation (divisor `n - 1`).
    pub sd: Option<f64>,
    pub mse: Option<f64>,
    pub rejection_rate: Option<f64>,
    /// Correct decisions: no rejection under the null case, rejection otherwise.
    pub success_rate: Option<f64>,
    pub mean_iterations: Option<f64>,
    /// Fewer than two successful estimates, so `sd` is reported as 0.
    pub degenerate: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub records: Option<Vec<RunRecord>>,
}

/// Mean, sample sd and mean squared error around `truth`.
pub fn estimate_metrics(values: &[f64], truth: f64) -> Option<(f64, f64, f64)> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let sd = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0)).sqrt()
    } else {
        0.0
    };
    let mse = values.iter().map(|v| (v - truth).powi(2)).sum::<f64>() / nf;
    Some((mean, sd, mse))
}

fn run_once(
    sampler: &Sampler,
    method: ExperimentMethod,
    opts: &ExperimentOptions,
    seed: u64,
    rep: usize,
) -> RunRecord {
    let data = sampler.sample(&mut substream(seed, rep as u64));
    let sf_seed = derive_seed(seed, LABEL_SIGNFLIP, rep as u64);
    let mut rec = RunRecord {
        replication: rep,
        beta_hat: None,
        t_hat: None,
        rejected: None,
        iterations: None,
        error: None,
    };
    let estimate = match method {
        ExperimentMethod::Spad => match spad_detect(&data, &opts.signflip(true, sf_seed)) {
            Ok(r) => {
                rec.rejected = Some(r.rejected);
                return rec;
            }
            Err(e) => Err(e),
        },
        ExperimentMethod::DetteDetect => match dette_detect(&data, &opts.signflip(true, sf_seed)) {
            Ok((rejected, _)) => {
                rec.rejected = Some(rejected);
                return rec;
            }
            Err(e) => Err(e),
        },
        ExperimentMethod::Space => space_estimate(&data, &opts.signflip(false, sf_seed)),
        ExperimentMethod::SmoteSpace => {
            let sm = SmoteConfig {
                seed: derive_seed(seed, LABEL_SMOTE, rep as u64),
                ..opts.smote.clone()
            };
            smote_space(&data, &opts.signflip(false, sf_seed), &sm)
        }
        ExperimentMethod::Dette => dette_estimate_calibrated(&data, &opts.signflip(false, sf_seed)),
        ExperimentMethod::Kcp => kcp_estimate(&data),
    };
    match estimate {
        Ok(r) => {
            rec.beta_hat = Some(r.beta_hat);
            rec.t_hat = Some(r.t_hat);
            if method == ExperimentMethod::SmoteSpace {
                rec.iterations = Some(r.smote_iterations);
            }
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec
}

/// Default options; see [`run_experiment_with`].
pub fn run_experiment(
    scenario: &SimScenario,
    method: ExperimentMethod,
    replications: usize,
    seed: u64,
) -> Result<MetricsSummary> {
    run_experiment_with(scenario, method, &ExperimentOptions::default(), replications, seed)
}

/// Replication `r` draws its data from substream `r` of `seed` and derives
/// its method seeds from `(seed, r)`, so results do not depend on scheduling.
pub fn run_experiment_with(
    scenario: &SimScenario,
    method: ExperimentMethod,
    opts: &ExperimentOptions,
    replications: usize,
    seed: u64,
) -> Result<MetricsSummary> {
    if replications == 0 {
        return Err(CorrError::InvalidConfig("replications must be at least 1".into()));
    }
    let sampler = Sampler::new(scenario)?;
    let records: Vec<RunRecord> = (0..replications)
        .into_par_iter()
        .map(|rep| run_once(&sampler, method, opts, seed, rep))
        .collect();
    Ok(summarize(scenario, method, seed, records, opts.keep_records))
}

fn summarize(
    scenario: &SimScenario,
    method: ExperimentMethod,
    seed: u64,
    records: Vec<RunRecord>,
    keep: bool,
) -> MetricsSummary {
    let failures = records.iter().filter(|r| r.error.is_some()).count();
    let betas: Vec<f64> = records.iter().filter_map(|r| r.beta_hat).collect();
    let decisions: Vec<bool> = records.iter().filter_map(|r| r.rejected).collect();
    let iterations: Vec<usize> = records.iter().filter_map(|r| r.iterations).collect();
    let true_beta = scenario.change_point() as f64 / scenario.len as f64;

    let (mean, sd, mse) = match estimate_metrics(&betas, true_beta) {
        Some((m, s, e)) => (Some(m), Some(s), Some(e)),
        None => (None, None, None),
    };
    let (rejection_rate, success_rate) = if method.is_detection() && !decisions.is_empty() {
        let rate = decisions.iter().filter(|&&d| d).count() as f64 / decisions.len() as f64;
        (Some(rate), Some(if scenario.case.is_null() { 1.0 - rate } else { rate }))
    } else {
        (None, None)
    };
    let mean_iterations = (!iterations.is_empty())
        .then(|| iterations.iter().sum::<usize>() as f64 / iterations.len() as f64);
    MetricsSummary {
        method,
        scenario: scenario.clone(),
        seed,
        replications: records.len(),
        failures,
        true_beta,
        mean,
        sd,
        mse,
        rejection_rate,
        success_rate,
        mean_iterations,
        degenerate: !method.is_detection() && betas.len() < 2,
        records: keep.then_some(records),
    }
}

/// Result of the iterated SMOTE detection-rate experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub scenario: SimScenario,
    pub seed: u64,
    pub datasets: usize,
    /// Detection rate on the raw datasets.
    pub initial_rate: f64,
    /// Rate after each augmentation round.
    pub round_rates: Vec<f64>,
    pub final_rate: f64,
    /// Number of augmentation rounds performed.
    pub iterations: usize,
    /// False when the round cap stopped the loop.
    pub converged: bool,
}

fn detection_rate(datasets: &[ObservationMatrix], opts: &ExperimentOptions, seed: u64, round: usize) -> Result<f64> {
    let hits: Vec<bool> = datasets
        .par_iter()
        .enumerate()
        .map(|(i, d)| {
            let s = derive_seed(derive_seed(seed, LABEL_SIGNFLIP, round as u64), LABEL_DATASETS, i as u64);
            spad_detect(d, &opts.signflip(true, s)).map(|r| r.rejected)
        })
        .collect::<Result<_>>()?;
    Ok(hits.iter().filter(|&&h| h).count() as f64 / datasets.len().max(1) as f64)
}

/// Detection rate over `m` datasets, then repeated SMOTE inflation of every
/// dataset (from its original tail window) until the rate improves by less than `epsilon` (or the round cap
/// in `opts.smote.max_iterations` is hit).
pub fn spad_smote_experiment(
    scenario: &SimScenario,
    opts: &ExperimentOptions,
    m: usize,
    epsilon: f64,
    seed: u64,
) -> Result<RateSummary> {
    if m == 0 {
        return Err(CorrError::InvalidConfig("at least one dataset is required".into()));
    }
    if !(epsilon > 0.0) {
        return Err(CorrError::InvalidConfig("epsilon must be positive".into()));
    }
    opts.smote.validate()?;
    let sampler = Sampler::new(scenario)?;
    let mut datasets: Vec<ObservationMatrix> = (0..m)
        .into_par_iter()
        .map(|i| sampler.sample(&mut substream(seed, i as u64)))
        .collect();

    let base_len = scenario.len;
    let initial_rate = detection_rate(&datasets, opts, seed, 0)?;
    let mut alpha0 = initial_rate;
    let mut round_rates = Vec::new();
    loop {
        let round = round_rates.len() + 1;
        datasets = datasets
            .par_iter()
            .enumerate()
            .map(|(i, d)| {
                let cfg = SmoteConfig {
                    seed: derive_seed(derive_seed(seed, LABEL_SMOTE, round as u64), LABEL_DATASETS, i as u64),
                    ..opts.smote.clone()
                };
                smote_extend(d, base_len, &cfg).map(|a| a.data)
            })
            .collect::<Result<_>>()?;
        let alpha1 = detection_rate(&datasets, opts, seed, round)?;
        round_rates.push(alpha1);
        let improving = alpha1 - alpha0 >= epsilon;
        if !improving || round >= opts.smote.max_iterations {
            return Ok(RateSummary {
                scenario: scenario.clone(),
                seed,
                datasets: m,
                initial_rate,
                iterations: round,
                final_rate: alpha1,
                round_rates,
                converged: !improving,
            });
        }
        alpha0 = alpha1;
    }
}

#[cfg(test)]
mod tests {
    use super::super::scenario::CaseId;
    use super::*;

    #[test]
    fn metrics_identity() {
        let v = [0.41, 0.52, 0.5, 0.47, 0.61, 0.55];
        let (mean, sd, mse) = estimate_metrics(&v, 0.5).unwrap();
        let n = v.len() as f64;
        let bias = mean - 0.5;
        assert!((mse - (bias * bias + sd * sd * (n - 1.0) / n)).abs() < 1e-12);
    }

    #[test]
    fn single_replication_is_degenerate() {
        let sc = SimScenario::new(CaseId::Case6, 5, 40);
        let s = run_experiment(&sc, ExperimentMethod::Kcp, 1, 3).unwrap();
        assert_eq!(s.sd, Some(0.0));
        assert!(s.degenerate);
        assert_eq!(s.replications, 1);
    }

    #[test]
    fn replications_are_isolated() {
        let sc = SimScenario::new(CaseId::Case6, 6, 40);
        let opts = ExperimentOptions {
            keep_records: true,
            ..ExperimentOptions::default()
        };
        let four = run_experiment_with(&sc, ExperimentMethod::Space, &opts, 4, 11).unwrap();
        let two = run_experiment_with(&sc, ExperimentMethod::Space, &opts, 2, 11).unwrap();
        assert_eq!(four.records.unwrap()[..2], two.records.unwrap()[..]);
    }

    #[test]
    fn failures_are_counted() {
        // a one-column minority window makes SMOTE fail on every draw
        let sc = SimScenario::new(CaseId::Case6, 3, 10);
        let s = run_experiment(&sc, ExperimentMethod::SmoteSpace, 3, 1).unwrap();
        assert_eq!(s.failures, 3);
        assert_eq!(s.mean, None);
        assert!(s.degenerate);
    }

    #[test]
    fn method_names_parse() {
        for m in [
            ExperimentMethod::Spad,
            ExperimentMethod::Space,
            ExperimentMethod::SmoteSpace,
            ExperimentMethod::Dette,
            ExperimentMethod::DetteDetect,
            ExperimentMethod::Kcp,
        ] {
            assert_eq!(m.name().parse::<ExperimentMethod>().unwrap(), m);
        }
    }
}
