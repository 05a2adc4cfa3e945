// SPDX-License-Identifier: MIT OR Apache-2.0

//! Browser bindings for the static demo page in `www/`. Every operation
//! returns a JSON string that the page parses and draws on a canvas.

use corrcp::baselines::kcp_estimate;
use corrcp::estimate::SCAN_START;
use corrcp::signflip::signflip_trial;
use corrcp::simlab::{generate, CaseId, Distribution, SimScenario};
use corrcp::{
    compute_thresholds, compute_w, decide, space_from_parts, standardize, CorrError, ObservationMatrix,
    SignflipConfig, TrialStorage,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Points kept per plotted distribution.
const MAX_POINTS: usize = 1500;
const MAX_P: usize = 120;
const MAX_LEN: usize = 400;
const MAX_TRIALS: usize = 200;

fn js(e: CorrError) -> JsError {
    JsError::new(&e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> Result<String, JsError> {
    serde_json::to_string(v).map_err(|e| JsError::new(&e.to_string()))
}

/// Evenly spaced order statistics of `v`, always including both ends.
fn thin_sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    if v.len() <= MAX_POINTS {
        return v;
    }
    let last = v.len() - 1;
    (0..MAX_POINTS).map(|k| v[k * last / (MAX_POINTS - 1)]).collect()
}

#[derive(Serialize)]
struct Distributions {
    w: Vec<f64>,
    flipped: Vec<f64>,
    tau1: f64,
    tau2: f64,
    rejected: bool,
    support_size: usize,
}

#[derive(Serialize)]
struct Cusum {
    start: usize,
    curve: Vec<f64>,
    t_hat: usize,
    beta_hat: f64,
    true_t: usize,
    support_size: usize,
}

#[derive(Serialize)]
struct Comparison {
    start: usize,
    true_t: usize,
    space_curve: Vec<f64>,
    space_t: usize,
    kcp_curve: Vec<f64>,
    kcp_t: usize,
}

/// One simulated dataset and the settings used to analyze it.
#[wasm_bindgen]
pub struct Demo {
    scenario: SimScenario,
    data: ObservationMatrix,
}

#[wasm_bindgen]
impl Demo {
    /// `case` is 0-9; `heavy_tails` switches to multivariate t(5) draws.
    #[wasm_bindgen(constructor)]
    pub fn new(case: u8, p: usize, len: usize, beta: f64, heavy_tails: bool, seed: u32) -> Result<Demo, JsError> {
        if p > MAX_P || len > MAX_LEN {
            return Err(JsError::new(&format!("demo sizes are capped at p={MAX_P}, T={MAX_LEN}")));
        }
        let case = CaseId::from_number(case).ok_or_else(|| JsError::new("case must be 0-9"))?;
        let mut scenario = SimScenario::new(case, p, len).with_seed(u64::from(seed));
        if case.fixed_beta().is_none() {
            scenario = scenario.with_beta(beta);
        }
        if heavy_tails {
            scenario = scenario.with_distribution(Distribution::StudentT);
        }
        let data = generate(&scenario).map_err(js)?;
        Ok(Demo { scenario, data })
    }

    #[wasm_bindgen(getter)]
    pub fn change_point(&self) -> usize {
        self.scenario.change_point()
    }

    fn config(&self, trials: usize, alpha: f64) -> Result<SignflipConfig, JsError> {
        if trials > MAX_TRIALS {
            return Err(JsError::new(&format!("at most {MAX_TRIALS} trials")));
        }
        let cfg = SignflipConfig {
            trials,
            alpha,
            seed: self.scenario.seed,
            storage: TrialStorage::InMemory,
        };
        cfg.validate().map_err(js)?;
        Ok(cfg)
    }

    /// Sorted `w` against the pooled sorted signflip entries, with both
    /// thresholds and the detection verdict.
    pub fn distributions(&self, trials: usize, alpha: f64) -> Result<String, JsError> {
        let cfg = self.config(trials, alpha)?;
        let w = compute_w(&standardize(&self.data).map_err(js)?).map_err(js)?;
        let rep = decide(w, compute_thresholds(&self.data, &cfg).map_err(js)?);
        let mut flipped = Vec::new();
        for trial in 0..trials {
            flipped.extend(signflip_trial(&self.data, trial, cfg.seed).map_err(js)?.into_entries());
        }
        to_json(&Distributions {
            w: thin_sorted(rep.w.entries().to_vec()),
            flipped: thin_sorted(flipped),
            tau1: rep.thresholds.tau1,
            tau2: rep.thresholds.tau2,
            rejected: rep.rejected,
            support_size: rep.support.len(),
        })
    }

    /// CUSUM curve of the reduced series and its argmax.
    pub fn cusum(&self, trials: usize, alpha: f64) -> Result<String, JsError> {
        let est = self.space(trials, alpha)?;
        to_json(&Cusum {
            start: SCAN_START,
            t_hat: est.t_hat,
            beta_hat: est.beta_hat,
            true_t: self.scenario.change_point(),
            support_size: est.support.len(),
            curve: est.curve,
        })
    }

    /// SPACE and KCP-raw objectives side by side.
    pub fn compare(&self, trials: usize, alpha: f64) -> Result<String, JsError> {
        let space = self.space(trials, alpha)?;
        let kcp = kcp_estimate(&self.data).map_err(js)?;
        to_json(&Comparison {
            start: SCAN_START,
            true_t: self.scenario.change_point(),
            space_t: space.t_hat,
            space_curve: space.curve,
            kcp_t: kcp.t_hat,
            kcp_curve: kcp.curve,
        })
    }
}

impl Demo {
    fn space(&self, trials: usize, alpha: f64) -> Result<corrcp::EstimationReport, JsError> {
        let cfg = self.config(trials, alpha)?;
        let x = standardize(&self.data).map_err(js)?;
        let w = compute_w(&x).map_err(js)?;
        let thresholds = compute_thresholds(&self.data, &cfg).map_err(js)?;
        space_from_parts(&x, &w, thresholds).map_err(js)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thinning_keeps_ends() {
        let v: Vec<f64> = (0..10_000).rev().map(f64::from).collect();
        let t = thin_sorted(v);
        assert_eq!(t.len(), MAX_POINTS);
        assert_eq!((t[0], t[MAX_POINTS - 1]), (0.0, 9999.0));
        assert!(t.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(thin_sorted(vec![2.0, 1.0]), vec![1.0, 2.0]);
    }

    #[test]
    fn operations_emit_json() {
        let d = Demo::new(6, 12, 80, 0.5, false, 3).unwrap_or_else(|_| panic!("demo builds"));
        let parse = |r: Result<String, JsError>| -> serde_json::Value {
            serde_json::from_str(&r.unwrap_or_else(|_| panic!("operation runs"))).unwrap()
        };
        let dist = parse(d.distributions(10, 0.95));
        assert_eq!(dist["w"].as_array().unwrap().len(), 66);
        assert_eq!(dist["flipped"].as_array().unwrap().len(), 660);
        let c = parse(d.cusum(10, 0.95));
        assert_eq!(c["curve"].as_array().unwrap().len(), 77);
        assert_eq!(c["true_t"], 40);
        let cmp = parse(d.compare(10, 0.95));
        assert_eq!(cmp["kcp_curve"].as_array().unwrap().len(), 77);
        assert_eq!(d.change_point(), 40);
    }
}
