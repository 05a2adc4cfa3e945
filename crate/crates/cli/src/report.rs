// SPDX-License-Identifier: MIT OR Apache-2.0

//! The serialized report: fixed field names, 1-based pairs, curves kept as
//! plain arrays for external plotting.

use std::path::{Path, PathBuf};

use corrcp::simlab::{MetricsSummary, RateSummary};
use corrcp::{EstimationReport, HalfVector, SupportIndexSet, ThresholdReport};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Bins used for `w_histogram`.
pub const HISTOGRAM_BINS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Change,
    NoChange,
}

/// Equal-width histogram; `edges` has one more entry than `counts` and the
/// last bin is closed on the right.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(values: &[f64], bins: usize) -> Self {
        let bins = bins.max(1);
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if values.is_empty() {
            return Self {
                edges: Vec::new(),
                counts: Vec::new(),
            };
        }
        let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
        let edges = (0..=bins)
            .map(|k| if k == bins && hi > lo { hi } else { lo + width * k as f64 })
            .collect();
        let mut counts = vec![0u64; bins];
        for &v in values {
            let k = (((v - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        Self { edges, counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// One CLI run. Fields that do not apply to the subcommand are `null` or
/// empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub method: String,
    pub p: usize,
    #[serde(rename = "T")]
    pub len: usize,
    pub verdict: Option<Verdict>,
    pub beta_hat: Option<f64>,
    pub t_hat: Option<usize>,
    /// 1-based `[i, j]` pairs with `i < j`.
    pub support: Vec<[usize; 2]>,
    /// 1-based variables whose variance entry was retained.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub support_diagonal: Vec<usize>,
    pub tau1: Option<f64>,
    pub tau2: Option<f64>,
    pub seed: u64,
    pub q: Option<usize>,
    pub alpha: Option<f64>,
    pub smote_iterations: Option<usize>,
    pub converged: Option<bool>,
    pub boundary: Option<bool>,
    pub surrogate_threshold: bool,
    /// First split of `cusum_curve` (1-based count of pre-change columns).
    pub curve_start: Option<usize>,
    pub cusum_curve: Option<Vec<f64>>,
    pub w_histogram: Option<Histogram>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<RateSummary>,
}

pub fn one_based(support: &SupportIndexSet) -> Vec<[usize; 2]> {
    support.pairs().into_iter().map(|(i, j)| [i + 1, j + 1]).collect()
}

impl Report {
    pub fn blank(command: &str, method: &str, p: usize, len: usize, seed: u64) -> Self {
        Self {
            command: command.into(),
            method: method.into(),
            p,
            len,
            verdict: None,
            beta_hat: None,
            t_hat: None,
            support: Vec::new(),
            support_diagonal: Vec::new(),
            tau1: None,
            tau2: None,
            seed,
            q: None,
            alpha: None,
            smote_iterations: None,
            converged: None,
            boundary: None,
            surrogate_threshold: false,
            curve_start: None,
            cusum_curve: None,
            w_histogram: None,
            metrics: None,
            rates: None,
        }
    }

    pub fn with_thresholds(mut self, t: &ThresholdReport) -> Self {
        self.tau1 = Some(t.tau1);
        self.tau2 = Some(t.tau2);
        self.q = Some(t.trials);
        self.alpha = Some(t.alpha);
        self
    }

    pub fn with_w(mut self, w: &HalfVector) -> Self {
        self.w_histogram = Some(Histogram::new(w.entries(), HISTOGRAM_BINS));
        self
    }

    pub fn with_estimate(mut self, est: &EstimationReport) -> Self {
        if let Some(t) = &est.thresholds {
            self = self.with_thresholds(t);
        }
        self.beta_hat = Some(est.beta_hat);
        self.t_hat = Some(est.t_hat);
        self.support = one_based(&est.support);
        self.support_diagonal = est.support_diagonal.iter().map(|i| i + 1).collect();
        self.smote_iterations = Some(est.smote_iterations);
        self.converged = Some(est.converged);
        self.boundary = Some(est.boundary);
        self.surrogate_threshold = est.surrogate_threshold;
        self.curve_start = Some(corrcp::estimate::SCAN_START);
        self.cusum_curve = Some(est.curve.clone());
        self
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| CliError::Serialize(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Serialize(e.to_string()))
    }

    /// `key,value` rows for every scalar field, sorted by key.
    pub fn scalar_csv(&self) -> Result<String> {
        let value = serde_json::to_value(self).map_err(|e| CliError::Serialize(e.to_string()))?;
        let mut out = String::from("key,value\n");
        let obj = value.as_object().expect("report serializes to an object");
        for (k, v) in obj {
            if matches!(k.as_str(), "cusum_curve" | "w_histogram" | "metrics" | "rates") {
                continue;
            }
            let cell = match v {
                serde_json::Value::Null => String::new(),
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Bool(_) | serde_json::Value::Number(_) => v.to_string(),
                serde_json::Value::Array(_) if k == "support" => self
                    .support
                    .iter()
                    .map(|[i, j]| format!("{i}-{j}"))
                    .collect::<Vec<_>>()
                    .join(" "),
                serde_json::Value::Array(_) if k == "support_diagonal" => {
                    self.support_diagonal.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
                }
                _ => continue,
            };
            let cell = if cell.contains(',') || cell.contains('"') {
                format!("\"{}\"", cell.replace('"', "\"\""))
            } else {
                cell
            };
            out.push_str(&format!("{k},{cell}\n"));
        }
        if let Some(m) = &self.metrics {
            for (k, v) in metric_rows(m) {
                out.push_str(&format!("metrics.{k},{v}\n"));
            }
        }
        if let Some(r) = &self.rates {
            out.push_str(&format!("rates.initial_rate,{}\n", r.initial_rate));
            out.push_str(&format!("rates.final_rate,{}\n", r.final_rate));
            out.push_str(&format!("rates.iterations,{}\n", r.iterations));
            out.push_str(&format!("rates.converged,{}\n", r.converged));
        }
        Ok(out)
    }

    /// `(file suffix, contents)` for each curve carried by the report.
    pub fn curve_csvs(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if let Some(c) = &self.cusum_curve {
            let start = self.curve_start.unwrap_or(0);
            let mut s = String::from("t,value\n");
            for (k, v) in c.iter().enumerate() {
                s.push_str(&format!("{},{}\n", start + k, v));
            }
            out.push(("cusum_curve", s));
        }
        if let Some(h) = &self.w_histogram {
            let mut s = String::from("lower,upper,count\n");
            for (k, c) in h.counts.iter().enumerate() {
                s.push_str(&format!("{},{},{}\n", h.edges[k], h.edges[k + 1], c));
            }
            out.push(("w_histogram", s));
        }
        if let Some(r) = &self.rates {
            let mut s = String::from("round,rate\n0,");
            s.push_str(&format!("{}\n", r.initial_rate));
            for (k, v) in r.round_rates.iter().enumerate() {
                s.push_str(&format!("{},{}\n", k + 1, v));
            }
            out.push(("round_rates", s));
        }
        out
    }
}

fn metric_rows(m: &MetricsSummary) -> Vec<(&'static str, String)> {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    vec![
        ("replications", m.replications.to_string()),
        ("failures", m.failures.to_string()),
        ("true_beta", m.true_beta.to_string()),
        ("mean", opt(m.mean)),
        ("sd", opt(m.sd)),
        ("mse", opt(m.mse)),
        ("rejection_rate", opt(m.rejection_rate)),
        ("success_rate", opt(m.success_rate)),
        ("mean_iterations", opt(m.mean_iterations)),
        ("degenerate", m.degenerate.to_string()),
    ]
}

/// Sibling path `<stem>_<suffix>.csv` next to `base`.
pub fn curve_path(base: &Path, suffix: &str) -> PathBuf {
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    base.with_file_name(format!("{stem}_{suffix}.csv"))
}

/// Writes the report to `output` (or returns the text for stdout).
pub fn emit(report: &Report, format: Format, output: Option<&Path>) -> Result<Option<String>> {
    let main = match format {
        Format::Json => report.to_json()?,
        Format::Csv => report.scalar_csv()?,
    };
    let Some(path) = output else {
        return Ok(Some(main));
    };
    std::fs::write(path, &main).map_err(|e| CliError::io(path, e))?;
    if format == Format::Csv {
        for (suffix, body) in report.curve_csvs() {
            let p = curve_path(path, suffix);
            std::fs::write(&p, body).map_err(|e| CliError::io(p, e))?;
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_counts_everything() {
        let h = Histogram::new(&[0.0, 0.1, 0.5, 1.0, 1.0], 4);
        assert_eq!(h.edges, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(h.counts, vec![2, 0, 1, 2]);
        let flat = Histogram::new(&[3.0, 3.0], 5);
        assert_eq!(flat.total(), 2);
        assert_eq!(flat.counts[0], 2);
    }

    #[test]
    fn empty_support_serializes_as_empty_list() {
        let r = Report::blank("estimate", "space", 3, 10, 1);
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(v["support"], serde_json::json!([]));
    }

    #[test]
    fn fixed_names() {
        let mut r = Report::blank("estimate", "space", 4, 100, 9);
        r.beta_hat = Some(0.5);
        r.t_hat = Some(50);
        r.support = vec![[1, 2]];
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(v["beta_hat"], 0.5);
        assert_eq!(v["t_hat"], 50);
        assert_eq!(v["support"], serde_json::json!([[1, 2]]));
        for key in [
            "verdict",
            "tau1",
            "tau2",
            "seed",
            "q",
            "alpha",
            "smote_iterations",
            "cusum_curve",
            "w_histogram",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn csv_scalars_and_curves() {
        let mut r = Report::blank("estimate", "space", 4, 10, 9);
        r.support = vec![[1, 2], [3, 4]];
        r.curve_start = Some(2);
        r.cusum_curve = Some(vec![0.5, 0.25]);
        let s = r.scalar_csv().unwrap();
        assert!(s.contains("support,1-2 3-4\n"));
        assert!(s.contains("seed,9\n"));
        let curves = r.curve_csvs();
        assert_eq!(curves[0], ("cusum_curve", "t,value\n2,0.5\n3,0.25\n".to_string()));
    }

    #[test]
    fn curve_paths() {
        assert_eq!(curve_path(Path::new("/tmp/out.csv"), "w_histogram"), Path::new("/tmp/out_w_histogram.csv"));
    }
}
