// SPDX-License-Identifier: MIT OR Apache-2.0

use corrcp::baselines::{dette_detect, dette_estimate_calibrated, kcp_estimate};
use corrcp::seed::derive_seed;
use corrcp::signflip::{DETECTION_TRIALS, ESTIMATION_TRIALS};
use corrcp::simlab::{
    generate, run_experiment_with, spad_smote_experiment, CaseId, Distribution, ExperimentMethod, ExperimentOptions,
    SimScenario,
};
use corrcp::{
    compute_thresholds, compute_w, decide, smote_space, space_from_parts, standardize, ObservationMatrix,
    SignflipConfig, SmoteConfig, TrialStorage,
};

use crate::error::{CliError, Result};
use crate::ingest::{ingest_csv, write_csv};
use crate::report::{emit, one_based, Report, Verdict};
use crate::{Command, DataArgs, SimArgs};

const SMOTE_SEED_LABEL: u64 = 0x736d_6f74;
const RATE_EPSILON: f64 = 0.05;

pub fn run(cmd: &Command) -> Result<Option<String>> {
    match cmd {
        Command::Detect(a) => {
            let data = ingest_csv(&a.input, a.orientation)?;
            emit(&detect(&data, a)?, a.out.format, a.out.output.as_deref())
        }
        Command::Estimate(a) => {
            let data = ingest_csv(&a.input, a.orientation)?;
            emit(&estimate(&data, a)?, a.out.format, a.out.output.as_deref())
        }
        Command::SmoteEstimate(a) => {
            let data = ingest_csv(&a.input, a.orientation)?;
            emit(&smote_estimate(&data, a)?, a.out.format, a.out.output.as_deref())
        }
        Command::Simulate(a) => {
            let report = simulate(a)?;
            emit(&report, a.out.format, a.out.output.as_deref())
        }
    }
}

fn signflip(a: &DataArgs, default_trials: usize) -> SignflipConfig {
    SignflipConfig {
        trials: a.trials.unwrap_or(default_trials),
        alpha: a.alpha,
        seed: a.seed,
        storage: TrialStorage::Auto,
    }
}

fn method_name(a: &DataArgs, default: &str) -> String {
    a.method
        .as_deref()
        .unwrap_or(default)
        .trim()
        .to_ascii_lowercase()
        .replace('-', "_")
}

pub fn detect(data: &ObservationMatrix, a: &DataArgs) -> Result<Report> {
    let cfg = signflip(a, DETECTION_TRIALS);
    cfg.validate()?;
    let method = method_name(a, "spad");
    let base = Report::blank("detect", &method, data.p(), data.len(), a.seed);
    match method.as_str() {
        "spad" => {
            let w = compute_w(&standardize(data)?)?;
            let rep = decide(w, compute_thresholds(data, &cfg)?);
            let mut out = base.with_thresholds(&rep.thresholds).with_w(&rep.w);
            out.verdict = Some(if rep.rejected { Verdict::Change } else { Verdict::NoChange });
            out.support = one_based(&rep.support);
            Ok(out)
        }
        "dette" => {
            let (rejected, thresholds) = dette_detect(data, &cfg)?;
            let mut out = base.with_thresholds(&thresholds);
            out.verdict = Some(if rejected { Verdict::Change } else { Verdict::NoChange });
            out.surrogate_threshold = true;
            Ok(out)
        }
        other => Err(CliError::Usage(format!("detect supports spad and dette, not {other:?}"))),
    }
}

pub fn estimate(data: &ObservationMatrix, a: &DataArgs) -> Result<Report> {
    let cfg = signflip(a, ESTIMATION_TRIALS);
    cfg.validate()?;
    let method = method_name(a, "space");
    let base = Report::blank("estimate", &method, data.p(), data.len(), a.seed);
    match method.as_str() {
        "space" => {
            let x = standardize(data)?;
            let w = compute_w(&x)?;
            let thresholds = compute_thresholds(data, &cfg)?;
            let est = space_from_parts(&x, &w, thresholds)?;
            Ok(base.with_w(&w).with_estimate(&est))
        }
        "dette" => Ok(base.with_estimate(&dette_estimate_calibrated(data, &cfg)?)),
        "kcp" | "kcp_raw" => {
            let mut out = base.with_estimate(&kcp_estimate(data)?);
            out.smote_iterations = None;
            Ok(out)
        }
        other => Err(CliError::Usage(format!("estimate supports space, dette and kcp, not {other:?}"))),
    }
}

fn smote_config(gamma: f64, epsilon: f64, max_iterations: usize, seed: u64) -> SmoteConfig {
    SmoteConfig {
        gamma,
        epsilon,
        max_iterations,
        seed: derive_seed(seed, SMOTE_SEED_LABEL, 0),
        ..SmoteConfig::default()
    }
}

pub fn smote_estimate(data: &ObservationMatrix, a: &DataArgs) -> Result<Report> {
    if a.method.is_some() {
        return Err(CliError::Usage("smote-estimate has no --method".into()));
    }
    let cfg = signflip(a, ESTIMATION_TRIALS);
    cfg.validate()?;
    let sm = smote_config(a.gamma, a.epsilon, a.max_iterations, a.seed);
    let est = smote_space(data, &cfg, &sm)?;
    Ok(Report::blank("smote-estimate", "smote_space", data.p(), data.len(), a.seed).with_estimate(&est))
}

fn parse_dist(s: &str) -> Result<Distribution> {
    s.parse::<Distribution>().map_err(|e| CliError::Usage(e.to_string()))
}

/// Scenario from the optional config file with flag overrides applied.
pub fn scenario(a: &SimArgs) -> Result<SimScenario> {
    let mut sc = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            SimScenario::from_config(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => {
            let case = a
                .case_id
                .ok_or_else(|| CliError::Usage("simulate needs --case or --config".into()))?;
            let case = CaseId::from_number(case).ok_or_else(|| CliError::Usage(format!("unknown case {case}")))?;
            let p = a.p.ok_or_else(|| CliError::Usage("simulate needs --p".into()))?;
            let len = a.len.ok_or_else(|| CliError::Usage("simulate needs --T".into()))?;
            SimScenario::new(case, p, len)
        }
    };
    if a.config.is_some() {
        if let Some(c) = a.case_id {
            let case = CaseId::from_number(c).ok_or_else(|| CliError::Usage(format!("unknown case {c}")))?;
            let (beta, beta2) = case.fixed_beta().unwrap_or((sc.beta, None));
            sc.case = case;
            sc.beta = beta;
            sc.beta2 = beta2;
        }
        sc.p = a.p.unwrap_or(sc.p);
        sc.len = a.len.unwrap_or(sc.len);
    }
    if let Some(b) = a.beta {
        sc.beta = b;
    }
    if let Some(d) = &a.dist {
        sc.distribution = parse_dist(d)?;
    }
    if let Some(s) = a.seed {
        sc.seed = s;
    }
    sc.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(sc)
}

pub fn simulate(a: &SimArgs) -> Result<Report> {
    let sc = scenario(a)?;
    if let Some(path) = &a.write_data {
        let data = generate(&sc)?;
        std::fs::write(path, write_csv(&data)).map_err(|e| CliError::io(path, e))?;
    }
    let method = a
        .method
        .as_deref()
        .ok_or_else(|| CliError::Usage("simulate needs --method".into()))?
        .trim()
        .to_ascii_lowercase()
        .replace('-', "_");
    if a.replications == 0 {
        return Err(CliError::Usage("--replications must be positive".into()));
    }
    let mut opts = ExperimentOptions {
        trials: a.trials,
        alpha: a.alpha,
        keep_records: a.records,
        ..ExperimentOptions::default()
    };
    opts.smote.gamma = a.gamma;
    let mut report = Report::blank("simulate", &method, sc.p, sc.len, sc.seed);
    report.alpha = Some(a.alpha);
    report.q = a.trials;
    if method == "spad_smote" {
        let eps = a.epsilon.unwrap_or(RATE_EPSILON);
        let rates = spad_smote_experiment(&sc, &opts, a.replications, eps, sc.seed)?;
        report.smote_iterations = Some(rates.iterations);
        report.converged = Some(rates.converged);
        report.rates = Some(rates);
        return Ok(report);
    }
    let m: ExperimentMethod = method.parse().map_err(|e: corrcp::CorrError| CliError::Usage(e.to_string()))?;
    if let Some(e) = a.epsilon {
        opts.smote.epsilon = e;
    }
    let metrics = run_experiment_with(&sc, m, &opts, a.replications, sc.seed)?;
    report.method = m.name().into();
    report.beta_hat = metrics.mean;
    report.surrogate_threshold = matches!(m, ExperimentMethod::Dette | ExperimentMethod::DetteDetect);
    report.metrics = Some(metrics);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::Format;
    use crate::OutputArgs;
    use std::path::PathBuf;

    fn args(method: Option<&str>) -> DataArgs {
        DataArgs {
            input: PathBuf::new(),
            orientation: None,
            trials: None,
            alpha: 0.95,
            seed: 3,
            method: method.map(str::to_owned),
            gamma: 0.9,
            epsilon: 1e-3,
            max_iterations: 25,
            out: OutputArgs {
                output: None,
                format: Format::Json,
            },
        }
    }

    fn data() -> ObservationMatrix {
        generate(&SimScenario::new(CaseId::Case6, 6, 60).with_seed(4)).unwrap()
    }

    #[test]
    fn estimate_fills_curve_and_histogram() {
        let r = estimate(&data(), &args(None)).unwrap();
        let curve = r.cusum_curve.as_ref().unwrap();
        assert_eq!(curve.len(), 60 - 3);
        assert_eq!(r.w_histogram.as_ref().unwrap().total(), 15);
        assert_eq!(r.q, Some(20));
        assert_eq!(r.beta_hat.unwrap(), r.t_hat.unwrap() as f64 / 60.0);
        assert!(r.support.iter().all(|[i, j]| 1 <= *i && i < j && *j <= 6));
    }

    #[test]
    fn detect_verdict() {
        let r = detect(&data(), &args(None)).unwrap();
        assert!(r.verdict.is_some());
        assert_eq!(r.q, Some(30));
        assert!(r.cusum_curve.is_none());
    }

    #[test]
    fn unknown_method_is_usage() {
        assert_eq!(detect(&data(), &args(Some("kcp"))).unwrap_err().exit_code(), 1);
        assert_eq!(estimate(&data(), &args(Some("nope"))).unwrap_err().exit_code(), 1);
    }

    #[test]
    fn baselines_run() {
        let r = estimate(&data(), &args(Some("kcp"))).unwrap();
        assert!(r.tau1.is_none() && r.smote_iterations.is_none());
        let r = estimate(&data(), &args(Some("dette"))).unwrap();
        assert!(r.surrogate_threshold);
    }
}
