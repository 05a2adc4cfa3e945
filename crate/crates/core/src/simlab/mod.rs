// SPDX-License-Identifier: MIT OR Apache-2.0

//! Simulation scenarios, data generation, closed-form moment oracles and
//! Monte Carlo drivers.

pub mod experiment;
pub mod generate;
pub mod oracle;
pub mod scenario;

pub use experiment::{
    estimate_metrics, run_experiment, run_experiment_with, spad_smote_experiment, ExperimentMethod,
    ExperimentOptions, MetricsSummary, RateSummary, RunRecord, MAX_RATE_ROUNDS,
};
pub use generate::{generate, symmetric_sqrt, Sampler, VAR_BURN_IN};
pub use oracle::{
    expected_v, expected_v_flipped, expected_v_flipped_oracle, expected_v_oracle, gaussian_fourth_moment,
    split_weight, PairMoments,
};
pub use scenario::{CaseId, Distribution, SimScenario, VarianceModel};
