// SPDX-License-Identifier: MIT OR Apache-2.0

//! Signflip-calibrated test for a change in the correlation matrix.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::halfvec::{HalfVector, SupportIndexSet};
use crate::series::{standardize, ObservationMatrix};
use crate::signflip::{compute_thresholds, SignflipConfig, ThresholdReport};
use crate::stat::compute_w;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    /// True when at least one pair of `w` lies strictly above `tau1`.
    pub rejected: bool,
    pub support: SupportIndexSet,
    pub w: HalfVector,
    pub thresholds: ThresholdReport,
}

/// Builds the verdict from a precomputed `w` and thresholds. Ties with
/// `tau1` do not reject.
pub fn decide(w: HalfVector, thresholds: ThresholdReport) -> DetectionReport {
    let support = w.exceedances(thresholds.tau1);
    DetectionReport {
        rejected: !support.is_empty(),
        support,
        w,
        thresholds,
    }
}

pub fn spad_detect(data: &ObservationMatrix, cfg: &SignflipConfig) -> Result<DetectionReport> {
    cfg.validate()?;
    let w = compute_w(&standardize(data)?)?;
    let thresholds = compute_thresholds(data, cfg)?;
    Ok(decide(w, thresholds))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn thresholds(tau1: f64) -> ThresholdReport {
        ThresholdReport {
            tau1,
            tau2: tau1,
            trials: 1,
            alpha: 1.0,
            seed: 0,
            trial_matrix: None,
        }
    }

    #[test]
    fn below_threshold_accepts() {
        let w = HalfVector::new(3, vec![0.1, 0.2, 0.3]).unwrap();
        let rep = decide(w, thresholds(0.5));
        assert!(!rep.rejected);
        assert!(rep.support.is_empty());
    }

    #[test]
    fn ties_do_not_reject() {
        let w = HalfVector::new(3, vec![0.1, 0.5, 0.3]).unwrap();
        assert!(!decide(w.clone(), thresholds(0.5)).rejected);
        let rep = decide(w, thresholds(0.25));
        assert!(rep.rejected);
        assert_eq!(rep.support.pairs(), vec![(0, 2), (1, 2)]);
    }
}
