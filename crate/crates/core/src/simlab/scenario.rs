// SPDX-License-Identifier: MIT OR Apache-2.0

//! Simulation scenarios: correlation structures before and after the break,
//! innovation distribution and variance model.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{CorrError, Result};

/// Correlation structure of a scenario. `H0` keeps `R1 = R2 = I`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseId {
    H0,
    Case1,
    Case2,
    Case3,
    Case4,
    Case5,
    Case6,
    Case7,
    Case8,
    Case9,
}

impl CaseId {
    pub fn number(self) -> u8 {
        match self {
            CaseId::H0 => 0,
            CaseId::Case1 => 1,
            CaseId::Case2 => 2,
            CaseId::Case3 => 3,
            CaseId::Case4 => 4,
            CaseId::Case5 => 5,
            CaseId::Case6 => 6,
            CaseId::Case7 => 7,
            CaseId::Case8 => 8,
            CaseId::Case9 => 9,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        Some(match n {
            0 => CaseId::H0,
            1 => CaseId::Case1,
            2 => CaseId::Case2,
            3 => CaseId::Case3,
            4 => CaseId::Case4,
            5 => CaseId::Case5,
            6 => CaseId::Case6,
            7 => CaseId::Case7,
            8 => CaseId::Case8,
            9 => CaseId::Case9,
            _ => return None,
        })
    }

    /// Break fraction fixed by the case, if any (Cases 1-5).
    pub fn fixed_beta(self) -> Option<(f64, Option<f64>)> {
        match self {
            CaseId::Case1 | CaseId::Case2 => Some((0.5, None)),
            CaseId::Case3 => Some((0.75, None)),
            CaseId::Case4 | CaseId::Case5 => Some((1.0 / 3.0, Some(2.0 / 3.0))),
            _ => None,
        }
    }

    pub fn is_null(self) -> bool {
        self == CaseId::H0
    }

    /// Correlation matrices per segment, column-major `p x p`.
    pub fn correlations(self, p: usize) -> Vec<Vec<f64>> {
        let identity = block_matrix(p, &[]);
        let equi = |rho: f64| block_matrix(p, &[(0, p, rho)]);
        match self {
            CaseId::H0 => vec![identity.clone(), identity],
            CaseId::Case1 | CaseId::Case3 | CaseId::Case6 => vec![identity, equi(0.5)],
            CaseId::Case2 | CaseId::Case7 => vec![identity, block_matrix(p, &[(0, p / 2, 0.5)])],
            CaseId::Case4 => vec![identity.clone(), equi(0.5), identity],
            CaseId::Case5 => vec![identity, equi(0.5), equi(0.9)],
            CaseId::Case8 => {
                let (a, b) = (p / 3, 2 * p / 3);
                vec![identity, block_matrix(p, &[(0, a, 0.5), (a, b, 0.2), (b, p, 0.8)])]
            }
            CaseId::Case9 => {
                let mut r2 = identity;
                for i in 0..p.saturating_sub(1) {
                    r2[i * p + i + 1] = -0.5;
                    r2[(i + 1) * p + i] = -0.5;
                }
                vec![equi(0.5), r2]
            }
        }
    }
}

/// Unit diagonal plus constant off-diagonal blocks `[start, end)`.
fn block_matrix(p: usize, blocks: &[(usize, usize, f64)]) -> Vec<f64> {
    let mut m = vec![0.0; p * p];
    for i in 0..p {
        m[i * p + i] = 1.0;
    }
    for &(start, end, rho) in blocks {
        for i in start..end {
            for j in start..end {
                if i != j {
                    m[j * p + i] = rho;
                }
            }
        }
    }
    m
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    #[default]
    Gaussian,
    /// Multivariate Student-t with 5 degrees of freedom (one mixing draw
    /// per time point), rescaled to unit variance.
    StudentT,
}

impl Distribution {
    pub fn name(self) -> &'static str {
        match self {
            Distribution::Gaussian => "gaussian",
            Distribution::StudentT => "student_t",
        }
    }
}

impl FromStr for Distribution {
    type Err = CorrError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(Distribution::Gaussian),
            "student_t" | "student-t" | "t" | "t5" => Ok(Distribution::StudentT),
            other => Err(CorrError::InvalidScenario(format!("unknown distribution {other:?}"))),
        }
    }
}

/// Per-variable, per-time scale of the innovations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VarianceModel {
    #[default]
    Unit,
    /// `sigma_i ~ U(low, high)` drawn once per variable.
    UniformHetero { low: f64, high: f64 },
    /// `y_t = psi y_{t-1} + e_t` with unit scales.
    Var1 { psi: f64 },
    /// VAR(1) with per-variable scales from `U(low, high)`.
    Var1Hetero { psi: f64, low: f64, high: f64 },
    /// `sigma²_{l,i} = (1 - a1 - a2) + a1 e²_{l,i-1} + a2 sigma²_{l,i-1}`.
    Garch { alpha1: f64, alpha2: f64 },
    /// `sigma_{l,i} = sigma0 (1 + delta I(i > T/2))`.
    UnconditionalShift { sigma0: f64, delta: f64 },
}

impl VarianceModel {
    pub const HETERO: VarianceModel = VarianceModel::UniformHetero { low: 1.0, high: 21.0 };
    pub const SERIAL: VarianceModel = VarianceModel::Var1 { psi: 0.8 };
    pub const SERIAL_HETERO: VarianceModel = VarianceModel::Var1Hetero { psi: 0.8, low: 1.0, high: 21.0 };
    pub const GARCH: VarianceModel = VarianceModel::Garch { alpha1: 0.1, alpha2: 0.89 };
    pub const SHIFT: VarianceModel = VarianceModel::UnconditionalShift { sigma0: 1.0, delta: 1.0 };

    pub fn name(self) -> &'static str {
        match self {
            VarianceModel::Unit => "unit",
            VarianceModel::UniformHetero { .. } => "uniform_hetero",
            VarianceModel::Var1 { .. } => "var1",
            VarianceModel::Var1Hetero { .. } => "var1_hetero",
            VarianceModel::Garch { .. } => "garch",
            VarianceModel::UnconditionalShift { .. } => "unconditional_shift",
        }
    }

    pub fn validate(self) -> Result<()> {
        let bad = |msg: String| Err(CorrError::InvalidScenario(msg));
        match self {
            VarianceModel::Unit => Ok(()),
            VarianceModel::UniformHetero { low, high } | VarianceModel::Var1Hetero { low, high, .. }
                if !(low > 0.0 && high >= low && high.is_finite()) =>
            {
                bad(format!("scale range [{low}, {high}] must be positive and ordered"))
            }
            VarianceModel::Var1 { psi } | VarianceModel::Var1Hetero { psi, .. } if !(psi.abs() < 1.0) => {
                bad(format!("psi must satisfy |psi| < 1, got {psi}"))
            }
            VarianceModel::Garch { alpha1, alpha2 }
                if !(alpha1 >= 0.0 && alpha2 >= 0.0 && alpha1 + alpha2 < 1.0) =>
            {
                bad(format!("garch weights ({alpha1}, {alpha2}) must be nonnegative with sum < 1"))
            }
            VarianceModel::UnconditionalShift { sigma0, delta } if !(sigma0 > 0.0 && delta > -1.0) => {
                bad(format!("shift needs sigma0 > 0 and delta > -1, got ({sigma0}, {delta})"))
            }
            _ => Ok(()),
        }
    }
}

/// A fully specified simulation setting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub case: CaseId,
    pub p: usize,
    #[serde(rename = "T")]
    pub len: usize,
    pub beta: f64,
    /// Second break fraction (three-segment cases only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,
    #[serde(default)]
    pub distribution: Distribution,
    #[serde(default)]
    pub variance: VarianceModel,
    #[serde(default)]
    pub seed: u64,
}

impl SimScenario {
    /// Scenario with the case's own break fractions (0.5 where the case
    /// leaves it free).
    pub fn new(case: CaseId, p: usize, len: usize) -> Self {
        let (beta, beta2) = case.fixed_beta().unwrap_or((0.5, None));
        Self {
            case,
            p,
            len,
            beta,
            beta2,
            distribution: Distribution::Gaussian,
            variance: VarianceModel::Unit,
            seed: 0,
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_distribution(mut self, distribution: Distribution) -> Self {
        self.distribution = distribution;
        self
    }

    pub fn with_variance(mut self, variance: VarianceModel) -> Self {
        self.variance = variance;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CorrError::InvalidScenario(msg));
        if self.p < 2 {
            return bad(format!("p must be at least 2, got {}", self.p));
        }
        if self.len < 5 {
            return bad(format!("T must be at least 5, got {}", self.len));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad(format!("beta must lie in (0, 1), got {}", self.beta));
        }
        let segments = self.case.correlations(0).len();
        match (segments, self.beta2) {
            (3, None) => return bad("three-segment case needs beta2".into()),
            (3, Some(b2)) if !(b2 > self.beta && b2 < 1.0) => {
                return bad(format!("beta2 must lie in (beta, 1), got {b2}"))
            }
            (2, Some(_)) => return bad("beta2 is only used by three-segment cases".into()),
            _ => {}
        }
        self.variance.validate()
    }

    /// First post-break column (0-based), `floor(beta T)`.
    pub fn change_point(&self) -> usize {
        floor_index(self.beta, self.len)
    }

    /// Segment boundaries `[0, t0, (t1,) T]`.
    pub fn boundaries(&self) -> Vec<usize> {
        let mut b = vec![0, self.change_point()];
        if let Some(b2) = self.beta2 {
            b.push(floor_index(b2, self.len));
        }
        b.push(self.len);
        b
    }

    /// Flat `key=value` lines, one per field.
    pub fn to_config(&self) -> String {
        let mut out = format!(
            "case={}\np={}\nT={}\nbeta={}\n",
            self.case.number(),
            self.p,
            self.len,
            self.beta
        );
        if let Some(b2) = self.beta2 {
            out.push_str(&format!("beta2={b2}\n"));
        }
        out.push_str(&format!("dist={}\n", self.distribution.name()));
        out.push_str(&format!("variance={}\n", self.variance.name()));
        match self.variance {
            VarianceModel::Unit => {}
            VarianceModel::UniformHetero { low, high } => {
                out.push_str(&format!("sigma_low={low}\nsigma_high={high}\n"))
            }
            VarianceModel::Var1 { psi } => out.push_str(&format!("psi={psi}\n")),
            VarianceModel::Var1Hetero { psi, low, high } => {
                out.push_str(&format!("psi={psi}\nsigma_low={low}\nsigma_high={high}\n"))
            }
            VarianceModel::Garch { alpha1, alpha2 } => {
                out.push_str(&format!("alpha1={alpha1}\nalpha2={alpha2}\n"))
            }
            VarianceModel::UnconditionalShift { sigma0, delta } => {
                out.push_str(&format!("sigma0={sigma0}\ndelta={delta}\n"))
            }
        }
        out.push_str(&format!("seed={}\n", self.seed));
        out
    }

    /// Parses the format written by [`SimScenario::to_config`]. Blank lines
    /// and `#` comments are skipped; missing keys take their defaults.
    pub fn from_config(text: &str) -> Result<Self> {
        let mut kv: Vec<(String, String)> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CorrError::InvalidScenario(format!("line {}: expected key=value", n + 1))
            })?;
            kv.push((k.trim().to_string(), v.trim().to_string()));
        }
        let get = |key: &str| kv.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| CorrError::InvalidScenario(format!("{key}: cannot parse {v:?}")))
        }
        for (k, _) in &kv {
            if !KNOWN_KEYS.contains(&k.as_str()) {
                return Err(CorrError::InvalidScenario(format!("unknown key {k:?}")));
            }
        }

        let case = match get("case") {
            Some(v) => CaseId::from_number(num("case", v)?)
                .ok_or_else(|| CorrError::InvalidScenario(format!("unknown case {v}")))?,
            None => CaseId::Case6,
        };
        let p = num("p", get("p").ok_or_else(|| CorrError::InvalidScenario("missing p".into()))?)?;
        let len = num("T", get("T").ok_or_else(|| CorrError::InvalidScenario("missing T".into()))?)?;
        let mut sc = SimScenario::new(case, p, len);
        if let Some(v) = get("beta") {
            sc.beta = num("beta", v)?;
        }
        if let Some(v) = get("beta2") {
            sc.beta2 = Some(num("beta2", v)?);
        }
        if let Some(v) = get("dist") {
            sc.distribution = v.parse()?;
        }
        let f = |key: &str, default: f64| -> Result<f64> {
            get(key).map_or(Ok(default), |v| num(key, v))
        };
        sc.variance = match get("variance").unwrap_or("unit") {
            "unit" => VarianceModel::Unit,
            "uniform_hetero" => VarianceModel::UniformHetero {
                low: f("sigma_low", 1.0)?,
                high: f("sigma_high", 21.0)?,
            },
            "var1" => VarianceModel::Var1 { psi: f("psi", 0.8)? },
            "var1_hetero" => VarianceModel::Var1Hetero {
                psi: f("psi", 0.8)?,
                low: f("sigma_low", 1.0)?,
                high: f("sigma_high", 21.0)?,
            },
            "garch" => VarianceModel::Garch {
                alpha1: f("alpha1", 0.1)?,
                alpha2: f("alpha2", 0.89)?,
            },
            "unconditional_shift" => VarianceModel::UnconditionalShift {
                sigma0: f("sigma0", 1.0)?,
                delta: f("delta", 1.0)?,
            },
            other => return Err(CorrError::InvalidScenario(format!("unknown variance model {other:?}"))),
        };
        if let Some(v) = get("seed") {
            sc.seed = num("seed", v)?;
        }
        sc.validate()?;
        Ok(sc)
    }
}

const KNOWN_KEYS: &[&str] = &[
    "case", "p", "T", "beta", "beta2", "dist", "variance", "sigma_low", "sigma_high", "psi", "alpha1",
    "alpha2", "sigma0", "delta", "seed",
];

fn floor_index(frac: f64, len: usize) -> usize {
    (frac * len as f64 + 1e-9).floor() as usize
}

impl fmt::Display for SimScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "case {} p={} T={} beta={} {} {}",
            self.case.number(),
            self.p,
            self.len,
            self.beta,
            self.distribution.name(),
            self.variance.name()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn change_point_index() {
        let sc = SimScenario::new(CaseId::Case6, 10, 100);
        assert_eq!(sc.change_point(), 50);
        assert_eq!(sc.clone().with_beta(0.7).change_point(), 70);
        assert_eq!(SimScenario::new(CaseId::Case4, 10, 100).boundaries(), vec![0, 33, 66, 100]);
    }

    #[test]
    fn case8_blocks() {
        let r = CaseId::Case8.correlations(7);
        let r2 = &r[1];
        let at = |i: usize, j: usize| r2[j * 7 + i];
        assert_eq!(at(0, 1), 0.5);
        assert_eq!(at(2, 3), 0.2);
        assert_eq!(at(4, 5), 0.8);
        assert_eq!(at(5, 6), 0.8);
        assert_eq!(at(1, 2), 0.0);
        assert_eq!(at(3, 4), 0.0);
    }

    #[test]
    fn case9_tridiagonal() {
        let r = CaseId::Case9.correlations(3);
        assert_eq!(r[1], vec![1.0, -0.5, 0.0, -0.5, 1.0, -0.5, 0.0, -0.5, 1.0]);
        assert_eq!(r[0][1], 0.5);
    }

    #[test]
    fn config_round_trip() {
        let sc = SimScenario::new(CaseId::Case8, 50, 200)
            .with_beta(0.7)
            .with_distribution(Distribution::StudentT)
            .with_variance(VarianceModel::GARCH)
            .with_seed(99);
        assert_eq!(SimScenario::from_config(&sc.to_config()).unwrap(), sc);
        let five = SimScenario::new(CaseId::Case5, 20, 90);
        assert_eq!(SimScenario::from_config(&five.to_config()).unwrap(), five);
    }

    #[test]
    fn config_errors() {
        assert!(SimScenario::from_config("p=5\nT=100\nbogus=1").is_err());
        assert!(SimScenario::from_config("p=5").is_err());
        assert!(SimScenario::from_config("p=5\nT=100\nbeta=1.5").is_err());
        assert!(SimScenario::from_config("p=5\nT=100\nvariance=garch\nalpha1=0.5\nalpha2=0.6").is_err());
    }
}
