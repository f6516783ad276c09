//! JSON experiment configuration.
//!
//! Unknown keys are rejected everywhere. Parsing never touches numerics;
//! [`Config::prior`] and [`Config::validate`] build and check the model.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::alloc::{OptimizerConfig, Strategy};
use crate::error::{Error, Result};
use crate::glm::LogisticModel;
use crate::linalg::SpdMatrix;
use crate::models::{HierPrior, LinearPrior, MabPrior, Prior};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Free-form label copied into the CSV `setting` column.
    #[serde(default = "default_setting")]
    pub setting: String,
    pub model: ModelSpec,
    #[serde(default)]
    pub allocation: AllocationSpec,
    #[serde(default)]
    pub algorithm: AlgorithmName,
    #[serde(default)]
    pub experiment: ExperimentSpec,
    /// Runs for `sweep`; when empty the top-level algorithm and allocation
    /// form the only run.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepEntry>,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_setting() -> String {
    "default".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelSpec {
    Mab {
        mu0: Vec<f64>,
        sigma0: Vec<f64>,
        sigma: f64,
        /// Redraw every prior mean from `U[low, high]` in each trial.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mu0_resample: Option<UniformRange>,
    },
    Linear {
        mu0: Vec<f64>,
        sigma0: Vec<Vec<f64>>,
        arms: Vec<Vec<f64>>,
        sigma: f64,
    },
    Hierarchical {
        nu: Vec<f64>,
        sigma_effects: Vec<Vec<f64>>,
        mixing: Vec<Vec<f64>>,
        sigma0: Vec<f64>,
        sigma: f64,
    },
    Logistic {
        mu0: Vec<f64>,
        sigma0: Vec<Vec<f64>>,
        arms: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformRange {
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum AlgorithmName {
    #[default]
    #[serde(rename = "pi-bai")]
    PiBai,
    #[serde(rename = "sh")]
    SequentialHalving,
    #[serde(rename = "sr")]
    SuccessiveRejects,
}

impl AlgorithmName {
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmName::PiBai => "pi-bai",
            AlgorithmName::SequentialHalving => "sh",
            AlgorithmName::SuccessiveRejects => "sr",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationSpec {
    #[serde(default = "default_strategy")]
    pub strategy: Strategy,
    /// Mixture weight on the optimized allocation.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Warm-up length; defaults to the number of arms.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warmup: Option<u64>,
    #[serde(default)]
    pub optimizer: OptimizerSpec,
}

fn default_strategy() -> Strategy {
    Strategy::Uniform
}

fn default_alpha() -> f64 {
    0.5
}

impl Default for AllocationSpec {
    fn default() -> Self {
        AllocationSpec {
            strategy: default_strategy(),
            alpha: default_alpha(),
            warmup: None,
            optimizer: OptimizerSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSpec {
    #[serde(default = "d_max_iters")]
    pub max_iters: usize,
    #[serde(default = "d_tol")]
    pub tol: f64,
    #[serde(default = "d_multistarts")]
    pub multistarts: usize,
    #[serde(default = "d_floor")]
    pub weight_floor: f64,
    /// Seed for the random starts; defaults to the experiment seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn d_max_iters() -> usize {
    OptimizerConfig::default().max_iters
}
fn d_tol() -> f64 {
    OptimizerConfig::default().tol
}
fn d_multistarts() -> usize {
    OptimizerConfig::default().multistarts
}
fn d_floor() -> f64 {
    OptimizerConfig::default().weight_floor
}

impl Default for OptimizerSpec {
    fn default() -> Self {
        OptimizerSpec {
            max_iters: d_max_iters(),
            tol: d_tol(),
            multistarts: d_multistarts(),
            weight_floor: d_floor(),
            seed: None,
        }
    }
}

impl OptimizerSpec {
    pub fn resolve(&self, default_seed: u64) -> OptimizerConfig {
        OptimizerConfig {
            max_iters: self.max_iters,
            tol: self.tol,
            multistarts: self.multistarts,
            weight_floor: self.weight_floor,
            seed: self.seed.unwrap_or(default_seed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "poe")]
    Poe,
    #[serde(rename = "simple_regret")]
    SimpleRegret,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Strictly increasing budgets.
    #[serde(default)]
    pub budgets: Vec<u64>,
    #[serde(default = "d_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "d_metrics")]
    pub metrics: Vec<Metric>,
}

fn d_trials() -> u64 {
    1000
}
fn d_metrics() -> Vec<Metric> {
    vec![Metric::Poe, Metric::SimpleRegret]
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            budgets: Vec::new(),
            trials: d_trials(),
            seed: 0,
            metrics: d_metrics(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepEntry {
    pub algorithm: AlgorithmName,
    /// Ignored for the adaptive baselines.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allocation: Option<AllocationSpec>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn matrix(rows: &[Vec<f64>], field: &str) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(config_err(format!(
            "`{field}` must be a non-empty rectangular matrix"
        )));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn spd(rows: &[Vec<f64>], field: &str) -> Result<SpdMatrix> {
    let m = matrix(rows, field)?;
    if m.nrows() != m.ncols() {
        return Err(config_err(format!("`{field}` must be square")));
    }
    SpdMatrix::new(m).map_err(|e| config_err(format!("`{field}`: {e}")))
}

fn vectors(rows: &[Vec<f64>]) -> Vec<DVector<f64>> {
    rows.iter().map(|r| DVector::from_vec(r.clone())).collect()
}

impl Config {
    pub fn from_json(text: &str) -> Result<Config> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Config::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks everything that can be checked before running.
    pub fn validate(&self) -> Result<()> {
        let prior = self.prior()?;
        let e = &self.experiment;
        if e.trials == 0 {
            return Err(config_err("`experiment.trials` must be at least 1"));
        }
        if e.budgets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(config_err(
                "`experiment.budgets` must be strictly increasing",
            ));
        }
        if e.metrics.is_empty() {
            return Err(config_err("`experiment.metrics` must not be empty"));
        }
        if let ModelSpec::Mab {
            mu0_resample: Some(r),
            ..
        } = &self.model
        {
            if !(r.low.is_finite() && r.high.is_finite() && r.low < r.high) {
                return Err(config_err("`model.mu0_resample` needs finite low < high"));
            }
        }
        for (idx, run) in self.runs().iter().enumerate() {
            let here = |m: &str| {
                if self.sweep.is_empty() {
                    config_err(format!("`allocation`: {m}"))
                } else {
                    config_err(format!("`sweep[{idx}].allocation`: {m}"))
                }
            };
            if run.algorithm != AlgorithmName::PiBai {
                continue;
            }
            let a = &run.allocation;
            if !(0.0..=1.0).contains(&a.alpha) {
                return Err(here("alpha must lie in [0, 1]"));
            }
            a.optimizer
                .resolve(0)
                .validate()
                .map_err(|e| here(&e.to_string()))?;
            if a.warmup == Some(0) {
                return Err(here("warmup must be at least 1"));
            }
            let mab_only = matches!(a.strategy, Strategy::Mixture | Strategy::Heuristic);
            if mab_only && !matches!(prior, Prior::Mab(_)) {
                return Err(here(&format!(
                    "strategy `{}` needs the mab family",
                    a.strategy
                )));
            }
            if a.strategy == Strategy::Opt && matches!(prior, Prior::Logistic(_)) {
                return Err(here(
                    "strategy `opt` has no bound to minimize for the logistic family",
                ));
            }
        }
        Ok(())
    }

    pub fn prior(&self) -> Result<Prior> {
        let wrap = |e: Error| match e {
            Error::Config(_) => e,
            other => config_err(format!("`model`: {other}")),
        };
        Ok(match &self.model {
            ModelSpec::Mab {
                mu0, sigma0, sigma, ..
            } => Prior::Mab(MabPrior::new(mu0.clone(), sigma0.clone(), *sigma).map_err(wrap)?),
            ModelSpec::Linear {
                mu0,
                sigma0,
                arms,
                sigma,
            } => Prior::Linear(
                LinearPrior::new(
                    DVector::from_vec(mu0.clone()),
                    spd(sigma0, "model.sigma0")?,
                    vectors(arms),
                    *sigma,
                )
                .map_err(wrap)?,
            ),
            ModelSpec::Hierarchical {
                nu,
                sigma_effects,
                mixing,
                sigma0,
                sigma,
            } => Prior::Hier(
                HierPrior::new(
                    DVector::from_vec(nu.clone()),
                    spd(sigma_effects, "model.sigma_effects")?,
                    vectors(mixing),
                    sigma0.clone(),
                    *sigma,
                )
                .map_err(wrap)?,
            ),
            ModelSpec::Logistic { mu0, sigma0, arms } => Prior::Logistic(
                LogisticModel::new(
                    DVector::from_vec(mu0.clone()),
                    spd(sigma0, "model.sigma0")?,
                    vectors(arms),
                )
                .map_err(wrap)?,
            ),
        })
    }

    pub fn mu0_resample(&self) -> Option<UniformRange> {
        match &self.model {
            ModelSpec::Mab { mu0_resample, .. } => *mu0_resample,
            _ => None,
        }
    }

    /// The runs a sweep performs, in order.
    pub fn runs(&self) -> Vec<RunSpec> {
        if self.sweep.is_empty() {
            vec![RunSpec {
                algorithm: self.algorithm,
                allocation: self.allocation.clone(),
            }]
        } else {
            self.sweep
                .iter()
                .map(|s| RunSpec {
                    algorithm: s.algorithm,
                    allocation: s
                        .allocation
                        .clone()
                        .unwrap_or_else(|| self.allocation.clone()),
                })
                .collect()
        }
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub algorithm: AlgorithmName,
    pub allocation: AllocationSpec,
}
