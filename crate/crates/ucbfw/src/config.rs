//! Experiment configuration files.
//!
//! One YAML document describes one experiment:
//!
//! ```yaml
//! id: vertex_gap
//! model: {kind: linear, mu: [0.0, 0.5]}
//! policy: {kind: ucb_fw, deviation: theorem1}
//! feedback: {noise: bernoulli}
//! horizons: [1000, 10000, 100000]
//! seeds: {count: 200, base: 0}
//! output: {dir: out, diagnostics: false}
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use ucbfw_core::feedback::mixed_feedback_map;
use ucbfw_core::{
    DeltaSchedule, DeviationSpec, Estimator, LossModel, NoiseSpec, PiecewiseLinear, PolicyKind, PolicySpec,
    PresampleConfig, Theorem, TieBreak, TrialSpec,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Syntax(#[from] serde_yaml::Error),
    #[error("{field}: {message}")]
    Invalid { field: &'static str, message: String },
}

fn invalid(field: &'static str, e: impl ToString) -> ConfigError {
    ConfigError::Invalid { field, message: e.to_string() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Linear { mu: Vec<f64> },
    Quadratic { theta: Vec<f64> },
    ExpDesign { sigma2: Vec<f64> },
    CobbDouglas { beta: Vec<f64> },
    Markowitz { covariance: Vec<Vec<f64>>, risk_weight: f64, mu: Vec<f64> },
    Separable { mu: Vec<f64>, functions: Vec<TableConfig> },
}

/// Knots of a monotone piecewise-linear function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableConfig {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl ModelConfig {
    pub fn build(&self) -> Result<LossModel, ConfigError> {
        let field = "model";
        match self {
            ModelConfig::Linear { mu } => LossModel::linear(mu.clone()),
            ModelConfig::Quadratic { theta } => LossModel::quadratic(theta.clone()),
            ModelConfig::ExpDesign { sigma2 } => LossModel::exp_design(sigma2.clone()),
            ModelConfig::CobbDouglas { beta } => LossModel::cobb_douglas(beta.clone()),
            ModelConfig::Markowitz { covariance, risk_weight, mu } => {
                if covariance.iter().any(|row| row.len() != mu.len()) {
                    return Err(invalid("model.covariance", format!("rows must have {} entries", mu.len())));
                }
                LossModel::markowitz(covariance.concat(), *risk_weight, mu.clone())
            }
            ModelConfig::Separable { mu, functions } => {
                let fs = functions
                    .iter()
                    .map(|t| PiecewiseLinear::new(t.xs.clone(), t.ys.clone()))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| invalid("model.functions", e))?;
                LossModel::separable(mu.clone(), fs)
            }
        }
        .map_err(|e| invalid(field, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyName {
    UcbFw,
    OracleFw,
    LcbBandit,
    Uniform,
    FixedAllocation,
    PresampledUcbFw,
    DoublingUcbFw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DeviationConfig {
    Theorem1,
    Bandit,
    Noiseless,
    /// Sub-Gaussian parameter of the observations.
    Hoeffding(f64),
    Custom { theta: f64, beta: f64, sigma2: f64 },
}

impl DeviationConfig {
    pub fn build(&self) -> Result<DeviationSpec, ConfigError> {
        match *self {
            DeviationConfig::Theorem1 => Ok(DeviationSpec::theorem1()),
            DeviationConfig::Bandit => Ok(DeviationSpec::bandit()),
            DeviationConfig::Noiseless => Ok(DeviationSpec::noiseless()),
            DeviationConfig::Hoeffding(s2) => {
                if !(s2 > 0.0 && s2.is_finite()) {
                    return Err(invalid("policy.deviation", "hoeffding variance must be positive"));
                }
                Ok(DeviationSpec::hoeffding(s2))
            }
            DeviationConfig::Custom { theta, beta, sigma2 } => {
                DeviationSpec::new(theta, beta, sigma2, DeltaSchedule::InverseTSquared)
                    .map_err(|e| invalid("policy.deviation", e))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreakConfig {
    LowestIndex,
    SeededRandom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PresampleSettings {
    Known { sigma_brackets: Vec<(f64, f64)> },
    Estimated { delta: f64, z_scale: f64, budget: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub kind: PolicyName,
    #[serde(default = "default_deviation")]
    pub deviation: DeviationConfig,
    #[serde(default = "default_tie_break")]
    pub tie_break: TieBreakConfig,
    /// Target allocation for `fixed_allocation`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    /// Pre-sampling phase for `presampled_ucb_fw`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub presample: Option<PresampleSettings>,
    /// Deviation exponent for `doubling_ucb_fw`; defaults to the deviation's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

fn default_deviation() -> DeviationConfig {
    DeviationConfig::Theorem1
}

fn default_tie_break() -> TieBreakConfig {
    TieBreakConfig::LowestIndex
}

impl PolicyConfig {
    pub fn build(&self) -> Result<PolicySpec, ConfigError> {
        let deviation = self.deviation.build()?;
        let stray = |name: &str, set: bool| {
            if set {
                Err(invalid("policy", format!("`{name}` does not apply to {:?}", self.kind)))
            } else {
                Ok(())
            }
        };
        stray("weights", self.weights.is_some() && self.kind != PolicyName::FixedAllocation)?;
        stray("presample", self.presample.is_some() && self.kind != PolicyName::PresampledUcbFw)?;
        stray("beta", self.beta.is_some() && self.kind != PolicyName::DoublingUcbFw)?;
        let kind = match self.kind {
            PolicyName::UcbFw => PolicyKind::UcbFw,
            PolicyName::OracleFw => PolicyKind::OracleFw,
            PolicyName::LcbBandit => PolicyKind::LcbBandit,
            PolicyName::Uniform => PolicyKind::Uniform,
            PolicyName::FixedAllocation => PolicyKind::FixedAllocation(
                self.weights.clone().ok_or_else(|| invalid("policy.weights", "required for fixed_allocation"))?,
            ),
            PolicyName::PresampledUcbFw => PolicyKind::PresampledUcbFw(match &self.presample {
                Some(PresampleSettings::Known { sigma_brackets }) => {
                    PresampleConfig::Known { sigma_brackets: sigma_brackets.clone() }
                }
                Some(PresampleSettings::Estimated { delta, z_scale, budget }) => {
                    PresampleConfig::Estimated { delta: *delta, z_scale: *z_scale, budget: *budget }
                }
                None => return Err(invalid("policy.presample", "required for presampled_ucb_fw")),
            }),
            PolicyName::DoublingUcbFw => PolicyKind::DoublingUcbFw(self.beta.unwrap_or(deviation.exponent_beta)),
        };
        let tie_break = match self.tie_break {
            TieBreakConfig::LowestIndex => TieBreak::LowestIndex,
            TieBreakConfig::SeededRandom => TieBreak::SeededRandom,
        };
        Ok(PolicySpec { kind, deviation, tie_break })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseConfig {
    Gaussian { variance: f64 },
    Bernoulli,
    Deterministic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MapConfig {
    Identity,
    /// Three actions where actions 1 and 2 only see noise and action 3
    /// carries the informative coefficient.
    Mixed,
    Explicit(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EstimatorConfig {
    Mean,
    CenteredSquare(Vec<f64>),
    SampleVariance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackConfig {
    pub noise: NoiseConfig,
    #[serde(default = "default_map")]
    pub map: MapConfig,
    /// Defaults to centered squares for the design family, means otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<EstimatorConfig>,
}

fn default_map() -> MapConfig {
    MapConfig::Identity
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedConfig {
    pub count: u64,
    #[serde(default)]
    pub base: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// Record `epsilon_t` sums and the pathwise excess bound per seed.
    #[serde(default)]
    pub diagnostics: bool,
}

fn default_dir() -> PathBuf {
    PathBuf::from(".")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_dir(), diagnostics: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremName {
    Lemma1,
    Thm1,
    Prop2,
    Thm4,
}

impl From<TheoremName> for Theorem {
    fn from(t: TheoremName) -> Self {
        match t {
            TheoremName::Lemma1 => Theorem::Lemma1,
            TheoremName::Thm1 => Theorem::Thm1,
            TheoremName::Prop2 => Theorem::Prop2,
            TheoremName::Thm4 => Theorem::Thm4,
        }
    }
}

/// Optional pass/fail criteria reported in the summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ChecksConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_band: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theorem: Option<TheoremName>,
}

impl ChecksConfig {
    fn is_empty(&self) -> bool {
        self.slope_band.is_none() && self.theorem.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    pub model: ModelConfig,
    pub policy: PolicyConfig,
    pub feedback: FeedbackConfig,
    pub horizons: Vec<u64>,
    pub seeds: SeedConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "ChecksConfig::is_empty")]
    pub checks: ChecksConfig,
}

/// A validated experiment: the config plus the trial spec built from it.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub trial: TrialSpec,
}

impl Experiment {
    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        let s = self.config.seeds;
        (0..s.count).map(move |i| s.base.wrapping_add(i))
    }
}

impl ExperimentConfig {
    pub fn build(&self) -> Result<Experiment, ConfigError> {
        if self.id.is_empty() || self.id.contains([',', '\n', '"']) {
            return Err(invalid("id", "must be nonempty without commas, quotes or newlines"));
        }
        if self.seeds.count == 0 {
            return Err(invalid("seeds.count", "must be at least 1"));
        }
        if self.horizons.is_empty() || self.horizons[0] == 0 || self.horizons.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("horizons", "must be positive and strictly increasing"));
        }
        if let Some((lo, hi)) = self.checks.slope_band {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(invalid("checks.slope_band", "lower end exceeds upper end"));
            }
        }
        let model = self.model.build()?;
        let policy = self.policy.build()?;
        let noise = match self.feedback.noise {
            NoiseConfig::Gaussian { variance } => NoiseSpec::Gaussian { variance },
            NoiseConfig::Bernoulli => NoiseSpec::Bernoulli,
            NoiseConfig::Deterministic => NoiseSpec::Deterministic,
        };
        let mut trial = TrialSpec::new(model, policy, noise, self.horizons.clone());
        trial.feedback_map = match &self.feedback.map {
            MapConfig::Identity => (0..trial.k()).collect(),
            MapConfig::Mixed => mixed_feedback_map(),
            MapConfig::Explicit(m) => m.clone(),
        };
        if let Some(e) = &self.feedback.estimator {
            trial.estimator = match e {
                EstimatorConfig::Mean => Estimator::Mean,
                EstimatorConfig::CenteredSquare(c) => Estimator::CenteredSquare { centers: c.clone() },
                EstimatorConfig::SampleVariance => Estimator::SampleVariance,
            };
        }
        trial.diagnostics = self.output.diagnostics;
        trial.policy.validate(&trial.model).map_err(|e| invalid("policy", e))?;
        trial.validate().map_err(|e| {
            let field = match e {
                ucbfw_core::Error::Model(_) => "model",
                _ => "feedback",
            };
            invalid(field, e)
        })?;
        Ok(Experiment { config: self.clone(), trial })
    }

    /// Canonical YAML with every default spelled out.
    pub fn to_yaml(&self) -> Result<String, ConfigError> {
        let mut out = Vec::new();
        let mut ser = serde_yaml::Serializer::new(&mut out);
        serde_yaml::with::singleton_map_recursive::serialize(self, &mut ser)?;
        Ok(String::from_utf8(out).expect("YAML output is UTF-8"))
    }
}

pub fn parse_config(text: &str) -> Result<Experiment, ConfigError> {
    // Enum variants with data are written as one-key maps (`{hoeffding: 0.25}`)
    // rather than YAML tags.
    let cfg: ExperimentConfig =
        serde_yaml::with::singleton_map_recursive::deserialize(serde_yaml::Deserializer::from_str(text))?;
    cfg.build()
}

pub fn load_config(path: &Path) -> Result<Experiment, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    parse_config(&text)
}
