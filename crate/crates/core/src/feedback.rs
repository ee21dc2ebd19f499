//! Stochastic observations, empirical parameter estimates and the gradient
//! estimate with its per-coordinate deviation bounds.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::losses::{LossKind, LossModel};
use crate::math;
use crate::rng::CounterRng;
use crate::simplex::SimplexPoint;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaSchedule {
    /// `delta_t = 1 / t^2`.
    InverseTSquared,
    Fixed(f64),
}

impl DeltaSchedule {
    pub fn at(self, t: u64) -> f64 {
        match self {
            DeltaSchedule::InverseTSquared => {
                let t = t.max(1) as f64;
                1.0 / (t * t)
            }
            DeltaSchedule::Fixed(d) => d,
        }
    }
}

/// Deviation function `alpha(t, T_i, delta) = (theta log(t / delta) / T_i)^beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationSpec {
    pub scale_theta: f64,
    pub exponent_beta: f64,
    /// Largest sub-Gaussian parameter of the observations this spec covers.
    pub sigma2: f64,
    pub delta_schedule: DeltaSchedule,
}

impl DeviationSpec {
    pub fn new(scale_theta: f64, exponent_beta: f64, sigma2: f64, delta_schedule: DeltaSchedule) -> Result<Self> {
        if !(scale_theta >= 0.0 && scale_theta.is_finite()) {
            return Err(Error::Config(format!("deviation scale must be >= 0, got {scale_theta}")));
        }
        if !(exponent_beta > 0.0 && exponent_beta <= 0.5) {
            return Err(Error::Config(format!("deviation exponent must lie in (0, 1/2], got {exponent_beta}")));
        }
        if !(sigma2 >= 0.0 && sigma2.is_finite()) {
            return Err(Error::Config(format!("sigma2 must be >= 0, got {sigma2}")));
        }
        if let DeltaSchedule::Fixed(d) = delta_schedule {
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::Config(format!("fixed delta must lie in (0, 1), got {d}")));
            }
        }
        Ok(Self { scale_theta, exponent_beta, sigma2, delta_schedule })
    }

    /// `2 sqrt(log(t/delta) / T_i)` with `delta_t = 1/t^2`; covers
    /// sub-Gaussian observations with parameter up to 2.
    pub fn theorem1() -> Self {
        Self { scale_theta: 4.0, exponent_beta: 0.5, sigma2: 2.0, delta_schedule: DeltaSchedule::InverseTSquared }
    }

    /// `sqrt(2 sigma^2 log(t/delta) / T_i)`.
    pub fn hoeffding(sigma2: f64) -> Self {
        Self { scale_theta: 2.0 * sigma2, exponent_beta: 0.5, sigma2, delta_schedule: DeltaSchedule::InverseTSquared }
    }

    /// `2 sqrt(2 log(t/delta) / T_i)`, the multi-armed bandit form for
    /// 1-sub-Gaussian rewards.
    pub fn bandit() -> Self {
        Self { scale_theta: 8.0, exponent_beta: 0.5, sigma2: 1.0, delta_schedule: DeltaSchedule::InverseTSquared }
    }

    /// All deviations collapse to zero.
    pub fn noiseless() -> Self {
        Self { scale_theta: 0.0, exponent_beta: 0.5, sigma2: 0.0, delta_schedule: DeltaSchedule::InverseTSquared }
    }
}

/// Output of [`deviation`]. An unobserved coefficient has no finite bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Deviation {
    Bounded(f64),
    Unbounded,
}

impl Deviation {
    pub fn value(self) -> Option<f64> {
        match self {
            Deviation::Bounded(v) => Some(v),
            Deviation::Unbounded => None,
        }
    }
}

pub fn deviation(spec: &DeviationSpec, t: u64, pulls: u64, delta: f64) -> Result<Deviation> {
    if pulls == 0 {
        return Ok(Deviation::Unbounded);
    }
    if t == 0 {
        return Err(Error::Argument("deviation needs t >= 1".into()));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Argument(format!("delta must lie in (0, 1], got {delta}")));
    }
    let log_term = math::ln(t as f64 / delta);
    if spec.scale_theta == 0.0 || log_term <= 0.0 {
        return Ok(Deviation::Bounded(0.0));
    }
    let base = spec.scale_theta * log_term / pulls as f64;
    Ok(Deviation::Bounded(math::powf(base, spec.exponent_beta)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    Gaussian { mean: f64, variance: f64 },
    Bernoulli { mean: f64 },
    Deterministic { mean: f64 },
}

impl Distribution {
    /// Consumes exactly one draw (two `u64`) from `rng`, whatever the variant.
    pub fn sample(&self, rng: &mut CounterRng) -> f64 {
        let (u, v) = rng.uniform_pair();
        match *self {
            Distribution::Gaussian { mean, variance } => {
                // Box-Muller on (0, 1] x [0, 1); only the cosine branch is used.
                let r = math::sqrt(-2.0 * math::ln(1.0 - u));
                mean + math::sqrt(variance) * r * math::cos(core::f64::consts::TAU * v)
            }
            Distribution::Bernoulli { mean } => {
                if u < mean {
                    1.0
                } else {
                    0.0
                }
            }
            Distribution::Deterministic { mean } => mean,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Distribution::Gaussian { mean, .. }
            | Distribution::Bernoulli { mean }
            | Distribution::Deterministic { mean } => mean,
        }
    }

    pub fn subgaussian_parameter(&self) -> f64 {
        match *self {
            Distribution::Gaussian { variance, .. } => variance,
            Distribution::Bernoulli { .. } => 0.25,
            Distribution::Deterministic { .. } => 0.0,
        }
    }
}

/// Noise family shared by all actions; means come from the loss model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    Gaussian { variance: f64 },
    Bernoulli,
    Deterministic,
}

/// One distribution `nu_a` per action.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationModel {
    dists: Vec<Distribution>,
}

impl ObservationModel {
    pub fn new(dists: Vec<Distribution>) -> Self {
        Self { dists }
    }

    /// Action `a` observes the parameter of coefficient `map[a]`. For the
    /// experimental design family the observation is `N(center, sigma^2)`
    /// and the noise spec must be Gaussian (its variance is unused).
    pub fn for_model(model: &LossModel, noise: NoiseSpec, map: &[usize], centers: Option<&[f64]>) -> Result<Self> {
        let params = model.params();
        let mut dists = Vec::with_capacity(map.len());
        for &j in map {
            let mean = params[j];
            let d = if model.kind() == LossKind::ExpDesign {
                if !matches!(noise, NoiseSpec::Gaussian { .. }) {
                    return Err(Error::Config("exp_design observations must be gaussian".into()));
                }
                let center = centers.map_or(0.0, |c| c[j]);
                Distribution::Gaussian { mean: center, variance: mean }
            } else {
                match noise {
                    NoiseSpec::Gaussian { variance } => {
                        if !(variance >= 0.0 && variance.is_finite()) {
                            return Err(Error::Config(format!("noise variance must be >= 0, got {variance}")));
                        }
                        Distribution::Gaussian { mean, variance }
                    }
                    NoiseSpec::Bernoulli => {
                        if !(0.0..=1.0).contains(&mean) {
                            return Err(Error::Config(format!(
                                "bernoulli observations need parameter {j} in [0, 1], got {mean}"
                            )));
                        }
                        Distribution::Bernoulli { mean }
                    }
                    NoiseSpec::Deterministic => Distribution::Deterministic { mean },
                }
            };
            dists.push(d);
        }
        Ok(Self { dists })
    }

    pub fn dists(&self) -> &[Distribution] {
        &self.dists
    }

    pub fn draw_observation(&self, action: usize, rng: &mut CounterRng) -> f64 {
        self.dists[action].sample(rng)
    }

    pub fn max_subgaussian_parameter(&self) -> f64 {
        self.dists.iter().map(Distribution::subgaussian_parameter).fold(0.0, f64::max)
    }
}

/// How routed observations turn into parameter estimates.
#[derive(Debug, Clone, PartialEq)]
pub enum Estimator {
    /// Empirical mean of the observations.
    Mean,
    /// Mean of `(x - center_j)^2`, for variances with known centers.
    CenteredSquare { centers: Vec<f64> },
    /// Unbiased sample variance of the observations.
    SampleVariance,
}

impl Estimator {
    fn transform(&self, coefficient: usize, obs: f64) -> f64 {
        match self {
            Estimator::CenteredSquare { centers } => {
                let d = obs - centers[coefficient];
                d * d
            }
            _ => obs,
        }
    }
}

/// Gradient estimate and its deviation bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub grad: Vec<f64>,
    pub alpha: Vec<f64>,
}

/// Per-coefficient observation counts and running estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackState {
    obs_counts: Vec<u64>,
    means: Vec<f64>,
    m2: Vec<f64>,
    action_to_coeff: Vec<usize>,
    reachable: Vec<bool>,
    estimator: Estimator,
}

impl FeedbackState {
    pub fn identity(k: usize) -> Self {
        Self::new((0..k).collect(), Estimator::Mean).expect("identity map is valid")
    }

    pub fn new(action_to_coeff: Vec<usize>, estimator: Estimator) -> Result<Self> {
        let k = action_to_coeff.len();
        if k == 0 {
            return Err(Error::Config("feedback map is empty".into()));
        }
        if let Some(a) = action_to_coeff.iter().position(|&j| j >= k) {
            return Err(Error::Config(format!("feedback map sends action {a} outside 0..{k}")));
        }
        if let Estimator::CenteredSquare { centers } = &estimator {
            if centers.len() != k {
                return Err(Error::Config(format!("estimator needs {k} centers")));
            }
        }
        let mut reachable = vec![false; k];
        for &j in &action_to_coeff {
            reachable[j] = true;
        }
        Ok(Self {
            obs_counts: vec![0; k],
            means: vec![0.0; k],
            m2: vec![0.0; k],
            action_to_coeff,
            reachable,
            estimator,
        })
    }

    /// Fresh state with the same map and estimator.
    pub fn reset(&self) -> Self {
        let k = self.obs_counts.len();
        Self { obs_counts: vec![0; k], means: vec![0.0; k], m2: vec![0.0; k], ..self.clone() }
    }

    pub fn k(&self) -> usize {
        self.obs_counts.len()
    }

    pub fn obs_counts(&self) -> &[u64] {
        &self.obs_counts
    }

    pub fn total_observations(&self) -> u64 {
        self.obs_counts.iter().sum()
    }

    /// Running means of the (transformed) routed observations.
    pub fn running_means(&self) -> &[f64] {
        &self.means
    }

    pub fn action_to_coeff(&self) -> &[usize] {
        &self.action_to_coeff
    }

    pub fn is_reachable(&self, coefficient: usize) -> bool {
        self.reachable[coefficient]
    }

    pub fn is_identity(&self) -> bool {
        self.action_to_coeff.iter().enumerate().all(|(a, &j)| a == j)
    }

    pub fn estimator(&self) -> &Estimator {
        &self.estimator
    }

    /// Lowest action whose coefficient is reachable but still unobserved.
    pub fn cold_start_action(&self) -> Option<usize> {
        (0..self.k()).find(|&a| self.obs_counts[self.action_to_coeff[a]] == 0)
    }

    /// Routes `obs` from `action` to its coefficient and updates the estimate.
    pub fn route_and_update(&mut self, action: usize, obs: f64) {
        let j = self.action_to_coeff[action];
        let x = self.estimator.transform(j, obs);
        self.obs_counts[j] += 1;
        let n = self.obs_counts[j] as f64;
        let d = x - self.means[j];
        self.means[j] += d / n;
        self.m2[j] += d * (x - self.means[j]);
    }

    /// Current parameter estimates for the reachable coefficients (unreachable
    /// entries are zero).
    pub fn param_estimates(&self) -> Vec<f64> {
        (0..self.k())
            .map(|j| match self.estimator {
                Estimator::SampleVariance if self.obs_counts[j] >= 2 => self.m2[j] / (self.obs_counts[j] - 1) as f64,
                Estimator::SampleVariance => 0.0,
                _ => self.means[j],
            })
            .collect()
    }

    /// Checks that the model can be estimated through this map: only
    /// quadratic centers may have unreachable coefficients, which are then
    /// recovered from the simplex constraint.
    pub fn check_model(&self, model: &LossModel) -> Result<()> {
        if model.k() != self.k() {
            return Err(Error::Config(format!("feedback map has {} actions, model {}", self.k(), model.k())));
        }
        if self.reachable.iter().any(|r| !r) && model.kind() != LossKind::Quadratic {
            return Err(Error::Config(format!(
                "every coefficient of a {} model must be observable",
                model.kind().name()
            )));
        }
        Ok(())
    }

    /// `g = grad L(mu_hat, p)` and `alpha_i = sensitivity_i(p) * deviation`.
    pub fn gradient_estimate(
        &self,
        model: &LossModel,
        p: &SimplexPoint,
        t: u64,
        spec: &DeviationSpec,
    ) -> Result<GradientEstimate> {
        self.check_model(model)?;
        if let Some(j) = (0..self.k()).find(|&j| self.reachable[j] && self.obs_counts[j] == 0) {
            return Err(Error::Unobserved { coefficient: j });
        }
        let delta = spec.delta_schedule.at(t);
        let mut params = self.param_estimates();
        let mut dev = vec![0.0; self.k()];
        for j in (0..self.k()).filter(|&j| self.reachable[j]) {
            dev[j] = deviation(spec, t, self.obs_counts[j], delta)?
                .value()
                .expect("observed coefficient has a finite deviation");
        }
        let hidden: Vec<usize> = (0..self.k()).filter(|&j| !self.reachable[j]).collect();
        if !hidden.is_empty() {
            // Quadratic centers sum to one.
            let seen: f64 = (0..self.k()).filter(|&j| self.reachable[j]).map(|j| params[j]).sum();
            let seen_dev: f64 = dev.iter().sum();
            let n = hidden.len() as f64;
            for &j in &hidden {
                params[j] = (1.0 - seen) / n;
                dev[j] = seen_dev / n;
            }
        }
        let grad = model.gradient_with_params(&params, p)?;
        let sens = model.sensitivity(p)?;
        let alpha = dev.iter().zip(&sens).map(|(d, s)| d * s).collect();
        Ok(GradientEstimate { grad, alpha })
    }
}

/// Action map of the mixed-feedback construction on three actions: the
/// first two actions return pure noise around the known zero coefficient,
/// only the third observes the unknown first coefficient.
pub fn mixed_feedback_map() -> Vec<usize> {
    vec![2, 2, 0]
}
