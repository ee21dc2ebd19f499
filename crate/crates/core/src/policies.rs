//! Action-selection policies.
//!
//! [`ucb_fw_select`] is the upper-confidence Frank-Wolfe rule: it steps
//! toward the vertex `e_i` minimizing `g_hat_i - alpha_i`. The remaining
//! policies are baselines ([`lcb_bandit_select`], oracle Frank-Wolfe,
//! uniform, fixed allocation) and two wrappers: pre-sampling with
//! allocation floors for the experimental design family, and a doubling
//! schedule that restarts the estimators on growing blocks.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::feedback::{deviation, DeviationSpec, Estimator, FeedbackState};
use crate::losses::{LossKind, LossModel};
use crate::math;
use crate::rng::{CounterRng, POLICY_STREAM};
use crate::simplex::{OccupationState, SimplexPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieBreak {
    LowestIndex,
    SeededRandom,
}

/// Resolves exact ties in an argmin.
#[derive(Debug, Clone)]
pub struct TieBreaker {
    mode: TieBreak,
    rng: CounterRng,
}

impl TieBreaker {
    pub fn new(mode: TieBreak, seed: u64) -> Self {
        Self { mode, rng: CounterRng::new(seed, POLICY_STREAM + 1) }
    }

    pub fn lowest_index() -> Self {
        Self::new(TieBreak::LowestIndex, 0)
    }

    pub fn argmin(&mut self, values: &[f64]) -> usize {
        let best = values.iter().copied().fold(f64::INFINITY, f64::min);
        let first = values.iter().position(|&v| v == best).unwrap_or(0);
        match self.mode {
            TieBreak::LowestIndex => first,
            TieBreak::SeededRandom => {
                let ties: Vec<usize> = (0..values.len()).filter(|&i| values[i] == best).collect();
                if ties.len() < 2 {
                    return first;
                }
                let (u, _) = self.rng.uniform_pair();
                ties[((u * ties.len() as f64) as usize).min(ties.len() - 1)]
            }
        }
    }
}

/// Pre-sampling configuration for the experimental design family.
#[derive(Debug, Clone, PartialEq)]
pub enum PresampleConfig {
    /// Known brackets `[lo_i, hi_i]` on the standard deviations `sigma_i`.
    Known { sigma_brackets: Vec<(f64, f64)> },
    /// Brackets estimated per arm with the variance stopping rule, run on
    /// `min(1, (x - center)^2 / z_scale)`.
    Estimated { delta: f64, z_scale: f64, budget: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolicyKind {
    UcbFw,
    OracleFw,
    LcbBandit,
    Uniform,
    FixedAllocation(Vec<f64>),
    PresampledUcbFw(PresampleConfig),
    DoublingUcbFw(f64),
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::UcbFw => "ucb_fw",
            PolicyKind::OracleFw => "oracle_fw",
            PolicyKind::LcbBandit => "lcb_bandit",
            PolicyKind::Uniform => "uniform",
            PolicyKind::FixedAllocation(_) => "fixed_allocation",
            PolicyKind::PresampledUcbFw(_) => "presampled_ucb_fw",
            PolicyKind::DoublingUcbFw(_) => "doubling_ucb_fw",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    pub deviation: DeviationSpec,
    pub tie_break: TieBreak,
}

impl PolicySpec {
    pub fn new(kind: PolicyKind) -> Self {
        Self { kind, deviation: DeviationSpec::theorem1(), tie_break: TieBreak::LowestIndex }
    }

    pub fn validate(&self, model: &LossModel) -> Result<()> {
        match &self.kind {
            PolicyKind::FixedAllocation(w) => {
                SimplexPoint::new(w.clone())
                    .map_err(|e| Error::Config(format!("fixed allocation weights: {e}")))?;
                if w.len() != model.k() {
                    return Err(Error::Config(format!("fixed allocation needs {} weights", model.k())));
                }
            }
            PolicyKind::PresampledUcbFw(cfg) => {
                if model.kind() != LossKind::ExpDesign {
                    return Err(Error::Config("pre-sampling needs an exp_design model".into()));
                }
                match cfg {
                    PresampleConfig::Known { sigma_brackets } => {
                        if sigma_brackets.len() != model.k()
                            || sigma_brackets.iter().any(|&(lo, hi)| !(lo >= 0.0 && hi >= lo && hi > 0.0))
                        {
                            return Err(Error::Config("sigma brackets must satisfy 0 <= lo <= hi, hi > 0".into()));
                        }
                    }
                    PresampleConfig::Estimated { delta, z_scale, budget } => {
                        if !(*delta > 0.0 && *delta < 1.0) || !(*z_scale > 0.0) || *budget == 0 {
                            return Err(Error::Config("pre-sampling needs delta in (0,1), z_scale > 0, budget >= 1".into()));
                        }
                    }
                }
            }
            PolicyKind::DoublingUcbFw(beta)
                if !(*beta > 0.0 && *beta <= 0.5) => {
                    return Err(Error::Config(format!("doubling beta must lie in (0, 1/2], got {beta}")));
                }
            _ => {}
        }
        Ok(())
    }

    /// Instantiates the policy for one trial.
    pub fn build(&self, model: &LossModel, feedback: FeedbackState, seed: u64) -> Result<Box<dyn Policy>> {
        self.validate(model)?;
        feedback.check_model(model)?;
        let tie = TieBreaker::new(self.tie_break, seed);
        let ucb = UcbFw { fb: feedback.clone(), deviation: self.deviation, tie: tie.clone() };
        Ok(match &self.kind {
            PolicyKind::UcbFw => Box::new(ucb),
            PolicyKind::LcbBandit => Box::new(LcbBandit { fb: feedback, deviation: self.deviation, tie }),
            PolicyKind::OracleFw => Box::new(OracleFw),
            PolicyKind::Uniform => Box::new(Uniform { rng: CounterRng::new(seed, POLICY_STREAM) }),
            PolicyKind::FixedAllocation(w) => Box::new(FixedAllocation { weights: w.clone() }),
            PolicyKind::PresampledUcbFw(cfg) => Box::new(PresampledUcbFw::new(ucb, cfg, model)?),
            PolicyKind::DoublingUcbFw(beta) => Box::new(DoublingUcbFw::new(ucb, *beta)),
        })
    }
}

/// A per-trial policy instance.
pub trait Policy {
    /// Chooses the next action given the occupation state before the round.
    fn select(&mut self, occ: &OccupationState, model: &LossModel) -> Result<usize>;

    /// Receives the observation for `action`; `occ` already includes it.
    fn observe(&mut self, action: usize, obs: f64, occ: &OccupationState);

    fn feedback(&self) -> Option<&FeedbackState> {
        None
    }

    /// Index of the current estimator block (doubling wrapper only).
    fn block_index(&self) -> u32 {
        0
    }

    /// Round at which pre-sampling finished and the allocation floors.
    fn presample_floors(&self) -> Option<(u64, &[f64])> {
        None
    }
}

/// Upper-confidence Frank-Wolfe selection.
///
/// Until every reachable coefficient has one observation, returns the lowest
/// action feeding an unobserved coefficient; under the identity map this is
/// a round robin over the first `K` rounds. Afterwards returns
/// `argmin_i (g_hat_i - alpha_i)` at `p_t` with `delta_t` from the spec.
pub fn ucb_fw_select(
    fb: &FeedbackState,
    occ: &OccupationState,
    model: &LossModel,
    spec: &DeviationSpec,
    tie: &mut TieBreaker,
) -> Result<usize> {
    if let Some(a) = fb.cold_start_action() {
        return Ok(a);
    }
    let p = occ.occupation_vector()?;
    let est = fb.gradient_estimate(model, &p, occ.t(), spec)?;
    let index: Vec<f64> = est.grad.iter().zip(&est.alpha).map(|(g, a)| g - a).collect();
    Ok(tie.argmin(&index))
}

/// Classical lower-confidence index on the raw empirical means.
pub fn lcb_bandit_select(
    fb: &FeedbackState,
    occ: &OccupationState,
    spec: &DeviationSpec,
    tie: &mut TieBreaker,
) -> Result<usize> {
    if let Some(a) = fb.cold_start_action() {
        return Ok(a);
    }
    let t = occ.t();
    let delta = spec.delta_schedule.at(t);
    let means = fb.param_estimates();
    let mut index = Vec::with_capacity(fb.k());
    for (j, m) in means.iter().enumerate() {
        let d = deviation(spec, t, fb.obs_counts()[j], delta)?
            .value()
            .ok_or(Error::Unobserved { coefficient: j })?;
        index.push(m - d);
    }
    Ok(tie.argmin(&index))
}

/// Frank-Wolfe vertex for the true gradient: `argmin_i grad_i L(p)`.
pub fn oracle_fw_select(model: &LossModel, p: &SimplexPoint) -> Result<usize> {
    let g = model.loss_gradient(p)?;
    Ok(TieBreaker::lowest_index().argmin(&g))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    /// `grad_chosen L(p) - grad_oracle L(p)`, the excess over the oracle step.
    pub epsilon_t: f64,
    /// Frank-Wolfe duality gap `grad L(p) . (p - e_oracle)`.
    pub fw_gap: f64,
    pub chosen: usize,
    pub oracle_choice: usize,
}

pub fn epsilon_diagnostic(model: &LossModel, p: &SimplexPoint, chosen: usize) -> Result<StepDiagnostics> {
    let g = model.loss_gradient(p)?;
    if chosen >= g.len() {
        return Err(Error::ActionOutOfRange { action: chosen, k: g.len() });
    }
    let oracle_choice = TieBreaker::lowest_index().argmin(&g);
    let along: f64 = g.iter().zip(p.coords()).map(|(a, b)| a * b).sum();
    Ok(StepDiagnostics {
        epsilon_t: g[chosen] - g[oracle_choice],
        fw_gap: (along - g[oracle_choice]).max(0.0),
        chosen,
        oracle_choice,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingOutcome {
    pub tau: u64,
    pub mean: f64,
    pub triggered: bool,
}

/// Streaming form of the variance stopping rule: stop at the first `tau`
/// with `mean_tau >= sqrt(2 log(2T/delta) / tau)`.
#[derive(Debug, Clone)]
pub struct StoppingRule {
    horizon: u64,
    log_term: f64,
    n: u64,
    sum: f64,
    outcome: Option<StoppingOutcome>,
}

impl StoppingRule {
    pub fn new(horizon: u64, delta: f64) -> Result<Self> {
        if horizon == 0 || !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Argument(format!("stopping rule needs T >= 1 and delta in (0,1), got {horizon}, {delta}")));
        }
        Ok(Self { horizon, log_term: math::ln(2.0 * horizon as f64 / delta), n: 0, sum: 0.0, outcome: None })
    }

    pub fn threshold(&self, tau: u64) -> f64 {
        math::sqrt(2.0 * self.log_term / tau as f64)
    }

    /// Feeds one value; returns the outcome once the rule has stopped.
    pub fn push(&mut self, z: f64) -> Result<Option<StoppingOutcome>> {
        if self.outcome.is_some() {
            return Ok(self.outcome);
        }
        if !(0.0..=1.0).contains(&z) {
            return Err(Error::StreamDomain { index: self.n as usize, value: z });
        }
        self.n += 1;
        self.sum += z;
        let mean = self.sum / self.n as f64;
        if mean >= self.threshold(self.n) {
            self.outcome = Some(StoppingOutcome { tau: self.n, mean, triggered: true });
        } else if self.n == self.horizon {
            self.outcome = Some(StoppingOutcome { tau: self.n, mean, triggered: false });
        }
        Ok(self.outcome)
    }

    pub fn outcome(&self) -> Option<StoppingOutcome> {
        self.outcome
    }
}

/// Runs the stopping rule over at most `horizon` values of `stream`. When it
/// never triggers the outcome reports `tau = horizon` (or the stream length
/// if shorter) with `triggered = false`.
pub fn variance_stopping_tau(stream: impl IntoIterator<Item = f64>, horizon: u64, delta: f64) -> Result<StoppingOutcome> {
    let mut rule = StoppingRule::new(horizon, delta)?;
    for z in stream.into_iter().take(horizon as usize) {
        if let Some(out) = rule.push(z)? {
            return Ok(out);
        }
    }
    let n = rule.n.max(1);
    Ok(StoppingOutcome { tau: rule.n, mean: rule.sum / n as f64, triggered: false })
}

/// End of the `j`-th doubling block, `ceil(exp((1/(1-beta))^j))`, saturating.
pub fn block_boundary(beta: f64, j: u32) -> u64 {
    let x = math::exp(math::powf(1.0 / (1.0 - beta), f64::from(j)));
    if x.is_finite() && x < 1.8e19 {
        math::ceil(x) as u64
    } else {
        u64::MAX
    }
}

#[derive(Debug, Clone)]
struct UcbFw {
    fb: FeedbackState,
    deviation: DeviationSpec,
    tie: TieBreaker,
}

impl Policy for UcbFw {
    fn select(&mut self, occ: &OccupationState, model: &LossModel) -> Result<usize> {
        ucb_fw_select(&self.fb, occ, model, &self.deviation, &mut self.tie)
    }

    fn observe(&mut self, action: usize, obs: f64, _occ: &OccupationState) {
        self.fb.route_and_update(action, obs);
    }

    fn feedback(&self) -> Option<&FeedbackState> {
        Some(&self.fb)
    }
}

struct LcbBandit {
    fb: FeedbackState,
    deviation: DeviationSpec,
    tie: TieBreaker,
}

impl Policy for LcbBandit {
    fn select(&mut self, occ: &OccupationState, _model: &LossModel) -> Result<usize> {
        lcb_bandit_select(&self.fb, occ, &self.deviation, &mut self.tie)
    }

    fn observe(&mut self, action: usize, obs: f64, _occ: &OccupationState) {
        self.fb.route_and_update(action, obs);
    }

    fn feedback(&self) -> Option<&FeedbackState> {
        Some(&self.fb)
    }
}

/// Frank-Wolfe with the true gradient, after a round robin over the first
/// `K` rounds (so interior-only losses are never evaluated on the boundary).
struct OracleFw;

impl Policy for OracleFw {
    fn select(&mut self, occ: &OccupationState, model: &LossModel) -> Result<usize> {
        if let Some(a) = occ.counts().iter().position(|&c| c == 0) {
            return Ok(a);
        }
        oracle_fw_select(model, &occ.occupation_vector()?)
    }

    fn observe(&mut self, _action: usize, _obs: f64, _occ: &OccupationState) {}
}

struct Uniform {
    rng: CounterRng,
}

impl Policy for Uniform {
    fn select(&mut self, occ: &OccupationState, _model: &LossModel) -> Result<usize> {
        let k = occ.k();
        let (u, _) = self.rng.uniform_pair();
        Ok(((u * k as f64) as usize).min(k - 1))
    }

    fn observe(&mut self, _action: usize, _obs: f64, _occ: &OccupationState) {}
}

/// Plays the action furthest behind its target share.
struct FixedAllocation {
    weights: Vec<f64>,
}

impl Policy for FixedAllocation {
    fn select(&mut self, occ: &OccupationState, _model: &LossModel) -> Result<usize> {
        let next = (occ.t() + 1) as f64;
        let behind: Vec<f64> = self
            .weights
            .iter()
            .zip(occ.counts())
            .map(|(w, &c)| c as f64 - w * next)
            .collect();
        Ok(TieBreaker::lowest_index().argmin(&behind))
    }

    fn observe(&mut self, _action: usize, _obs: f64, _occ: &OccupationState) {}
}

struct PresampledUcbFw {
    inner: UcbFw,
    centers: Vec<f64>,
    /// Stopping rules and `z_scale` while brackets are being estimated.
    estimating: Option<(Vec<StoppingRule>, f64)>,
    floors: Vec<f64>,
    floors_since: u64,
}

impl PresampledUcbFw {
    fn new(inner: UcbFw, cfg: &PresampleConfig, model: &LossModel) -> Result<Self> {
        let k = model.k();
        let centers = match inner.fb.estimator() {
            Estimator::CenteredSquare { centers } => centers.clone(),
            _ => return Err(Error::Config("pre-sampling needs the centered_square estimator".into())),
        };
        let (estimating, floors) = match cfg {
            PresampleConfig::Known { sigma_brackets } => (None, floors_from_brackets(sigma_brackets)),
            PresampleConfig::Estimated { delta, z_scale, budget } => {
                let rules = (0..k).map(|_| StoppingRule::new(*budget, *delta)).collect::<Result<Vec<_>>>()?;
                (Some((rules, *z_scale)), alloc::vec![0.0; k])
            }
        };
        Ok(Self { inner, centers, estimating, floors, floors_since: 0 })
    }
}

/// `p_lo_i = sigma_lo_i / sum_j sigma_hi_j`.
fn floors_from_brackets(brackets: &[(f64, f64)]) -> Vec<f64> {
    let total: f64 = brackets.iter().map(|b| b.1).sum();
    brackets.iter().map(|b| b.0 / total).collect()
}

impl Policy for PresampledUcbFw {
    fn select(&mut self, occ: &OccupationState, model: &LossModel) -> Result<usize> {
        if self.estimating.is_some() {
            // Round robin on the least-pulled arm keeps counts balanced.
            let min = occ.counts().iter().copied().min().unwrap_or(0);
            return Ok(occ.counts().iter().position(|&c| c == min).unwrap_or(0));
        }
        let next = (occ.t() + 1) as f64;
        let mut forced: Option<(usize, f64)> = None;
        for (i, (&floor, &c)) in self.floors.iter().zip(occ.counts()).enumerate() {
            let deficit = floor * next - c as f64;
            if deficit > 0.0 && forced.is_none_or(|(_, d)| deficit > d) {
                forced = Some((i, deficit));
            }
        }
        match forced {
            Some((i, _)) => Ok(i),
            None => self.inner.select(occ, model),
        }
    }

    fn observe(&mut self, action: usize, obs: f64, occ: &OccupationState) {
        self.inner.observe(action, obs, occ);
        let Some((rules, z_scale)) = self.estimating.as_mut() else { return };
        let j = self.inner.fb.action_to_coeff()[action];
        let d = obs - self.centers[j];
        let z = (d * d / *z_scale).min(1.0);
        rules[action].push(z).expect("z is clipped to [0, 1]");
        if rules.iter().all(|r| r.outcome().is_some()) {
            let brackets: Vec<(f64, f64)> = rules
                .iter()
                .map(|r| {
                    let out = r.outcome().expect("checked above");
                    if out.triggered {
                        (math::sqrt(*z_scale * out.mean / 2.0), math::sqrt(*z_scale * 1.5 * out.mean))
                    } else {
                        let cap = r.threshold(r.horizon).max(out.mean);
                        (0.0, math::sqrt(*z_scale * 1.5 * cap))
                    }
                })
                .collect();
            self.floors = floors_from_brackets(&brackets);
            self.floors_since = occ.t();
            self.estimating = None;
        }
    }

    fn feedback(&self) -> Option<&FeedbackState> {
        Some(&self.inner.fb)
    }

    fn presample_floors(&self) -> Option<(u64, &[f64])> {
        self.estimating.is_none().then_some((self.floors_since, self.floors.as_slice()))
    }
}

/// Restarts the estimator at each block boundary; occupation counts carry on.
struct DoublingUcbFw {
    inner: UcbFw,
    beta: f64,
    block: u32,
    next_boundary: u64,
}

impl DoublingUcbFw {
    fn new(inner: UcbFw, beta: f64) -> Self {
        Self { inner, beta, block: 0, next_boundary: block_boundary(beta, 1) }
    }
}

impl Policy for DoublingUcbFw {
    fn select(&mut self, occ: &OccupationState, model: &LossModel) -> Result<usize> {
        self.inner.select(occ, model)
    }

    fn observe(&mut self, action: usize, obs: f64, occ: &OccupationState) {
        self.inner.observe(action, obs, occ);
        if occ.t() >= self.next_boundary {
            self.inner.fb = self.inner.fb.reset();
            self.block += 1;
            self.next_boundary = block_boundary(self.beta, self.block + 1);
        }
    }

    fn feedback(&self) -> Option<&FeedbackState> {
        Some(&self.inner.fb)
    }

    fn block_index(&self) -> u32 {
        self.block
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn occ_with(counts: &[u64]) -> OccupationState {
        let mut o = OccupationState::new(counts.len());
        for (a, &c) in counts.iter().enumerate() {
            for _ in 0..c {
                o.apply_action(a).unwrap();
            }
        }
        o
    }

    #[test]
    fn argmin_of_index() {
        // g = (0.2, 0.5, 0.3), alpha = (0.4, 0.05, 0.2)
        let idx = [0.2 - 0.4, 0.5 - 0.05, 0.3 - 0.2];
        assert_eq!(TieBreaker::lowest_index().argmin(&idx), 0);
        assert_eq!(TieBreaker::lowest_index().argmin(&[0.1, 0.1]), 0);
    }

    #[test]
    fn seeded_ties_cover_all_candidates() {
        let mut tie = TieBreaker::new(TieBreak::SeededRandom, 3);
        let picks: Vec<usize> = (0..64).map(|_| tie.argmin(&[0.0, 1.0, 0.0])).collect();
        assert!(picks.contains(&0) && picks.contains(&2) && !picks.contains(&1));
    }

    #[test]
    fn cold_start_picks_unobserved() {
        let model = LossModel::linear(vec![0.2, 0.5, 0.3]).unwrap();
        let mut fb = FeedbackState::identity(3);
        for _ in 0..3 {
            fb.route_and_update(0, 10.0);
        }
        fb.route_and_update(2, -10.0);
        fb.route_and_update(2, -10.0);
        let occ = occ_with(&[3, 0, 2]);
        let mut tie = TieBreaker::lowest_index();
        assert_eq!(ucb_fw_select(&fb, &occ, &model, &DeviationSpec::theorem1(), &mut tie).unwrap(), 1);
        let fb2 = {
            let mut f = FeedbackState::identity(2);
            f.route_and_update(1, 0.0);
            f
        };
        assert_eq!(lcb_bandit_select(&fb2, &occ_with(&[0, 5]), &DeviationSpec::theorem1(), &mut tie).unwrap(), 0);
    }

    #[test]
    fn lcb_equal_means_lowest_index() {
        let mut fb = FeedbackState::identity(2);
        fb.route_and_update(0, 0.3);
        fb.route_and_update(1, 0.3);
        let mut tie = TieBreaker::lowest_index();
        assert_eq!(lcb_bandit_select(&fb, &occ_with(&[1, 1]), &DeviationSpec::theorem1(), &mut tie).unwrap(), 0);
    }

    #[test]
    fn oracle_examples() {
        let q = LossModel::quadratic(vec![0.5, 0.5]).unwrap();
        let e1 = SimplexPoint::vertex(2, 0).unwrap();
        assert_eq!(oracle_fw_select(&q, &e1).unwrap(), 1);
        let lin = LossModel::linear(vec![0.1, 0.5]).unwrap();
        assert_eq!(oracle_fw_select(&lin, &SimplexPoint::uniform(2)).unwrap(), 0);
        let cd = LossModel::cobb_douglas(vec![0.5, 0.5]).unwrap();
        assert_eq!(oracle_fw_select(&cd, &SimplexPoint::new(vec![0.25, 0.75]).unwrap()).unwrap(), 0);
    }

    #[test]
    fn epsilon_examples() {
        let q = LossModel::quadratic(vec![0.5, 0.5]).unwrap();
        let e1 = SimplexPoint::vertex(2, 0).unwrap();
        let d = epsilon_diagnostic(&q, &e1, 0).unwrap();
        assert_eq!(d.epsilon_t, 1.0);
        assert_eq!(d.oracle_choice, 1);
        assert_eq!(epsilon_diagnostic(&q, &e1, 1).unwrap().epsilon_t, 0.0);
        let lin = LossModel::linear(vec![0.1, 0.5]).unwrap();
        let d = epsilon_diagnostic(&lin, &SimplexPoint::uniform(2), 1).unwrap();
        assert!((d.epsilon_t - 0.4).abs() < 1e-15);
        assert!(d.fw_gap >= 0.0);
    }

    #[test]
    fn stopping_rule_deterministic_stream() {
        let out = variance_stopping_tau(core::iter::repeat(0.9), 100, 0.1).unwrap();
        assert_eq!(out.tau, 19);
        assert!(out.triggered);
        assert!((out.mean - 0.9).abs() < 1e-15);

        let out = variance_stopping_tau(core::iter::repeat(0.0), 100, 0.1).unwrap();
        assert_eq!((out.tau, out.triggered), (100, false));

        let err = variance_stopping_tau([0.5, 1.5], 10, 0.1);
        assert_eq!(err, Err(Error::StreamDomain { index: 1, value: 1.5 }));
    }

    #[test]
    fn doubling_boundaries() {
        assert_eq!(block_boundary(0.5, 1), 8);
        assert_eq!(block_boundary(0.5, 2), 55);
        assert_eq!(block_boundary(0.5, 3), 2981);
        assert_eq!(block_boundary(0.5, 7), u64::MAX);
    }

    #[test]
    fn known_bracket_floors() {
        assert_eq!(floors_from_brackets(&[(1.0, 1.0), (2.0, 2.0)]), vec![1.0 / 3.0, 2.0 / 3.0]);
    }

    #[test]
    fn presampled_forces_deficient_arm() {
        let model = LossModel::exp_design(vec![1.0, 4.0]).unwrap();
        let fb = FeedbackState::new(vec![0, 1], Estimator::CenteredSquare { centers: vec![0.0, 0.0] }).unwrap();
        let spec = PolicySpec::new(PolicyKind::PresampledUcbFw(PresampleConfig::Known {
            sigma_brackets: vec![(1.0, 1.0), (2.0, 2.0)],
        }));
        let mut policy = spec.build(&model, fb.clone(), 0).unwrap();
        let occ = occ_with(&[2, 7]);
        // 2/10 < 1/3 after a skipped round
        assert_eq!(policy.select(&occ, &model).unwrap(), 0);
    }

    #[test]
    fn presampling_rejects_other_families() {
        let model = LossModel::linear(vec![0.1, 0.5]).unwrap();
        let spec = PolicySpec::new(PolicyKind::PresampledUcbFw(PresampleConfig::Known {
            sigma_brackets: vec![(1.0, 1.0), (2.0, 2.0)],
        }));
        assert!(matches!(spec.build(&model, FeedbackState::identity(2), 0), Err(Error::Config(_))));
    }

    #[test]
    fn fixed_allocation_tracks_weights() {
        let model = LossModel::linear(vec![0.1, 0.5]).unwrap();
        let mut policy = PolicySpec::new(PolicyKind::FixedAllocation(vec![0.25, 0.75]))
            .build(&model, FeedbackState::identity(2), 0)
            .unwrap();
        let mut occ = OccupationState::new(2);
        for _ in 0..400 {
            let a = policy.select(&occ, &model).unwrap();
            occ.apply_action(a).unwrap();
        }
        assert_eq!(occ.counts(), &[100, 300]);
    }
}
