//! Seeded trials, Monte Carlo aggregation, rate fits and bound checks.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::feedback::{Estimator, FeedbackState, NoiseSpec, ObservationModel};
use crate::losses::{LossKind, LossModel};
use crate::math;
use crate::policies::{epsilon_diagnostic, Policy, PolicySpec};
use crate::rng::CounterRng;
use crate::simplex::{OccupationState, SimplexPoint};

/// Everything one trial needs besides its seed.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSpec {
    pub model: LossModel,
    pub policy: PolicySpec,
    pub noise: NoiseSpec,
    /// Action to observed coefficient.
    pub feedback_map: Vec<usize>,
    pub estimator: Estimator,
    /// Strictly increasing horizons at which the error is recorded.
    pub horizons: Vec<u64>,
    /// Track `epsilon_t` and the pathwise excess bound.
    pub diagnostics: bool,
}

impl TrialSpec {
    /// Identity feedback, mean estimator, no diagnostics.
    pub fn new(model: LossModel, policy: PolicySpec, noise: NoiseSpec, horizons: Vec<u64>) -> Self {
        let k = model.k();
        let estimator = default_estimator(&model);
        Self {
            model,
            policy,
            noise,
            feedback_map: (0..k).collect(),
            estimator,
            horizons,
            diagnostics: false,
        }
    }

    pub fn k(&self) -> usize {
        self.model.k()
    }

    pub fn t_max(&self) -> u64 {
        self.horizons.last().copied().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizons.is_empty() || self.horizons[0] == 0 {
            return Err(Error::Config("horizons must be nonempty and start at 1 or later".into()));
        }
        if self.horizons.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("horizons must be strictly increasing".into()));
        }
        self.policy.validate(&self.model)?;
        let fb = self.feedback_state()?;
        fb.check_model(&self.model)?;
        let obs = self.observation_model()?;
        if self.estimator == Estimator::Mean && obs.max_subgaussian_parameter() > self.policy.deviation.sigma2 {
            return Err(Error::Config(format!(
                "observations are {}-sub-Gaussian but the deviation covers at most {}",
                obs.max_subgaussian_parameter(),
                self.policy.deviation.sigma2
            )));
        }
        Ok(())
    }

    pub fn feedback_state(&self) -> Result<FeedbackState> {
        if self.feedback_map.len() != self.k() {
            return Err(Error::Config(format!("feedback map needs {} entries", self.k())));
        }
        FeedbackState::new(self.feedback_map.clone(), self.estimator.clone())
    }

    pub fn observation_model(&self) -> Result<ObservationModel> {
        let centers = match &self.estimator {
            Estimator::CenteredSquare { centers } => Some(centers.as_slice()),
            _ => None,
        };
        ObservationModel::for_model(&self.model, self.noise, &self.feedback_map, centers)
    }
}

/// Centered squares around zero for the experimental design family, plain
/// means otherwise.
pub fn default_estimator(model: &LossModel) -> Estimator {
    match model.kind() {
        LossKind::ExpDesign => Estimator::CenteredSquare { centers: vec![0.0; model.k()] },
        _ => Estimator::Mean,
    }
}

/// One step of a running trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub round: u64,
    pub action: usize,
    pub observation: f64,
}

/// A single seeded trajectory, advanced one round at a time.
pub struct Trial<'a> {
    spec: &'a TrialSpec,
    occ: OccupationState,
    policy: Box<dyn Policy>,
    observations: ObservationModel,
    streams: Vec<CounterRng>,
}

impl<'a> Trial<'a> {
    pub fn new(spec: &'a TrialSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let k = spec.k();
        let policy = spec.policy.build(&spec.model, spec.feedback_state()?, seed)?;
        Ok(Self {
            spec,
            occ: OccupationState::new(k),
            policy,
            observations: spec.observation_model()?,
            streams: (0..k as u64).map(|a| CounterRng::new(seed, a)).collect(),
        })
    }

    pub fn occupation(&self) -> &OccupationState {
        &self.occ
    }

    pub fn policy(&self) -> &dyn Policy {
        self.policy.as_ref()
    }

    pub fn step(&mut self) -> Result<Step> {
        let round = self.occ.t() + 1;
        let wrap = |e| Error::Trial { round, source: Box::new(e) };
        let action = self.policy.select(&self.occ, &self.spec.model).map_err(wrap)?;
        if action >= self.spec.k() {
            return Err(wrap(Error::ActionOutOfRange { action, k: self.spec.k() }));
        }
        // The stream of each action is indexed by its pull count.
        debug_assert_eq!(self.streams[action].draw_index(), self.occ.counts()[action]);
        let observation = self.observations.draw_observation(action, &mut self.streams[action]);
        self.occ.apply_action(action).map_err(wrap)?;
        self.policy.observe(action, observation, &self.occ);
        Ok(Step { round, action, observation })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub seed: u64,
    pub horizons: Vec<u64>,
    /// `L(p_T) - L(p*)` at each horizon.
    pub errors: Vec<f64>,
    /// Running sum of `epsilon_t` at each horizon (diagnostics only).
    pub sum_epsilon: Option<Vec<f64>>,
    /// Pathwise excess bound at each horizon (diagnostics only).
    pub excess_bound: Option<Vec<f64>>,
    pub counts: Vec<Vec<u64>>,
}

/// Running state of the pathwise excess bound
/// `T rho_T <= t0 rho_t0 + sum_{t0 < s <= T} eps_s + C sum_{t0 < s <= T} 1/s`.
///
/// For losses that are smooth on the whole simplex the recursion starts at
/// `t0 = 0` from the uniform point (the first step lands on a vertex whatever
/// the start), giving `(sum eps + C log(eT)) / T`. For interior-only losses it
/// starts at the first interior `p_t` and `C` is the smoothness on the box
/// spanned by the smallest coordinates seen since.
struct ExcessTracker {
    start: Option<(u64, f64)>,
    sum_eps: f64,
    lower: Vec<f64>,
}

impl ExcessTracker {
    fn new(k: usize) -> Self {
        Self { start: None, sum_eps: 0.0, lower: vec![f64::INFINITY; k] }
    }

    fn before_step(&mut self, model: &LossModel, occ: &OccupationState, action: usize) -> Result<()> {
        let p = if occ.t() == 0 {
            if model.kind().interior_only() {
                return Ok(());
            }
            self.start = Some((0, 0.0));
            SimplexPoint::uniform(model.k())
        } else {
            let p = occ.occupation_vector()?;
            if self.start.is_none() {
                if p.min_coord() <= 0.0 {
                    return Ok(());
                }
                let rho = model.loss_value(&p)? - model.minimizer().loss_star;
                self.start = Some((occ.t(), rho));
                self.lower.copy_from_slice(p.coords());
            }
            p
        };
        self.sum_eps += epsilon_diagnostic(model, &p, action)?.epsilon_t;
        Ok(())
    }

    fn after_step(&mut self, occ: &OccupationState) -> Result<()> {
        if self.start.is_some() {
            let p = occ.occupation_vector()?;
            for (l, x) in self.lower.iter_mut().zip(p.coords()) {
                *l = l.min(*x);
            }
        }
        Ok(())
    }

    fn bound(&self, model: &LossModel, t: u64) -> Result<f64> {
        let Some((t0, rho0)) = self.start else { return Ok(f64::INFINITY) };
        let c = if model.kind().interior_only() {
            model.interior_smoothness(&self.lower)?
        } else {
            model.smoothness_c()
        };
        let tf = t as f64;
        let harmonic = if t0 == 0 { math::ln(core::f64::consts::E * tf) } else { math::ln(tf / t0 as f64) };
        Ok((t0 as f64 * rho0 + self.sum_eps + c * harmonic) / tf)
    }
}

/// Simulates rounds `1..=T_max`, snapshotting the error at every horizon.
pub fn run_trial(spec: &TrialSpec, seed: u64) -> Result<TrialRecord> {
    let mut trial = Trial::new(spec, seed)?;
    let model = &spec.model;
    let loss_star = model.minimizer().loss_star;
    let n = spec.horizons.len();
    let mut record = TrialRecord {
        seed,
        horizons: spec.horizons.clone(),
        errors: Vec::with_capacity(n),
        sum_epsilon: spec.diagnostics.then(|| Vec::with_capacity(n)),
        excess_bound: spec.diagnostics.then(|| Vec::with_capacity(n)),
        counts: Vec::with_capacity(n),
    };
    let mut tracker = ExcessTracker::new(spec.k());
    let mut next = 0;
    while next < n {
        let round = trial.occ.t() + 1;
        let wrap = |e| Error::Trial { round, source: Box::new(e) };
        let before = trial.occ.clone();
        let step = trial.step()?;
        if spec.diagnostics {
            tracker.before_step(model, &before, step.action).map_err(wrap)?;
            tracker.after_step(&trial.occ).map_err(wrap)?;
        }
        if trial.occ.t() == spec.horizons[next] {
            let p = trial.occ.occupation_vector()?;
            let err = model.loss_value(&p).map_err(wrap)? - loss_star;
            record.errors.push(err);
            record.counts.push(trial.occ.counts().to_vec());
            if let (Some(s), Some(b)) = (record.sum_epsilon.as_mut(), record.excess_bound.as_mut()) {
                s.push(tracker.sum_eps);
                b.push(tracker.bound(model, trial.occ.t()).map_err(wrap)?);
            }
            next += 1;
        }
    }
    Ok(record)
}

/// Per-horizon mean and standard error over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub horizons: Vec<u64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n: usize,
}

/// Records are folded in ascending seed order so the result does not depend
/// on the order trials finished in.
pub fn aggregate(records: &[TrialRecord], horizons: &[u64]) -> Result<Aggregate> {
    if records.len() < 2 {
        return Err(Error::Config(format!("aggregation needs at least 2 records, got {}", records.len())));
    }
    if let Some(r) = records.iter().find(|r| r.horizons != horizons || r.errors.len() != horizons.len()) {
        return Err(Error::Config(format!("record for seed {} has a different horizon grid", r.seed)));
    }
    let mut sorted: Vec<&TrialRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.seed);
    let n = sorted.len() as f64;
    let mut mean = Vec::with_capacity(horizons.len());
    let mut stderr = Vec::with_capacity(horizons.len());
    for h in 0..horizons.len() {
        // Shifting by the first value keeps identical samples exact.
        let x0 = sorted[0].errors[h];
        let m = x0 + sorted.iter().map(|r| r.errors[h] - x0).sum::<f64>() / n;
        let var = sorted.iter().map(|r| (r.errors[h] - m) * (r.errors[h] - m)).sum::<f64>() / (n - 1.0);
        mean.push(m);
        stderr.push(math::sqrt(var / n));
    }
    Ok(Aggregate { horizons: horizons.to_vec(), mean, stderr, n: sorted.len() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    pub horizons: Vec<u64>,
    /// Horizons dropped because their mean error was not positive.
    pub excluded: Vec<u64>,
}

/// Least squares of `log(error)` on `log(T)`.
pub fn fit_rate(horizons: &[u64], errors: &[f64]) -> Result<RateFit> {
    if horizons.len() != errors.len() {
        return Err(Error::Argument("horizons and errors differ in length".into()));
    }
    let (kept, excluded): (Vec<_>, Vec<_>) = horizons.iter().zip(errors).partition(|(_, &e)| e > 0.0 && e.is_finite());
    if kept.len() < 3 {
        return Err(Error::TooFewPoints(kept.len()));
    }
    let xs: Vec<f64> = kept.iter().map(|(h, _)| math::ln(**h as f64)).collect();
    let ys: Vec<f64> = kept.iter().map(|(_, e)| math::ln(**e)).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Argument("rate fit needs distinct horizons".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x) * (y - intercept - slope * x)).sum();
    Ok(RateFit {
        slope,
        intercept,
        residual_rms: math::sqrt(rss / n),
        horizons: kept.iter().map(|(h, _)| **h).collect(),
        excluded: excluded.iter().map(|(h, _)| **h).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Theorem {
    /// Pathwise excess bound from the per-step errors `epsilon_t`.
    Lemma1,
    /// Slow rate for smooth convex losses.
    Thm1,
    /// Fast rate for losses minimized at a vertex with positive gaps.
    Prop2,
    /// Fast rate for strongly convex losses with an interior minimum.
    Thm4,
}

impl Theorem {
    pub fn name(self) -> &'static str {
        match self {
            Theorem::Lemma1 => "lemma1",
            Theorem::Thm1 => "thm1",
            Theorem::Prop2 => "prop2",
            Theorem::Thm4 => "thm4",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub horizon: u64,
    pub empirical: f64,
    pub bound: f64,
    /// `bound - empirical`; for the pathwise check, the smallest over seeds.
    pub margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundStatus {
    Pass,
    Fail,
    Unsupported(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub theorem: Theorem,
    pub status: BoundStatus,
    pub rows: Vec<BoundRow>,
}

/// Slack for rounding in the pathwise comparison.
pub const PATHWISE_TOL: f64 = 1e-9;

/// Evaluates the selected bound at each horizon of `agg` and compares it to
/// the Monte Carlo mean (or, for [`Theorem::Lemma1`], to every record).
pub fn bound_check(theorem: Theorem, model: &LossModel, agg: &Aggregate, records: &[TrialRecord]) -> BoundReport {
    let unsupported = |why: String| BoundReport { theorem, status: BoundStatus::Unsupported(why), rows: Vec::new() };
    let rows: Vec<BoundRow> = match theorem {
        Theorem::Lemma1 => {
            if records.is_empty() || records.iter().any(|r| r.excess_bound.is_none()) {
                return unsupported("pathwise check needs records with diagnostics".into());
            }
            (0..agg.horizons.len())
                .map(|h| {
                    let margin = records
                        .iter()
                        .map(|r| r.excess_bound.as_ref().unwrap()[h] - r.errors[h])
                        .fold(f64::INFINITY, f64::min);
                    let bound = records.iter().map(|r| r.excess_bound.as_ref().unwrap()[h]).sum::<f64>()
                        / records.len() as f64;
                    BoundRow { horizon: agg.horizons[h], empirical: agg.mean[h], bound, margin, pass: margin >= -PATHWISE_TOL }
                })
                .collect()
        }
        _ => {
            let mut rows = Vec::with_capacity(agg.horizons.len());
            for (h, &t) in agg.horizons.iter().enumerate() {
                let bound = match theorem_bound(theorem, model, t) {
                    Ok(b) => b,
                    Err(why) => return unsupported(why),
                };
                let margin = bound - agg.mean[h];
                rows.push(BoundRow { horizon: t, empirical: agg.mean[h], bound, margin, pass: margin >= 0.0 });
            }
            rows
        }
    };
    let status = if rows.iter().all(|r| r.pass) { BoundStatus::Pass } else { BoundStatus::Fail };
    BoundReport { theorem, status, rows }
}

const PI2_6: f64 = core::f64::consts::PI * core::f64::consts::PI / 6.0;

/// Closed-form value of an expectation bound at horizon `t`.
pub fn theorem_bound(theorem: Theorem, model: &LossModel, t: u64) -> core::result::Result<f64, String> {
    let k = model.k() as f64;
    let tf = t as f64;
    let log_t = math::ln(tf);
    let c = model.smoothness_c();
    let info = model.minimizer();
    let tail = |c: f64| c * math::ln(core::f64::consts::E * tf) / tf + (PI2_6 + k) * (2.0 * model.sup_grad() + model.sup_loss()) / tf;
    match theorem {
        Theorem::Lemma1 => Err("the pathwise bound is evaluated per trajectory".into()),
        Theorem::Thm1 => {
            if !(c.is_finite() && model.sup_grad().is_finite() && model.sup_loss().is_finite()) {
                return Err(format!("{} has no finite smoothness constant on the simplex", model.kind().name()));
            }
            Ok(4.0 * math::sqrt(3.0 * k * log_t / tf) + tail(c))
        }
        Theorem::Prop2 => {
            let (Some(gaps), Some(star)) = (info.gaps.as_ref(), info.p_star.as_vertex()) else {
                return Err("the minimizer is not a vertex".into());
            };
            if !(info.gap_min.unwrap_or(0.0) > 0.0) {
                return Err("some gap at the vertex minimizer is zero".into());
            }
            let inv_gaps: f64 = gaps.iter().enumerate().filter(|(i, _)| *i != star).map(|(_, g)| 1.0 / g).sum();
            let lead = 48.0 * log_t / tf * inv_gaps;
            if model.kind() == LossKind::Linear {
                let mu_inf = model.params().iter().map(|m| math::abs(*m)).fold(0.0, f64::max);
                Ok(lead + 3.0 * (2.0 * PI2_6 + k) * math::sqrt(k) * mu_inf / tf)
            } else {
                let Some(rho) = info.rho else {
                    return Err("the vertex bound needs a finite smoothness constant".into());
                };
                Ok(rho * (lead + tail(c)))
            }
        }
        Theorem::Thm4 => {
            let sc = model.strong_convexity();
            let eta = info.eta.min(1.0 / k);
            if !(sc > 0.0 && eta > 0.0 && c.is_finite()) {
                return Err("needs strong convexity, an interior minimizer and finite smoothness".into());
            }
            let c1 = 96.0 * k / (sc * eta * eta);
            let c2 = 24.0 / (sc * eta * eta * eta) + c;
            let r = 20.0 / (sc * eta * eta);
            let c3 = 24.0 * r * r * k + sc * eta * eta / 2.0 + c;
            Ok(c1 * log_t * log_t / tf + c2 * log_t / tf + c3 / tf)
        }
    }
}
