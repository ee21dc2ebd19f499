//! Parallel execution of an experiment's seeds and the post-run analysis.

use log::warn;
use rayon::prelude::*;
use ucbfw_core::{aggregate, bound_check, fit_rate, run_trial, Aggregate, BoundReport, RateFit, Theorem, TrialRecord};

use crate::config::Experiment;

/// Runs every seed of `exp` on `workers` threads. Records come back sorted
/// by seed whatever the scheduling.
pub fn run_experiment(exp: &Experiment, workers: usize) -> anyhow::Result<Vec<TrialRecord>> {
    let seeds: Vec<u64> = exp.seeds().collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()?;
    let mut records = pool.install(|| {
        seeds
            .par_iter()
            .map(|&s| run_trial(&exp.trial, s).map_err(|e| anyhow::anyhow!("seed {s}: {e}")))
            .collect::<anyhow::Result<Vec<_>>>()
    })?;
    records.sort_by_key(|r| r.seed);
    Ok(records)
}

/// Fit of the mean error curve plus its band verdict.
#[derive(Debug, Clone)]
pub struct SlopeCheck {
    pub fit: RateFit,
    pub band: Option<(f64, f64)>,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub records: Vec<TrialRecord>,
    /// Absent with a single seed.
    pub aggregate: Option<Aggregate>,
    pub slope: Option<SlopeCheck>,
    pub bound: Option<BoundReport>,
    /// A slope band was configured.
    pub band_required: bool,
}

impl Analysis {
    /// All requested checks passed.
    pub fn pass(&self) -> bool {
        self.slope.as_ref().map_or(!self.band_required, |s| s.pass)
            && self.bound.as_ref().is_none_or(|b| b.status == ucbfw_core::BoundStatus::Pass)
    }
}

/// Aggregates the records and evaluates the configured (or requested) checks.
pub fn analyze(exp: &Experiment, records: Vec<TrialRecord>, theorem: Option<Theorem>) -> anyhow::Result<Analysis> {
    let horizons = &exp.trial.horizons;
    let agg = if records.len() >= 2 { Some(aggregate(&records, horizons)?) } else { None };
    let band = exp.config.checks.slope_band;
    let slope = match &agg {
        Some(a) if horizons.len() >= 3 => match fit_rate(&a.horizons, &a.mean) {
            Ok(fit) => {
                if !fit.excluded.is_empty() {
                    warn!("rate fit skipped nonpositive mean errors at T = {:?}", fit.excluded);
                }
                let pass = band.is_none_or(|(lo, hi)| fit.slope >= lo && fit.slope <= hi);
                Some(SlopeCheck { fit, band, pass })
            }
            Err(e) => {
                warn!("no rate fit: {e}");
                None
            }
        },
        _ => None,
    };
    let theorem = theorem.or(exp.config.checks.theorem.map(Theorem::from));
    let bound = match (theorem, &agg) {
        (Some(t), Some(a)) => Some(bound_check(t, &exp.trial.model, a, &records)),
        (Some(_), None) => anyhow::bail!("bound checks need at least two seeds"),
        _ => None,
    };
    Ok(Analysis { records, aggregate: agg, slope, bound, band_required: band.is_some() })
}
