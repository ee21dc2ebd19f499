//! CSV rows and JSON summaries.
//!
//! Numbers are written like C's `%.12e` (`1.500000000000e-03`), so files are
//! byte-stable across platforms and easy to diff.

use std::fs;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use ucbfw_core::{BoundReport, BoundStatus, TrialRecord};

use crate::config::Experiment;
use crate::runner::Analysis;

pub const CSV_HEADER: &str = "experiment,policy,loss,K,T,seed,error,sum_epsilon,bound_value,bound_pass";

/// Slack allowed when comparing a seed's error with its pathwise bound.
const PATHWISE_TOL: f64 = ucbfw_core::harness::PATHWISE_TOL;

/// `printf("%.12e", x)`.
pub fn format_sci(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent form");
    let (sign, digits) = match exp.strip_prefix('-') {
        Some(d) => ('-', d),
        None => ('+', exp),
    };
    format!("{mantissa}e{sign}{digits:0>2}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedLabel {
    Seed(u64),
    Mean,
    Stderr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputRow {
    pub horizon: u64,
    pub seed: SeedLabel,
    pub error: f64,
    pub sum_epsilon: Option<f64>,
    pub bound_value: Option<f64>,
    pub bound_pass: Option<bool>,
}

/// Seed rows ordered by (seed, T), then one mean and one stderr row per T.
/// Mean rows carry the bound from the analysis, when one was checked.
pub fn build_rows(records: &[TrialRecord], analysis: Option<&Analysis>) -> Vec<OutputRow> {
    let mut sorted: Vec<&TrialRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.seed);
    let mut rows = Vec::new();
    for r in sorted {
        for (h, &t) in r.horizons.iter().enumerate() {
            let bound = r.excess_bound.as_ref().map(|b| b[h]);
            rows.push(OutputRow {
                horizon: t,
                seed: SeedLabel::Seed(r.seed),
                error: r.errors[h],
                sum_epsilon: r.sum_epsilon.as_ref().map(|s| s[h]),
                bound_value: bound,
                bound_pass: bound.map(|b| r.errors[h] <= b + PATHWISE_TOL),
            });
        }
    }
    let Some(agg) = analysis.and_then(|a| a.aggregate.as_ref()) else { return rows };
    let report: Option<&BoundReport> = analysis.and_then(|a| a.bound.as_ref());
    let bound_rows = report.filter(|b| !matches!(b.status, BoundStatus::Unsupported(_))).map(|b| &b.rows);
    for (h, &t) in agg.horizons.iter().enumerate() {
        let b = bound_rows.and_then(|rows| rows.get(h));
        rows.push(OutputRow {
            horizon: t,
            seed: SeedLabel::Mean,
            error: agg.mean[h],
            sum_epsilon: None,
            bound_value: b.map(|b| b.bound),
            bound_pass: b.map(|b| b.pass),
        });
    }
    for (h, &t) in agg.horizons.iter().enumerate() {
        rows.push(OutputRow {
            horizon: t,
            seed: SeedLabel::Stderr,
            error: agg.stderr[h],
            sum_epsilon: None,
            bound_value: None,
            bound_pass: None,
        });
    }
    rows
}

/// The CSV file contents for `rows`.
pub fn csv_bytes(exp: &Experiment, rows: &[OutputRow]) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(CSV_HEADER.split(','))?;
    let policy = exp.trial.policy.kind.name();
    let loss = exp.trial.model.kind().name();
    let k = exp.trial.k().to_string();
    let opt = |v: Option<f64>| v.map(format_sci).unwrap_or_default();
    for r in rows {
        let seed = match r.seed {
            SeedLabel::Seed(s) => s.to_string(),
            SeedLabel::Mean => "mean".into(),
            SeedLabel::Stderr => "stderr".into(),
        };
        w.write_record([
            exp.config.id.as_str(),
            policy,
            loss,
            &k,
            &r.horizon.to_string(),
            &seed,
            &format_sci(r.error),
            &opt(r.sum_epsilon),
            &opt(r.bound_value),
            r.bound_pass.map(|p| if p { "true" } else { "false" }).unwrap_or(""),
        ])?;
    }
    Ok(w.into_inner()?)
}

pub fn write_csv(exp: &Experiment, rows: &[OutputRow], path: &Path) -> anyhow::Result<()> {
    let bytes = csv_bytes(exp, rows)?;
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

#[derive(Debug, Serialize)]
struct FitSummary {
    slope: f64,
    intercept: f64,
    residual_rms: f64,
    horizons: Vec<u64>,
    excluded: Vec<u64>,
    band: Option<(f64, f64)>,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct BoundRowSummary {
    horizon: u64,
    empirical: f64,
    bound: f64,
    margin: f64,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct BoundSummary {
    theorem: &'static str,
    status: &'static str,
    reason: Option<String>,
    rows: Vec<BoundRowSummary>,
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    experiment: &'a str,
    policy: &'static str,
    loss: &'static str,
    k: usize,
    seeds: usize,
    horizons: &'a [u64],
    mean: Option<&'a [f64]>,
    stderr: Option<&'a [f64]>,
    fit: Option<FitSummary>,
    bound: Option<BoundSummary>,
    pass: bool,
}

pub fn summary_json(exp: &Experiment, analysis: &Analysis) -> anyhow::Result<String> {
    let fit = analysis.slope.as_ref().map(|s| FitSummary {
        slope: s.fit.slope,
        intercept: s.fit.intercept,
        residual_rms: s.fit.residual_rms,
        horizons: s.fit.horizons.clone(),
        excluded: s.fit.excluded.clone(),
        band: s.band,
        pass: s.pass,
    });
    let bound = analysis.bound.as_ref().map(|b| {
        let (status, reason) = match &b.status {
            BoundStatus::Pass => ("pass", None),
            BoundStatus::Fail => ("fail", None),
            BoundStatus::Unsupported(why) => ("unsupported", Some(why.clone())),
        };
        BoundSummary {
            theorem: b.theorem.name(),
            status,
            reason,
            rows: b
                .rows
                .iter()
                .map(|r| BoundRowSummary {
                    horizon: r.horizon,
                    empirical: r.empirical,
                    bound: r.bound,
                    margin: r.margin,
                    pass: r.pass,
                })
                .collect(),
        }
    });
    let summary = Summary {
        experiment: &exp.config.id,
        policy: exp.trial.policy.kind.name(),
        loss: exp.trial.model.kind().name(),
        k: exp.trial.k(),
        seeds: analysis.records.len(),
        horizons: &exp.trial.horizons,
        mean: analysis.aggregate.as_ref().map(|a| a.mean.as_slice()),
        stderr: analysis.aggregate.as_ref().map(|a| a.stderr.as_slice()),
        fit,
        bound,
        pass: analysis.pass(),
    };
    let mut s = serde_json::to_string_pretty(&summary)?;
    s.push('\n');
    Ok(s)
}

pub fn write_summary(exp: &Experiment, analysis: &Analysis, path: &Path) -> anyhow::Result<()> {
    fs::write(path, summary_json(exp, analysis)?).with_context(|| format!("writing {}", path.display()))
}
