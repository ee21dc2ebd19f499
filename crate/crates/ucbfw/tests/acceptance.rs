//! End-to-end acceptance criteria. Runs without the libtest harness so that
//! every criterion prints one `criterion N ... PASS|FAIL` line with the
//! measured quantity and tolerance, even when all of them pass.

use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use ucbfw::{analyze, build_rows, csv_bytes, load_config, run_experiment, Analysis, Experiment};
use ucbfw_core::diagnostics::gradient_suite;
use ucbfw_core::harness::Trial;
use ucbfw_core::policies::variance_stopping_tau;
use ucbfw_core::rng::CounterRng;
use ucbfw_core::simplex::Recurrence;
use ucbfw_core::{
    diagnostics, BoundStatus, DeviationSpec, LossKind, LossModel, NoiseSpec, PolicyKind, PolicySpec, PresampleConfig,
    Theorem, TrialSpec,
};

fn config(name: &str) -> Experiment {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.yaml"));
    load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn report(n: u32, title: &str, pass: bool, detail: String, elapsed: Duration, budget: Duration) -> bool {
    let in_time = elapsed <= budget;
    let ok = pass && in_time;
    println!(
        "criterion {n:>2} {title}: {} | {detail} | {:.2}s (budget {}s)",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    ok
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn criterion_01_gradients() -> bool {
    let start = Instant::now();
    let checks = gradient_suite(2024, 100).unwrap();
    let worst = checks.iter().map(|c| c.max_rel_error).fold(0.0, f64::max);
    let families: Vec<_> = checks.iter().map(|c| format!("{}={:.1e}", c.kind.name(), c.max_rel_error)).collect();
    report(
        1,
        "gradient finite differences",
        checks.len() == LossKind::ALL.len() && worst <= 1e-6,
        format!("max rel err {worst:.2e} <= 1e-6 [{}]", families.join(" ")),
        start.elapsed(),
        secs(5),
    )
}

fn criterion_02_occupation_exactness() -> bool {
    let start = Instant::now();
    const T: u64 = 100_000;
    let mut rng = CounterRng::new(99, 0);
    let mut worst = 0.0_f64;
    let mut counts_exact = true;
    for run in 0..100u64 {
        let k = 2 + (run % 4) as usize;
        let model = diagnostics::random_instance(LossKind::ALL[run as usize % 6], k, &mut rng).unwrap();
        let kind = match run % 4 {
            0 => PolicyKind::UcbFw,
            1 => PolicyKind::Uniform,
            2 => PolicyKind::OracleFw,
            _ => PolicyKind::FixedAllocation(vec![1.0 / k as f64; k]),
        };
        let noise = if model.kind() == LossKind::ExpDesign {
            NoiseSpec::Gaussian { variance: 1.0 }
        } else {
            NoiseSpec::Deterministic
        };
        let spec = TrialSpec::new(model, PolicySpec::new(kind), noise, vec![T]);
        let mut trial = Trial::new(&spec, run).unwrap();
        let mut rec = Recurrence::new(k);
        for _ in 0..T {
            let step = trial.step().unwrap();
            rec.step(step.action);
        }
        let occ = trial.occupation();
        counts_exact &= occ.t() == T && occ.counts().iter().sum::<u64>() == T;
        let p = occ.occupation_vector().unwrap();
        for (a, b) in p.coords().iter().zip(rec.point()) {
            worst = worst.max((a - b).abs());
        }
    }
    report(
        2,
        "occupation counts vs float recurrence",
        counts_exact && worst <= 1e-9,
        format!("max |p_count - p_recurrence| = {worst:.2e} <= 1e-9, sum counts == T: {counts_exact}"),
        start.elapsed(),
        secs(10),
    )
}

fn criterion_03_lemma1_pathwise() -> bool {
    let start = Instant::now();
    let model = LossModel::quadratic(vec![0.5, 0.5]).unwrap();
    let mut ps = PolicySpec::new(PolicyKind::OracleFw);
    ps.deviation = DeviationSpec::noiseless();
    let mut spec = TrialSpec::new(model, ps, NoiseSpec::Deterministic, (1..=10_000).collect());
    spec.diagnostics = true;
    let rec = ucbfw_core::run_trial(&spec, 0).unwrap();
    let mut worst_margin = f64::INFINITY;
    let mut all = true;
    for (i, &t) in rec.horizons.iter().enumerate() {
        let envelope = (std::f64::consts::E * t as f64).ln() / t as f64;
        worst_margin = worst_margin.min(envelope - rec.errors[i]);
        all &= rec.errors[i] <= envelope;
        all &= rec.errors[i] <= rec.excess_bound.as_ref().unwrap()[i] + ucbfw_core::harness::PATHWISE_TOL;
    }
    report(
        3,
        "pathwise excess bound, oracle FW quadratic",
        all,
        format!("error <= log(eT)/T for all T <= 10^4; smallest margin {worst_margin:.3e}"),
        start.elapsed(),
        secs(1),
    )
}

fn criterion_04_bandit_equivalence() -> bool {
    let start = Instant::now();
    let model = LossModel::linear(vec![0.0, 0.5]).unwrap();
    let actions = |kind: PolicyKind| {
        let spec = TrialSpec::new(model.clone(), PolicySpec::new(kind), NoiseSpec::Bernoulli, vec![10_000]);
        let mut trial = Trial::new(&spec, 17).unwrap();
        (0..10_000).map(|_| trial.step().unwrap().action).collect::<Vec<_>>()
    };
    let fw = actions(PolicyKind::UcbFw);
    let lcb = actions(PolicyKind::LcbBandit);
    let first_diff = fw.iter().zip(&lcb).position(|(a, b)| a != b);
    report(
        4,
        "UCB-FW equals the LCB-index bandit on linear losses",
        first_diff.is_none(),
        format!("first differing round: {first_diff:?}; suboptimal pulls {}", fw.iter().filter(|&&a| a == 1).count()),
        start.elapsed(),
        secs(1),
    )
}

/// Criterion 5's experiment on 8 workers, shared with criterion 11.
fn vertex_run() -> &'static (Experiment, Analysis, Vec<u8>, Duration) {
    static RUN: OnceLock<(Experiment, Analysis, Vec<u8>, Duration)> = OnceLock::new();
    RUN.get_or_init(|| {
        let start = Instant::now();
        let exp = config("prop2_vertex");
        let records = run_experiment(&exp, 8).unwrap();
        let analysis = analyze(&exp, records, Some(Theorem::Prop2)).unwrap();
        let csv = csv_bytes(&exp, &build_rows(&analysis.records, Some(&analysis))).unwrap();
        (exp, analysis, csv, start.elapsed())
    })
}

fn criterion_05_vertex_fast_rate() -> bool {
    let (_, analysis, _, elapsed) = vertex_run();
    let bound = analysis.bound.as_ref().unwrap();
    let slope = analysis.slope.as_ref().unwrap();
    let margins: Vec<_> = bound.rows.iter().map(|r| format!("{:.2e}<{:.2e}", r.empirical, r.bound)).collect();
    report(
        5,
        "fast rate at a vertex (K=2, mu=(0,0.5), 200 seeds)",
        bound.status == BoundStatus::Pass && slope.pass,
        format!(
            "(a) mean < bound at every T [{}]; (b) slope {:.3} in [-1.15, -0.75]",
            margins.join(" "),
            slope.fit.slope
        ),
        *elapsed,
        secs(120),
    )
}

fn criterion_06_interior_fast_rate() -> bool {
    let start = Instant::now();
    let exp = config("thm4_interior");
    let analysis = analyze(&exp, run_experiment(&exp, 8).unwrap(), None).unwrap();
    let slope = analysis.slope.as_ref().unwrap();
    let thm4 = analysis.bound.as_ref().map(|b| format!("{:?}", b.status)).unwrap_or_default();
    report(
        6,
        "fast rate, strongly convex interior (K=3, 200 seeds)",
        slope.pass,
        format!("slope {:.3} in [-1.15, -0.70]; interior bound check {thm4}", slope.fit.slope),
        start.elapsed(),
        secs(180),
    )
}

fn criterion_07_slow_rate_envelope() -> bool {
    let start = Instant::now();
    let exp = config("thm1_markowitz");
    let analysis = analyze(&exp, run_experiment(&exp, 8).unwrap(), Some(Theorem::Thm1)).unwrap();
    let bound = analysis.bound.as_ref().unwrap();
    let rows: Vec<_> = bound.rows.iter().map(|r| format!("T={}: {:.3e} < {:.3e}", r.horizon, r.empirical, r.bound)).collect();
    report(
        7,
        "slow-rate envelope, Markowitz K=2",
        bound.status == BoundStatus::Pass,
        rows.join("; "),
        start.elapsed(),
        secs(60),
    )
}

fn criterion_08_stopping_rule_coverage() -> bool {
    let start = Instant::now();
    const T: u64 = 1_000;
    const DELTA: f64 = 0.05;
    let tau_cap = 9.0 * (2.0 * T as f64 / DELTA).ln() / (2.0 * 0.25) + 1.0;
    let reps = 10_000u64;
    let (mut covered, mut triggered, mut worst_tau) = (0u64, 0u64, 0u64);
    let mut within_cap = true;
    for r in 0..reps {
        let mut rng = CounterRng::new(8, r);
        let stream = (0..T).map(move |_| if rng.uniform_pair().0 < 0.5 { 1.0 } else { 0.0 });
        let out = variance_stopping_tau(stream, T, DELTA).unwrap();
        if out.triggered {
            triggered += 1;
            worst_tau = worst_tau.max(out.tau);
            within_cap &= out.tau as f64 <= tau_cap;
        }
        if out.mean / 2.0 <= 0.5 && 0.5 <= 1.5 * out.mean {
            covered += 1;
        }
    }
    let frac = covered as f64 / reps as f64;
    report(
        8,
        "variance stopping rule coverage",
        frac >= 0.94 && within_cap,
        format!(
            "coverage {frac:.4} >= 0.94; {triggered}/{reps} triggered, max tau {worst_tau} <= {tau_cap:.1}"
        ),
        start.elapsed(),
        secs(30),
    )
}

fn criterion_09_mixed_feedback_degradation() -> bool {
    let start = Instant::now();
    let mean_at_1e4 = |name: &str| {
        let exp = config(name);
        let a = analyze(&exp, run_experiment(&exp, 8).unwrap(), None).unwrap();
        let agg = a.aggregate.unwrap();
        let h = agg.horizons.iter().position(|&t| t == 10_000).unwrap();
        agg.mean[h]
    };
    let mixed = mean_at_1e4("mixed_feedback");
    let identity = mean_at_1e4("mixed_identity");
    let ratio = mixed / identity;
    report(
        9,
        "mixed feedback degrades the rate",
        ratio >= 2.0,
        format!("mean error at T=1e4: mixed {mixed:.3e}, identity {identity:.3e}, ratio {ratio:.2} >= 2"),
        start.elapsed(),
        secs(60),
    )
}

fn criterion_10_presampling_floor() -> bool {
    let start = Instant::now();
    let exp = config("presample_design");
    assert!(matches!(exp.trial.policy.kind, PolicyKind::PresampledUcbFw(PresampleConfig::Estimated { .. })));
    let mut spec = exp.trial.clone();
    spec.horizons = vec![10_000];
    let (mut worst, mut all, mut phase1_max) = (f64::INFINITY, true, 0u64);
    for seed in 0..50 {
        let mut trial = Trial::new(&spec, seed).unwrap();
        for _ in 0..10_000 {
            trial.step().unwrap();
            let Some((since, floors)) = trial.policy().presample_floors() else { continue };
            let occ = trial.occupation();
            let t = occ.t();
            if t < since {
                continue;
            }
            phase1_max = phase1_max.max(since);
            for (n, floor) in occ.counts().iter().zip(floors) {
                let slack = *n as f64 / t as f64 - (floor - 5.0 / t as f64);
                worst = worst.min(slack);
                all &= slack >= 0.0;
            }
        }
        all &= trial.policy().presample_floors().is_some();
    }
    report(
        10,
        "pre-sampling allocation floor",
        all,
        format!("min over t of T_i/t - (floor_i - 5/t) = {worst:.3e} >= 0; phase 1 ends by t={phase1_max}"),
        start.elapsed(),
        secs(30),
    )
}

fn criterion_11_reproducibility() -> bool {
    let (exp8, _, csv8, _) = vertex_run();
    let start = Instant::now();
    let exp = config("prop2_vertex");
    let records = run_experiment(&exp, 1).unwrap();
    let analysis = analyze(&exp, records, Some(Theorem::Prop2)).unwrap();
    let csv1 = csv_bytes(&exp, &build_rows(&analysis.records, Some(&analysis))).unwrap();
    assert_eq!(exp8.config, exp.config);
    report(
        11,
        "byte-identical CSV with 1 and 8 workers",
        csv1 == *csv8,
        format!("{} bytes, identical: {}", csv1.len(), csv1 == *csv8),
        start.elapsed(),
        secs(120),
    )
}

fn main() {
    let criteria: [fn() -> bool; 11] = [
        criterion_01_gradients,
        criterion_02_occupation_exactness,
        criterion_03_lemma1_pathwise,
        criterion_04_bandit_equivalence,
        criterion_05_vertex_fast_rate,
        criterion_06_interior_fast_rate,
        criterion_07_slow_rate_envelope,
        criterion_08_stopping_rule_coverage,
        criterion_09_mixed_feedback_degradation,
        criterion_10_presampling_floor,
        criterion_11_reproducibility,
    ];
    let mut failed = 0;
    for (i, c) in criteria.iter().enumerate() {
        match std::panic::catch_unwind(c) {
            Ok(true) => {}
            Ok(false) => failed += 1,
            Err(_) => {
                println!("criterion {:>2}: FAIL | panicked", i + 1);
                failed += 1;
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
