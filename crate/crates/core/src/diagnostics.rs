//! Numerical self-checks: finite-difference gradients and minimizer sanity.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;
use crate::feedback::NoiseSpec;
use crate::harness::{run_trial, TrialSpec, PATHWISE_TOL};
use crate::losses::{hard_quadratic_family, LossKind, LossModel, PiecewiseLinear};
use crate::math;
use crate::policies::{variance_stopping_tau, PolicyKind, PolicySpec};
use crate::rng::CounterRng;
use crate::simplex::{OccupationState, Recurrence, SimplexPoint};

pub const FD_STEP: f64 = 1e-6;
pub const GRADIENT_TOL: f64 = 1e-6;
pub const STATIONARITY_TOL: f64 = 1e-8;
/// Smallest coordinate of the random interior points used by the gradient check.
pub const INTERIOR_FLOOR: f64 = 0.02;

/// Support threshold when reading off the active set of a minimizer.
const SUPPORT_TOL: f64 = 1e-12;

fn uniform(rng: &mut CounterRng) -> f64 {
    rng.uniform_pair().0
}

fn uniform_in(rng: &mut CounterRng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * uniform(rng)
}

/// Uniform point of the simplex (flat Dirichlet).
pub fn random_simplex_point(k: usize, rng: &mut CounterRng) -> SimplexPoint {
    let w: Vec<f64> = (0..k).map(|_| -math::ln(1.0 - uniform(rng))).collect();
    let s: f64 = w.iter().sum();
    if !(s > 0.0) {
        return SimplexPoint::uniform(k);
    }
    SimplexPoint::from_raw(w.iter().map(|x| x / s).collect())
}

/// Random point with every coordinate at least `floor`.
pub fn random_interior_point(k: usize, floor: f64, rng: &mut CounterRng) -> SimplexPoint {
    let q = random_simplex_point(k, rng);
    let scale = 1.0 - floor * k as f64;
    SimplexPoint::from_raw(q.coords().iter().map(|x| floor + scale * x).collect())
}

/// A random, well-posed instance of `kind` with `k` actions.
pub fn random_instance(kind: LossKind, k: usize, rng: &mut CounterRng) -> Result<LossModel> {
    match kind {
        LossKind::Linear => LossModel::linear((0..k).map(|_| uniform_in(rng, -1.0, 1.0)).collect()),
        LossKind::Quadratic => LossModel::quadratic(random_simplex_point(k, rng).into_inner()),
        LossKind::ExpDesign => LossModel::exp_design((0..k).map(|_| uniform_in(rng, 0.25, 4.0)).collect()),
        LossKind::CobbDouglas => LossModel::cobb_douglas((0..k).map(|_| uniform_in(rng, 0.1, 0.9)).collect()),
        LossKind::Markowitz => {
            // A^T A + 0.1 I is symmetric positive definite.
            let a: Vec<f64> = (0..k * k).map(|_| uniform_in(rng, -1.0, 1.0)).collect();
            let mut cov = vec![0.0; k * k];
            for i in 0..k {
                for j in 0..k {
                    cov[i * k + j] = (0..k).map(|r| a[r * k + i] * a[r * k + j]).sum::<f64>();
                }
                cov[i * k + i] += 0.1;
            }
            let lambda = uniform_in(rng, 0.5, 2.0);
            LossModel::markowitz(cov, lambda, (0..k).map(|_| uniform_in(rng, -1.0, 1.0)).collect())
        }
        LossKind::Separable => {
            let mut functions = Vec::with_capacity(k);
            for _ in 0..k {
                let sign = if uniform(rng) < 0.5 { -1.0 } else { 1.0 };
                let mut y = uniform_in(rng, -1.0, 1.0);
                let mut ys = vec![y];
                for _ in 0..3 {
                    y += sign * uniform_in(rng, 0.0, 1.0);
                    ys.push(y);
                }
                functions.push(PiecewiseLinear::new(vec![-1.0, -0.3, 0.4, 1.0], ys)?);
            }
            LossModel::separable((0..k).map(|_| uniform_in(rng, -1.2, 1.2)).collect(), functions)
        }
    }
}

/// `max_i |FD_i - (g_i - mean g)| / max(|g|_inf, tiny)` where `FD_i` is the
/// central difference of the loss along `e_i - 1/K`, a direction inside the
/// simplex's affine hull.
pub fn gradient_rel_error(model: &LossModel, p: &SimplexPoint) -> Result<f64> {
    let g = model.loss_gradient(p)?;
    let k = g.len();
    let mean = g.iter().sum::<f64>() / k as f64;
    let scale = g.iter().map(|x| math::abs(*x)).fold(f64::MIN_POSITIVE, f64::max);
    let mut worst = 0.0_f64;
    for (i, gi) in g.iter().enumerate() {
        let shifted = |h: f64| {
            let c: Vec<f64> = p
                .coords()
                .iter()
                .enumerate()
                .map(|(j, x)| x + h * (if i == j { 1.0 } else { 0.0 } - 1.0 / k as f64))
                .collect();
            SimplexPoint::from_raw(c)
        };
        let fd = (model.loss_value(&shifted(FD_STEP))? - model.loss_value(&shifted(-FD_STEP))?) / (2.0 * FD_STEP);
        worst = worst.max(math::abs(fd - (gi - mean)) / scale);
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheck {
    pub kind: LossKind,
    pub points: usize,
    pub max_rel_error: f64,
    pub pass: bool,
}

/// Checks `points` random (instance, interior point) pairs per family.
pub fn gradient_suite(seed: u64, points: usize) -> Result<Vec<GradientCheck>> {
    LossKind::ALL
        .iter()
        .enumerate()
        .map(|(f, &kind)| {
            let mut rng = CounterRng::new(seed, f as u64);
            let mut worst = 0.0_f64;
            for _ in 0..points {
                let k = 2 + (uniform(&mut rng) * 4.0) as usize;
                let model = random_instance(kind, k, &mut rng)?;
                let p = random_interior_point(k, INTERIOR_FLOOR, &mut rng);
                worst = worst.max(gradient_rel_error(&model, &p)?);
            }
            Ok(GradientCheck { kind, points, max_rel_error: worst, pass: worst <= GRADIENT_TOL })
        })
        .collect()
}

/// Projected-gradient KKT residual of `p` for `min L` over the simplex: the
/// spread of the gradient on the support, plus how far any off-support
/// coordinate undercuts it.
pub fn stationarity_residual(model: &LossModel, p: &SimplexPoint) -> Result<f64> {
    let g = model.loss_gradient(p)?;
    let support: Vec<usize> = (0..g.len()).filter(|&i| p.coords()[i] > SUPPORT_TOL).collect();
    let level = support.iter().map(|&i| g[i]).sum::<f64>() / support.len() as f64;
    let mut r = 0.0_f64;
    for (i, gi) in g.iter().enumerate() {
        let v = if support.contains(&i) { math::abs(gi - level) } else { (level - gi).max(0.0) };
        r = r.max(v);
    }
    Ok(r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizerCheck {
    pub kind: LossKind,
    /// Largest `L(p*) - L(q)` over the sampled `q` (nonpositive when sound).
    pub worst_violation: f64,
    pub stationarity: f64,
    pub pass: bool,
}

/// Compares `L(p*)` against `samples` random points and checks stationarity.
pub fn minimizer_check(model: &LossModel, samples: usize, rng: &mut CounterRng) -> Result<MinimizerCheck> {
    let info = model.minimizer();
    let k = model.k();
    let tol = 1e-12 * (1.0 + math::abs(info.loss_star));
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..samples {
        let q = random_simplex_point(k, rng);
        // Points on the boundary of an interior-only family have infinite loss.
        if let Ok(l) = model.loss_value(&q) {
            worst = worst.max(info.loss_star - l);
        }
    }
    let stationarity = stationarity_residual(model, &info.p_star)?;
    Ok(MinimizerCheck {
        kind: model.kind(),
        worst_violation: worst,
        stationarity,
        pass: worst <= tol && stationarity <= STATIONARITY_TOL,
    })
}

/// One random instance per family, `samples` comparison points each.
pub fn minimizer_suite(seed: u64, samples: usize) -> Result<Vec<MinimizerCheck>> {
    LossKind::ALL
        .iter()
        .enumerate()
        .map(|(f, &kind)| {
            let mut rng = CounterRng::new(seed, 64 + f as u64);
            let k = 2 + (uniform(&mut rng) * 4.0) as usize;
            let model = random_instance(kind, k, &mut rng)?;
            minimizer_check(&model, samples, &mut rng)
        })
        .collect()
}

/// Outcome of one self-test property.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfTestItem {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn item(name: &'static str, pass: bool, detail: String) -> SelfTestItem {
    SelfTestItem { name, pass, detail }
}

/// Runs every property suite at a size that finishes in a few seconds.
pub fn selftest(seed: u64) -> Result<Vec<SelfTestItem>> {
    let mut out = Vec::new();

    for c in gradient_suite(seed, 100)? {
        out.push(item("gradient", c.pass, format!("{}: max rel err {:.3e}", c.kind.name(), c.max_rel_error)));
    }
    for c in minimizer_suite(seed, 1000)? {
        out.push(item(
            "minimizer",
            c.pass,
            format!("{}: violation {:.3e}, stationarity {:.3e}", c.kind.name(), c.worst_violation, c.stationarity),
        ));
    }

    let mut rng = CounterRng::new(seed, 200);
    let mut worst_gap = 0.0_f64;
    for f in 0..20 {
        let kind = LossKind::ALL[f % LossKind::ALL.len()];
        let model = random_instance(kind, 2 + f % 4, &mut rng)?;
        if let Some(g) = &model.minimizer().gaps {
            worst_gap = g.iter().copied().fold(worst_gap, f64::min);
        }
    }
    out.push(item("kkt_gaps", worst_gap >= -1e-12, format!("smallest gap {worst_gap:.3e}")));

    let mut worst = 0.0_f64;
    let mut exact = true;
    for k in 2..6 {
        let mut occ = OccupationState::new(k);
        let mut rec = Recurrence::new(k);
        for _ in 0..20_000 {
            let a = (rng.uniform_pair().0 * k as f64) as usize;
            occ.apply_action(a)?;
            rec.step(a);
        }
        let p = occ.occupation_vector()?;
        for (x, y) in p.coords().iter().zip(rec.point()) {
            worst = worst.max(math::abs(x - y));
        }
        exact &= occ.counts().iter().sum::<u64>() == occ.t();
    }
    out.push(item("occupation", exact && worst <= 1e-9, format!("max recurrence drift {worst:.3e}")));

    let mut seq = CounterRng::new(seed, 3);
    let random_access = (0..64).all(|i| seq.next_pair() == CounterRng::at(seed, 3, i).next_pair());
    out.push(item("rng_random_access", random_access, String::from("64 draws")));

    let model = LossModel::quadratic(vec![0.5, 0.5])?;
    let mut spec = TrialSpec::new(
        model,
        PolicySpec::new(PolicyKind::OracleFw),
        NoiseSpec::Deterministic,
        (1..=1000).collect(),
    );
    spec.diagnostics = true;
    let rec = run_trial(&spec, seed)?;
    let bounds = rec.excess_bound.as_deref().unwrap_or(&[]);
    let pathwise = rec.errors.iter().zip(bounds).all(|(e, b)| *e <= b + PATHWISE_TOL);
    out.push(item("pathwise_excess", pathwise, String::from("oracle quadratic, T <= 1000")));

    let (hard, _) = hard_quadratic_family(6, 0.01, 10_000, &[1, -1, 1])?;
    let sum: f64 = hard.params().iter().sum();
    out.push(item("hard_family", math::abs(sum - 1.0) <= 1e-15, format!("theta sums to 1 {:+.1e}", sum - 1.0)));

    let mut covered = 0;
    let reps = 500;
    for r in 0..reps {
        let mut s = CounterRng::new(seed, 1000 + r);
        let stream = (0..1000).map(move |_| if s.uniform_pair().0 < 0.5 { 1.0 } else { 0.0 });
        let o = variance_stopping_tau(stream, 1000, 0.05)?;
        if o.triggered && o.mean / 2.0 <= 0.5 && 0.5 <= 1.5 * o.mean {
            covered += 1;
        }
    }
    out.push(item("stopping_coverage", covered * 100 >= reps * 94, format!("{covered}/{reps}")));

    Ok(out)
}
