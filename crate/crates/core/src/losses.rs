//! Parametric loss families `L(mu, p)` over the simplex.
//!
//! Every family has an analytic value, gradient and minimizer, plus the
//! constants the bound checks consume: smoothness `C`, strong-convexity
//! modulus, sup norms, the boundary distance `eta` of the minimizer and the
//! vertex gaps.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg;
use crate::math;
use crate::simplex::{SimplexPoint, SIMPLEX_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    /// `mu . p`, the multi-armed bandit pseudo-regret.
    Linear,
    /// `1/2 |p - theta|^2` with `theta` on the simplex.
    Quadratic,
    /// `sum sigma_i^2 / p_i`, variance of the pooled mean estimates.
    ExpDesign,
    /// `-sum beta_i log p_i`.
    CobbDouglas,
    /// `p' Sigma p - lambda mu' p`.
    Markowitz,
    /// `sum f_i(mu_i) p_i` for known monotone `f_i`.
    Separable,
}

impl LossKind {
    pub const ALL: [LossKind; 6] = [
        LossKind::Linear,
        LossKind::Quadratic,
        LossKind::ExpDesign,
        LossKind::CobbDouglas,
        LossKind::Markowitz,
        LossKind::Separable,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Linear => "linear",
            LossKind::Quadratic => "quadratic",
            LossKind::ExpDesign => "exp_design",
            LossKind::CobbDouglas => "cobb_douglas",
            LossKind::Markowitz => "markowitz",
            LossKind::Separable => "separable",
        }
    }

    /// Families whose loss blows up on the simplex boundary.
    pub fn interior_only(self) -> bool {
        matches!(self, LossKind::ExpDesign | LossKind::CobbDouglas)
    }
}

/// A monotone piecewise-linear function given by its knots. Constant
/// beyond the first and last knot.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(Error::Model("piecewise-linear function needs matching, nonempty knots".into()));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::Model("piecewise-linear knots must be finite".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Model("piecewise-linear knots must be strictly increasing in x".into()));
        }
        let up = ys.windows(2).all(|w| w[1] >= w[0]);
        let down = ys.windows(2).all(|w| w[1] <= w[0]);
        if !(up || down) {
            return Err(Error::Model("piecewise-linear function must be monotone".into()));
        }
        Ok(Self { xs, ys })
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.ys)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let hi = self.xs.partition_point(|&k| k <= x);
        let lo = hi - 1;
        let w = (x - self.xs[lo]) / (self.xs[hi] - self.xs[lo]);
        self.ys[lo] + w * (self.ys[hi] - self.ys[lo])
    }

    /// Largest absolute slope.
    pub fn lipschitz(&self) -> f64 {
        self.xs
            .windows(2)
            .zip(self.ys.windows(2))
            .map(|(x, y)| math::abs((y[1] - y[0]) / (x[1] - x[0])))
            .fold(0.0, f64::max)
    }
}

/// Known, non-estimated data attached to a family.
#[derive(Debug, Clone, PartialEq)]
pub enum FixedData {
    None,
    Markowitz {
        /// Row-major `K x K` covariance.
        covariance: Vec<f64>,
        risk_weight: f64,
    },
    Separable {
        functions: Vec<PiecewiseLinear>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizerInfo {
    pub p_star: SimplexPoint,
    pub loss_star: f64,
    /// Smallest coordinate of `p_star`, used as the boundary distance.
    pub eta: f64,
    /// `grad_i L(p*) - grad_{i*} L(p*)`, only when `p_star` is a vertex.
    pub gaps: Option<Vec<f64>>,
    pub gap_min: Option<f64>,
    /// `1 + C K / gap_min`, when the gap is positive and `C` finite.
    pub rho: Option<f64>,
    /// Several minimizers exist; `p_star` is the lowest-index one.
    pub non_unique: bool,
}

/// A loss family instance with its true parameters and analytic constants.
#[derive(Debug, Clone, PartialEq)]
pub struct LossModel {
    kind: LossKind,
    params: Vec<f64>,
    fixed: FixedData,
    strong_convexity: f64,
    smoothness_c: f64,
    sup_loss: f64,
    sup_grad: f64,
    minimizer: MinimizerInfo,
}

fn check_finite(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Model(format!("{name} must not be empty")));
    }
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::Model(format!("{name}[{i}] is not finite"))),
        None => Ok(()),
    }
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().map(math::abs).fold(0.0, f64::max)
}

impl LossModel {
    pub fn linear(mu: Vec<f64>) -> Result<Self> {
        check_finite("mu", &mu)?;
        let sup = max_abs(mu.iter().copied());
        Self::finish(LossKind::Linear, mu, FixedData::None, 0.0, 0.0, sup, sup)
    }

    pub fn quadratic(theta: Vec<f64>) -> Result<Self> {
        check_finite("theta", &theta)?;
        SimplexPoint::new(theta.clone()).map_err(|e| Error::Model(format!("theta is not on the simplex: {e}")))?;
        let k = theta.len();
        // Both sups of a convex function over the simplex sit at vertices.
        let (mut sup_loss, mut sup_grad) = (0.0_f64, 0.0_f64);
        for v in 0..k {
            let d = (0..k).map(|j| if j == v { 1.0 } else { 0.0 } - theta[j]);
            let sq: f64 = d.clone().map(|x| x * x).sum();
            sup_loss = sup_loss.max(0.5 * sq);
            sup_grad = sup_grad.max(max_abs(d));
        }
        Self::finish(LossKind::Quadratic, theta, FixedData::None, 1.0, 1.0, sup_loss, sup_grad)
    }

    pub fn exp_design(sigma2: Vec<f64>) -> Result<Self> {
        check_finite("sigma2", &sigma2)?;
        if let Some(i) = sigma2.iter().position(|&s| s <= 0.0) {
            return Err(Error::Model(format!("sigma2[{i}] must be positive")));
        }
        // Hessian diag(2 sigma^2 / p^3) >= 2 sigma^2 on the simplex.
        let sc = 2.0 * sigma2.iter().copied().fold(f64::INFINITY, f64::min);
        Self::finish(LossKind::ExpDesign, sigma2, FixedData::None, sc, f64::INFINITY, f64::INFINITY, f64::INFINITY)
    }

    pub fn cobb_douglas(beta: Vec<f64>) -> Result<Self> {
        check_finite("beta", &beta)?;
        if let Some(i) = beta.iter().position(|&b| !(b > 0.0 && b < 1.0)) {
            return Err(Error::Model(format!("beta[{i}] must lie in (0, 1)")));
        }
        // Hessian diag(beta / p^2) >= beta on the simplex.
        let sc = beta.iter().copied().fold(f64::INFINITY, f64::min);
        Self::finish(LossKind::CobbDouglas, beta, FixedData::None, sc, f64::INFINITY, f64::INFINITY, f64::INFINITY)
    }

    /// `covariance` is row-major `K x K`.
    pub fn markowitz(covariance: Vec<f64>, risk_weight: f64, mu: Vec<f64>) -> Result<Self> {
        check_finite("mu", &mu)?;
        check_finite("covariance", &covariance)?;
        let k = mu.len();
        if covariance.len() != k * k {
            return Err(Error::Model(format!("covariance must be {k}x{k}")));
        }
        if !risk_weight.is_finite() {
            return Err(Error::Model("risk_weight must be finite".into()));
        }
        for i in 0..k {
            for j in 0..i {
                let (a, b) = (covariance[i * k + j], covariance[j * k + i]);
                if math::abs(a - b) > 1e-12 * (1.0 + math::abs(a)) {
                    return Err(Error::Model(format!("covariance is not symmetric at ({i}, {j})")));
                }
            }
        }
        let eig = linalg::symmetric_eigenvalues(&covariance, k);
        let (lo, hi) = (eig[0], eig[k - 1]);
        if lo < -1e-10 * (1.0 + math::abs(hi)) {
            return Err(Error::Model(format!("covariance is not positive semidefinite (eigenvalue {lo})")));
        }
        let lo = lo.max(0.0);
        let cov = &covariance;
        let (mut sup_loss, mut sup_grad) = (0.0_f64, 0.0_f64);
        for v in 0..k {
            sup_loss = sup_loss.max(math::abs(cov[v * k + v] - risk_weight * mu[v]));
            sup_grad = sup_grad.max(max_abs((0..k).map(|j| 2.0 * cov[j * k + v] - risk_weight * mu[j])));
        }
        let fixed = FixedData::Markowitz { covariance, risk_weight };
        let mut model = Self::finish(LossKind::Markowitz, mu, fixed, 2.0 * lo, 2.0 * hi, sup_loss, sup_grad)?;
        // The minimum may be negative and larger in magnitude than any vertex value.
        model.sup_loss = model.sup_loss.max(math::abs(model.minimizer.loss_star));
        Ok(model)
    }

    pub fn separable(mu: Vec<f64>, functions: Vec<PiecewiseLinear>) -> Result<Self> {
        check_finite("mu", &mu)?;
        if functions.len() != mu.len() {
            return Err(Error::Model(format!("separable needs {} functions, got {}", mu.len(), functions.len())));
        }
        let sup = max_abs(mu.iter().zip(&functions).map(|(m, f)| f.eval(*m)));
        Self::finish(LossKind::Separable, mu, FixedData::Separable { functions }, 0.0, 0.0, sup, sup)
    }

    fn finish(
        kind: LossKind,
        params: Vec<f64>,
        fixed: FixedData,
        strong_convexity: f64,
        smoothness_c: f64,
        sup_loss: f64,
        sup_grad: f64,
    ) -> Result<Self> {
        if params.len() < 2 {
            return Err(Error::Model("need at least two actions".into()));
        }
        let placeholder = MinimizerInfo {
            p_star: SimplexPoint::uniform(params.len()),
            loss_star: 0.0,
            eta: 0.0,
            gaps: None,
            gap_min: None,
            rho: None,
            non_unique: false,
        };
        let mut model = Self {
            kind,
            params,
            fixed,
            strong_convexity,
            smoothness_c,
            sup_loss,
            sup_grad,
            minimizer: placeholder,
        };
        model.minimizer = model.solve_minimizer()?;
        Ok(model)
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn k(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn fixed(&self) -> &FixedData {
        &self.fixed
    }

    pub fn strong_convexity(&self) -> f64 {
        self.strong_convexity
    }

    /// Gradient-Lipschitz constant over the whole simplex (infinite for the
    /// interior-only families).
    pub fn smoothness_c(&self) -> f64 {
        self.smoothness_c
    }

    pub fn sup_loss(&self) -> f64 {
        self.sup_loss
    }

    pub fn sup_grad(&self) -> f64 {
        self.sup_grad
    }

    pub fn minimizer(&self) -> &MinimizerInfo {
        &self.minimizer
    }

    pub fn loss_value(&self, p: &SimplexPoint) -> Result<f64> {
        value_with(self.kind, &self.params, &self.fixed, p.coords())
    }

    pub fn loss_gradient(&self, p: &SimplexPoint) -> Result<Vec<f64>> {
        gradient_with(self.kind, &self.params, &self.fixed, p.coords())
    }

    /// The family's gradient map with `params` substituted for the truth.
    pub fn gradient_with_params(&self, params: &[f64], p: &SimplexPoint) -> Result<Vec<f64>> {
        gradient_from_params(self.kind, params, &self.fixed, p)
    }

    /// Per-coordinate sensitivity `|d grad_i / d param_i|` at `p`.
    pub fn sensitivity(&self, p: &SimplexPoint) -> Result<Vec<f64>> {
        let p = p.coords();
        check_domain(self.kind, p)?;
        Ok(match (&self.kind, &self.fixed) {
            (LossKind::Linear | LossKind::Quadratic, _) => vec![1.0; p.len()],
            (LossKind::Markowitz, FixedData::Markowitz { risk_weight, .. }) => {
                vec![math::abs(*risk_weight); p.len()]
            }
            (LossKind::Separable, FixedData::Separable { functions }) => {
                functions.iter().map(PiecewiseLinear::lipschitz).collect()
            }
            (LossKind::ExpDesign, _) => p.iter().map(|x| 1.0 / (x * x)).collect(),
            (LossKind::CobbDouglas, _) => p.iter().map(|x| 1.0 / x).collect(),
            _ => unreachable!("fixed data matches kind by construction"),
        })
    }

    /// Gradient-Lipschitz constant on `{p : p_i >= lower_i}`.
    pub fn interior_smoothness(&self, lower: &[f64]) -> Result<f64> {
        if !self.kind.interior_only() {
            return Ok(self.smoothness_c);
        }
        self.check_lower(lower)?;
        Ok(match self.kind {
            LossKind::ExpDesign => self
                .params
                .iter()
                .zip(lower)
                .map(|(s2, l)| 2.0 * s2 / (l * l * l))
                .fold(0.0, f64::max),
            _ => self.params.iter().zip(lower).map(|(b, l)| b / (l * l)).fold(0.0, f64::max),
        })
    }

    /// `(sup |L|, sup |grad L|_inf)` over `{p in simplex : p_i >= lower_i}`.
    pub fn restricted_sups(&self, lower: &[f64]) -> Result<(f64, f64)> {
        if !self.kind.interior_only() {
            return Ok((self.sup_loss, self.sup_grad));
        }
        self.check_lower(lower)?;
        let slack = 1.0 - lower.iter().sum::<f64>();
        // Convex loss: the max over the box-simplex is at one of its vertices.
        let mut sup_loss = 0.0_f64;
        for j in 0..self.k() {
            let mut v = lower.to_vec();
            v[j] += slack;
            let l = value_with(self.kind, &self.params, &self.fixed, &v)?;
            sup_loss = sup_loss.max(math::abs(l));
        }
        let sup_grad = match self.kind {
            LossKind::ExpDesign => self.params.iter().zip(lower).map(|(s2, l)| s2 / (l * l)).fold(0.0, f64::max),
            _ => self.params.iter().zip(lower).map(|(b, l)| b / l).fold(0.0, f64::max),
        };
        Ok((sup_loss, sup_grad))
    }

    fn check_lower(&self, lower: &[f64]) -> Result<()> {
        if lower.len() != self.k() {
            return Err(Error::Argument(format!("lower bounds need {} entries", self.k())));
        }
        if let Some(i) = lower.iter().position(|&l| !(l > 0.0)) {
            return Err(Error::Argument(format!("lower bound {i} must be positive")));
        }
        if lower.iter().sum::<f64>() > 1.0 + SIMPLEX_TOL {
            return Err(Error::Argument("lower bounds sum above 1".into()));
        }
        Ok(())
    }

    fn solve_minimizer(&self) -> Result<MinimizerInfo> {
        let k = self.k();
        let (p_star, non_unique) = match self.kind {
            LossKind::Linear => vertex_argmin(&self.params),
            LossKind::Separable => {
                let FixedData::Separable { functions } = &self.fixed else { unreachable!() };
                let vals: Vec<f64> = self.params.iter().zip(functions).map(|(m, f)| f.eval(*m)).collect();
                vertex_argmin(&vals)
            }
            LossKind::Quadratic => (self.params.clone(), false),
            LossKind::ExpDesign => {
                let s: Vec<f64> = self.params.iter().map(|v| math::sqrt(*v)).collect();
                let total: f64 = s.iter().sum();
                (s.iter().map(|x| x / total).collect(), false)
            }
            LossKind::CobbDouglas => {
                let total: f64 = self.params.iter().sum();
                (self.params.iter().map(|b| b / total).collect(), false)
            }
            LossKind::Markowitz => {
                let FixedData::Markowitz { covariance, risk_weight } = &self.fixed else { unreachable!() };
                (markowitz_active_set(covariance, *risk_weight, &self.params)?, false)
            }
        };
        let p_star = SimplexPoint::from_raw(p_star);
        let loss_star = self.loss_value(&p_star)?;
        let eta = p_star.min_coord();
        let (gaps, gap_min, rho) = match p_star.as_vertex() {
            Some(star) => {
                let g = self.loss_gradient(&p_star)?;
                let gaps: Vec<f64> = g.iter().map(|gi| gi - g[star]).collect();
                let gap_min = (0..k).filter(|&i| i != star).map(|i| gaps[i]).fold(f64::INFINITY, f64::min);
                let rho = (gap_min > 0.0 && self.smoothness_c.is_finite())
                    .then(|| 1.0 + self.smoothness_c * k as f64 / gap_min);
                (Some(gaps), Some(gap_min), rho)
            }
            None => (None, None, None),
        };
        Ok(MinimizerInfo { p_star, loss_star, eta, gaps, gap_min, rho, non_unique })
    }
}

fn vertex_argmin(values: &[f64]) -> (Vec<f64>, bool) {
    let best = values.iter().copied().fold(f64::INFINITY, f64::min);
    let star = values.iter().position(|&v| v == best).unwrap_or(0);
    let ties = values.iter().filter(|&&v| v == best).count() > 1;
    let mut p = vec![0.0; values.len()];
    p[star] = 1.0;
    (p, ties)
}

/// Minimizes `p' S p - lambda mu' p` over the simplex by enumerating active
/// sets: on each candidate support the equality-constrained KKT system is
/// solved, and the support is kept if primal and dual feasibility hold.
fn markowitz_active_set(cov: &[f64], lambda: f64, mu: &[f64]) -> Result<Vec<f64>> {
    let k = mu.len();
    if k > 20 {
        return Err(Error::Model("markowitz minimizer supports at most 20 actions".into()));
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut masks: Vec<u32> = (1..(1u32 << k)).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    for mask in masks {
        let support: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        let n = support.len() + 1;
        let mut a = vec![0.0; n * n];
        let mut b = vec![0.0; n];
        for (r, &i) in support.iter().enumerate() {
            for (c, &j) in support.iter().enumerate() {
                a[r * n + c] = 2.0 * cov[i * k + j];
            }
            a[r * n + n - 1] = 1.0;
            a[(n - 1) * n + r] = 1.0;
            b[r] = lambda * mu[i];
        }
        b[n - 1] = 1.0;
        let Some(x) = linalg::solve(a, b) else { continue };
        if x[..n - 1].iter().any(|&v| v < -1e-12) {
            continue;
        }
        let mut p = vec![0.0; k];
        for (r, &i) in support.iter().enumerate() {
            p[i] = x[r].max(0.0);
        }
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= total);
        let grad: Vec<f64> = (0..k)
            .map(|i| 2.0 * (0..k).map(|j| cov[i * k + j] * p[j]).sum::<f64>() - lambda * mu[i])
            .collect();
        let level = -x[n - 1];
        let scale = 1.0 + max_abs(grad.iter().copied());
        if (0..k).any(|i| mask & (1 << i) == 0 && grad[i] < level - 1e-10 * scale) {
            continue;
        }
        let value: f64 = (0..k)
            .map(|i| p[i] * ((0..k).map(|j| cov[i * k + j] * p[j]).sum::<f64>() - lambda * mu[i]))
            .sum();
        if best.as_ref().is_none_or(|(v, _)| value < *v - 1e-14 * (1.0 + math::abs(*v))) {
            best = Some((value, p));
        }
    }
    best.map(|(_, p)| p)
        .ok_or_else(|| Error::Model("markowitz active-set search found no KKT point".into()))
}

fn check_domain(kind: LossKind, p: &[f64]) -> Result<()> {
    if kind.interior_only() {
        if let Some(i) = p.iter().position(|&x| !(x > 0.0)) {
            return Err(Error::Domain { coordinate: i, value: p[i] });
        }
    }
    Ok(())
}

fn check_shape(params: &[f64], p: &[f64]) -> Result<()> {
    if params.len() != p.len() {
        return Err(Error::Argument(format!("point has {} coordinates, model has {}", p.len(), params.len())));
    }
    Ok(())
}

fn value_with(kind: LossKind, params: &[f64], fixed: &FixedData, p: &[f64]) -> Result<f64> {
    check_shape(params, p)?;
    check_domain(kind, p)?;
    let dot = |a: &[f64]| a.iter().zip(p).map(|(x, y)| x * y).sum::<f64>();
    Ok(match (kind, fixed) {
        (LossKind::Linear, _) => dot(params),
        (LossKind::Quadratic, _) => 0.5 * p.iter().zip(params).map(|(x, t)| (x - t) * (x - t)).sum::<f64>(),
        (LossKind::ExpDesign, _) => params.iter().zip(p).map(|(s, x)| s / x).sum(),
        (LossKind::CobbDouglas, _) => -params.iter().zip(p).map(|(b, x)| b * math::ln(*x)).sum::<f64>(),
        (LossKind::Markowitz, FixedData::Markowitz { covariance, risk_weight }) => {
            let k = p.len();
            let quad: f64 = (0..k)
                .map(|i| p[i] * (0..k).map(|j| covariance[i * k + j] * p[j]).sum::<f64>())
                .sum();
            quad - risk_weight * dot(params)
        }
        (LossKind::Separable, FixedData::Separable { functions }) => {
            functions.iter().zip(params).zip(p).map(|((f, m), x)| f.eval(*m) * x).sum()
        }
        _ => return Err(Error::Model(format!("fixed data does not match {}", kind.name()))),
    })
}

fn gradient_with(kind: LossKind, params: &[f64], fixed: &FixedData, p: &[f64]) -> Result<Vec<f64>> {
    check_shape(params, p)?;
    check_domain(kind, p)?;
    Ok(match (kind, fixed) {
        (LossKind::Linear, _) => params.to_vec(),
        (LossKind::Quadratic, _) => p.iter().zip(params).map(|(x, t)| x - t).collect(),
        (LossKind::ExpDesign, _) => params.iter().zip(p).map(|(s, x)| -s / (x * x)).collect(),
        (LossKind::CobbDouglas, _) => params.iter().zip(p).map(|(b, x)| -b / x).collect(),
        (LossKind::Markowitz, FixedData::Markowitz { covariance, risk_weight }) => {
            let k = p.len();
            (0..k)
                .map(|i| 2.0 * (0..k).map(|j| covariance[i * k + j] * p[j]).sum::<f64>() - risk_weight * params[i])
                .collect()
        }
        (LossKind::Separable, FixedData::Separable { functions }) => {
            functions.iter().zip(params).map(|(f, m)| f.eval(*m)).collect()
        }
        _ => return Err(Error::Model(format!("fixed data does not match {}", kind.name()))),
    })
}

/// Gradient of the family at `p` with estimated parameters plugged in.
pub fn gradient_from_params(kind: LossKind, params: &[f64], fixed: &FixedData, p: &SimplexPoint) -> Result<Vec<f64>> {
    gradient_with(kind, params, fixed, p.coords())
}

/// Conditions under which the quadratic lower-bound construction is proven.
#[derive(Debug, Clone, PartialEq)]
pub enum RangeWarning {
    NuOutOfRange(f64),
    HorizonTooSmall { horizon: u64, required: f64 },
    TooFewActions { k: usize, required: f64 },
}

/// Quadratic instance centered at `theta_eps`, the hard family behind the
/// `K^2 / T` lower bound: coordinates `2i-1, 2i` are shifted by
/// `+-eps_i sqrt(nu K / T)` around `1/K`.
pub fn hard_quadratic_family(k: usize, nu: f64, horizon: u64, signs: &[i8]) -> Result<(LossModel, Vec<RangeWarning>)> {
    if k == 0 || !k.is_multiple_of(2) {
        return Err(Error::Argument(format!("K must be a positive even integer, got {k}")));
    }
    if signs.len() != k / 2 || signs.iter().any(|s| *s != 1 && *s != -1) {
        return Err(Error::Argument(format!("need {} signs in {{-1, +1}}", k / 2)));
    }
    if !(nu > 0.0) || horizon == 0 {
        return Err(Error::Argument("nu and T must be positive".into()));
    }
    let mut warnings = Vec::new();
    if nu >= 1.0 / 29.0 {
        warnings.push(RangeWarning::NuOutOfRange(nu));
    }
    let kf = k as f64;
    let required = 4.0 * nu * nu * kf * kf * kf * kf;
    if (horizon as f64) <= required {
        warnings.push(RangeWarning::HorizonTooSmall { horizon, required });
    }
    let min_k = 64.0 * core::f64::consts::LN_2 / nu;
    if kf <= min_k {
        warnings.push(RangeWarning::TooFewActions { k, required: min_k });
    }
    let shift = math::sqrt(nu * kf / horizon as f64);
    let base = 1.0 / kf;
    if shift > base {
        return Err(Error::Argument(format!("shift {shift} pushes theta off the simplex")));
    }
    let theta: Vec<f64> = signs
        .iter()
        .flat_map(|&s| {
            let d = f64::from(s) * shift;
            [base + d, base - d]
        })
        .collect();
    Ok((LossModel::quadratic(theta)?, warnings))
}

/// Convenience for error messages and CSV output.
pub fn describe(model: &LossModel) -> String {
    format!("{}(K={})", model.kind.name(), model.k())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(v: &[f64]) -> SimplexPoint {
        SimplexPoint::new(v.to_vec()).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn values() {
        let lin = LossModel::linear(vec![0.1, 0.5]).unwrap();
        assert!(close(lin.loss_value(&pt(&[0.5, 0.5])).unwrap(), 0.3, 1e-15));
        let ed = LossModel::exp_design(vec![1.0, 4.0]).unwrap();
        assert!(close(ed.loss_value(&pt(&[1.0 / 3.0, 2.0 / 3.0])).unwrap(), 9.0, 1e-12));
        let cd = LossModel::cobb_douglas(vec![0.5, 0.5]).unwrap();
        assert!(close(cd.loss_value(&pt(&[0.5, 0.5])).unwrap(), core::f64::consts::LN_2, 1e-15));
    }

    #[test]
    fn gradients() {
        let q = LossModel::quadratic(vec![0.5, 0.5]).unwrap();
        assert_eq!(q.loss_gradient(&pt(&[1.0, 0.0])).unwrap(), vec![0.5, -0.5]);
        let ed = LossModel::exp_design(vec![1.0, 4.0]).unwrap();
        let g = ed.loss_gradient(&pt(&[1.0 / 3.0, 2.0 / 3.0])).unwrap();
        assert!(close(g[0], -9.0, 1e-12) && close(g[1], -9.0, 1e-12));
        let mk = LossModel::markowitz(vec![1.0, 0.0, 0.0, 1.0], 1.0, vec![1.0, 0.0]).unwrap();
        assert_eq!(mk.loss_gradient(&pt(&[0.5, 0.5])).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn gradients_from_estimates() {
        let lin = LossModel::linear(vec![0.1, 0.5]).unwrap();
        assert_eq!(lin.gradient_with_params(&[0.2, 0.4], &pt(&[0.9, 0.1])).unwrap(), vec![0.2, 0.4]);
        let ed = LossModel::exp_design(vec![1.0, 4.0]).unwrap();
        assert_eq!(ed.gradient_with_params(&[2.0, 2.0], &pt(&[0.5, 0.5])).unwrap(), vec![-8.0, -8.0]);
        let q = LossModel::quadratic(vec![0.5, 0.5]).unwrap();
        let g = q.gradient_with_params(&[0.3, 0.7], &pt(&[0.5, 0.5])).unwrap();
        assert!(close(g[0], 0.2, 1e-15) && close(g[1], -0.2, 1e-15));
    }

    #[test]
    fn domain_error_names_coordinate() {
        let ed = LossModel::exp_design(vec![1.0, 4.0]).unwrap();
        assert_eq!(ed.loss_value(&pt(&[1.0, 0.0])), Err(Error::Domain { coordinate: 1, value: 0.0 }));
        let cd = LossModel::cobb_douglas(vec![0.5, 0.5]).unwrap();
        assert!(matches!(cd.loss_gradient(&pt(&[0.0, 1.0])), Err(Error::Domain { coordinate: 0, .. })));
    }

    #[test]
    fn closed_form_minimizers() {
        let ed = LossModel::exp_design(vec![1.0, 4.0]).unwrap();
        let m = ed.minimizer();
        assert!(close(m.p_star.coords()[0], 1.0 / 3.0, 1e-15));
        assert!(close(m.loss_star, 9.0, 1e-12));
        assert!(m.gaps.is_none());

        let mk = LossModel::markowitz(vec![1.0, 0.0, 0.0, 1.0], 1.0, vec![1.0, 0.0]).unwrap();
        let m = mk.minimizer();
        assert!(close(m.p_star.coords()[0], 0.75, 1e-12));
        assert!(close(m.loss_star, -0.125, 1e-12));

        let lin = LossModel::linear(vec![0.1, 0.5]).unwrap();
        let m = lin.minimizer();
        assert_eq!(m.p_star.coords(), &[1.0, 0.0]);
        assert!(close(m.loss_star, 0.1, 1e-15));
        let gaps = m.gaps.as_ref().unwrap();
        assert!(close(gaps[0], 0.0, 0.0) && close(gaps[1], 0.4, 1e-15));
        assert_eq!(m.rho, Some(1.0));

        let q = LossModel::quadratic(vec![0.2, 0.3, 0.5]).unwrap();
        assert_eq!(q.minimizer().eta, 0.2);
        assert_eq!(q.minimizer().loss_star, 0.0);
    }

    #[test]
    fn tied_vertex_is_flagged() {
        let lin = LossModel::linear(vec![0.3, 0.1, 0.1]).unwrap();
        assert!(lin.minimizer().non_unique);
        assert_eq!(lin.minimizer().p_star.as_vertex(), Some(1));
    }

    #[test]
    fn markowitz_binding_nonnegativity() {
        // Strong return on action 0 pushes the unconstrained optimum outside.
        let mk = LossModel::markowitz(vec![1.0, 0.0, 0.0, 1.0], 10.0, vec![1.0, 0.0]).unwrap();
        assert_eq!(mk.minimizer().p_star.coords(), &[1.0, 0.0]);
        let gaps = mk.minimizer().gaps.clone().unwrap();
        assert!(gaps[1] > 0.0);
    }

    #[test]
    fn invalid_models() {
        assert!(LossModel::quadratic(vec![0.6, 0.6]).is_err());
        assert!(LossModel::exp_design(vec![1.0, 0.0]).is_err());
        assert!(LossModel::cobb_douglas(vec![0.5, 1.0]).is_err());
        assert!(LossModel::markowitz(vec![1.0, 2.0, 2.0, 1.0], 1.0, vec![0.0, 0.0]).is_err());
        assert!(LossModel::markowitz(vec![1.0, 0.5, 0.0, 1.0], 1.0, vec![0.0, 0.0]).is_err());
        assert!(PiecewiseLinear::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn hard_family_examples() {
        let (m, _) = hard_quadratic_family(4, 0.01, 10_000, &[1, -1]).unwrap();
        let want = [0.252, 0.248, 0.248, 0.252];
        for (a, b) in m.params().iter().zip(want) {
            assert!(close(*a, b, 1e-15));
        }
        let (m, _) = hard_quadratic_family(2, 0.01, 1_000_000, &[1]).unwrap();
        assert!(close(m.params()[0], 0.50014142, 1e-8));
        assert!(close(m.params()[1], 0.49985858, 1e-8));
        assert!(hard_quadratic_family(3, 0.01, 100, &[1]).is_err());
    }

    #[test]
    fn hard_family_warnings() {
        let (_, w) = hard_quadratic_family(4, 0.2, 20, &[1, 1]).unwrap();
        assert!(w.iter().any(|x| matches!(x, RangeWarning::NuOutOfRange(_))));
        assert!(w.iter().any(|x| matches!(x, RangeWarning::HorizonTooSmall { .. })));
    }

    #[test]
    fn interior_smoothness_examples() {
        let ed = LossModel::exp_design(vec![1.0, 1.0]).unwrap();
        assert!(close(ed.interior_smoothness(&[0.5, 0.5]).unwrap(), 16.0, 1e-12));
        let ed = LossModel::exp_design(vec![1.0, 4.0]).unwrap();
        assert!(close(ed.interior_smoothness(&[1.0 / 3.0, 2.0 / 3.0]).unwrap(), 54.0, 1e-9));
        let cd = LossModel::cobb_douglas(vec![0.5, 0.5]).unwrap();
        assert!(close(cd.interior_smoothness(&[0.25, 0.25]).unwrap(), 8.0, 1e-12));
        let q = LossModel::quadratic(vec![0.5, 0.5]).unwrap();
        assert_eq!(q.interior_smoothness(&[0.1, 0.1]).unwrap(), 1.0);
    }

    #[test]
    fn separable_model() {
        let f = PiecewiseLinear::new(vec![0.0, 1.0], vec![0.0, 2.0]).unwrap();
        let g = PiecewiseLinear::new(vec![0.0, 1.0], vec![1.0, 0.0]).unwrap();
        let m = LossModel::separable(vec![0.25, 0.25], vec![f, g]).unwrap();
        assert_eq!(m.loss_gradient(&pt(&[0.5, 0.5])).unwrap(), vec![0.5, 0.75]);
        assert_eq!(m.minimizer().p_star.as_vertex(), Some(0));
        assert_eq!(m.sensitivity(&pt(&[0.5, 0.5])).unwrap(), vec![2.0, 1.0]);
    }

    #[test]
    fn restricted_sups_cover_box() {
        let ed = LossModel::exp_design(vec![1.0, 4.0]).unwrap();
        let (sl, sg) = ed.restricted_sups(&[0.2, 0.4]).unwrap();
        // vertices (0.6, 0.4) and (0.2, 0.8)
        assert!(close(sl, (1.0_f64 / 0.6 + 10.0).max(5.0 + 5.0), 1e-12));
        assert!(close(sg, 25.0, 1e-12));
    }
}
