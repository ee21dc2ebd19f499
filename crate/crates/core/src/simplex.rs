//! Occupation-measure bookkeeping.
//!
//! The proportion vector `p_t` is never stored; it is derived from integer
//! pull counts on demand so that it cannot drift. The float recurrence
//! `p_{t+1} = p_t + (e_a - p_t) / (t + 1)` is kept only as [`Recurrence`], a
//! cross-check.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Tolerance on the unit-sum constraint of a [`SimplexPoint`].
pub const SIMPLEX_TOL: f64 = 1e-12;

/// A point of the unit simplex of `R^K`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint {
    coords: Vec<f64>,
}

impl SimplexPoint {
    /// Validates nonnegativity and unit sum (within [`SIMPLEX_TOL`]).
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Argument("simplex point needs at least one coordinate".into()));
        }
        if let Some(i) = coords.iter().position(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::Argument(alloc::format!(
                "coordinate {i} is negative or not finite ({})",
                coords[i]
            )));
        }
        let sum: f64 = coords.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::Argument(alloc::format!("coordinates sum to {sum}, not 1")));
        }
        Ok(Self { coords })
    }

    /// The basis point `e_i`.
    pub fn vertex(k: usize, i: usize) -> Result<Self> {
        if i >= k {
            return Err(Error::ActionOutOfRange { action: i, k });
        }
        let mut coords = vec![0.0; k];
        coords[i] = 1.0;
        Ok(Self { coords })
    }

    pub fn uniform(k: usize) -> Self {
        Self { coords: vec![1.0 / k as f64; k] }
    }

    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.coords
    }

    /// Index of the unit coordinate if this point is a vertex.
    pub fn as_vertex(&self) -> Option<usize> {
        let i = self.coords.iter().position(|&c| c == 1.0)?;
        self.coords
            .iter()
            .enumerate()
            .all(|(j, &c)| j == i || c == 0.0)
            .then_some(i)
    }

    /// Smallest coordinate.
    pub fn min_coord(&self) -> f64 {
        self.coords.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Exact pull counts `T_i(t)` and the round index `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupationState {
    t: u64,
    counts: Vec<u64>,
}

impl OccupationState {
    pub fn new(k: usize) -> Self {
        Self { t: 0, counts: vec![0; k] }
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Records one play of `action`.
    pub fn apply_action(&mut self, action: usize) -> Result<()> {
        let k = self.k();
        let slot = self
            .counts
            .get_mut(action)
            .ok_or(Error::ActionOutOfRange { action, k })?;
        *slot += 1;
        self.t += 1;
        Ok(())
    }

    /// `p_t = (T_1(t)/t, ..., T_K(t)/t)`, one rounding per coordinate.
    pub fn occupation_vector(&self) -> Result<SimplexPoint> {
        if self.t == 0 {
            return Err(Error::UndefinedState);
        }
        let t = self.t as f64;
        Ok(SimplexPoint::from_raw(self.counts.iter().map(|&c| c as f64 / t).collect()))
    }

    /// Share of `action` after one more round in which it is not played.
    pub fn share_if_skipped(&self, action: usize) -> f64 {
        self.counts[action] as f64 / (self.t + 1) as f64
    }
}

/// Float fold of the occupation recurrence, used to cross-check
/// [`OccupationState::occupation_vector`].
#[derive(Debug, Clone)]
pub struct Recurrence {
    t: u64,
    p: Vec<f64>,
}

impl Recurrence {
    pub fn new(k: usize) -> Self {
        Self { t: 0, p: vec![0.0; k] }
    }

    pub fn step(&mut self, action: usize) {
        let step = 1.0 / (self.t + 1) as f64;
        for (i, x) in self.p.iter_mut().enumerate() {
            let target = if i == action { 1.0 } else { 0.0 };
            *x += step * (target - *x);
        }
        self.t += 1;
    }

    pub fn point(&self) -> &[f64] {
        &self.p
    }
}
