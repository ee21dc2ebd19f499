//! Bandit optimization over the probability simplex with the upper-confidence
//! Frank-Wolfe policy.
//!
//! A decision maker plays one of `K` actions per round and is scored on a
//! convex loss of the *proportions* of actions played so far. Gradient
//! coefficients are only known through noisy per-action observations, so the
//! policy steps toward the simplex vertex with the most optimistic gradient
//! estimate.
//!
//! The crate is `no_std` (it needs `alloc`). IO, config files and parallel
//! execution live in the `ucbfw` companion crate.
#![no_std]
// Validation is written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod error;
mod linalg;
mod math;

pub mod diagnostics;
pub mod feedback;
pub mod harness;
pub mod losses;
pub mod policies;
pub mod rng;
pub mod simplex;

pub use error::{Error, Result};
pub use feedback::{
    DeltaSchedule, Deviation, DeviationSpec, Distribution, Estimator, FeedbackState, NoiseSpec,
    ObservationModel,
};
pub use harness::{
    aggregate, bound_check, fit_rate, run_trial, Aggregate, BoundReport, BoundRow, BoundStatus,
    RateFit, Theorem, TrialRecord, TrialSpec,
};
pub use losses::{LossKind, LossModel, MinimizerInfo, PiecewiseLinear};
pub use policies::{PolicyKind, PolicySpec, PresampleConfig, StepDiagnostics, TieBreak};
pub use simplex::{OccupationState, SimplexPoint};
