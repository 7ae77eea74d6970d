//! Centralized numeric tolerances.
//!
//! Everything in this crate is plain `f64`; exact rational arithmetic is a
//! non-goal. Comparisons use a relative tolerance with an absolute floor so
//! that quantities near zero do not spuriously fail.

/// Relative tolerance for probability and partition-function comparisons.
pub const REL: f64 = 1e-10;

/// Absolute floor below which two values are always considered equal.
pub const ABS_FLOOR: f64 = 1e-14;

/// Entrywise tolerance for stochasticity, reversibility and mass checks.
pub const MASS: f64 = 1e-12;

/// Tolerance for multiset spectrum comparisons.
pub const SPECTRUM: f64 = 1e-9;

/// Residual tolerance for fixed-point solves.
pub const FIXED_POINT: f64 = 1e-12;

/// Slack added to one-sided inequality checks to absorb float noise.
pub const INEQ_SLACK: f64 = 1e-9;

/// True when `a` and `b` agree within `REL` relative tolerance (floor `ABS_FLOOR`).
pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= ABS_FLOOR.max(REL * a.abs().max(b.abs()))
}

/// True when `a` and `b` agree within relative tolerance `rel` (floor `ABS_FLOOR`).
pub fn close_rel(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= ABS_FLOOR.max(rel * a.abs().max(b.abs()))
}
