//! Numerical tolerances used across the library.
//!
//! Everything here is an absolute or relative bound chosen for dense LU at
//! desk scale (hundreds of vertices). They are compile-time constants so that
//! test expectations and solver gates cannot drift apart.

/// Equality tolerance for identities that hold in exact arithmetic
/// (stochastic row sums, block decompositions, probability masses).
pub const EXACT: f64 = 1e-12;

/// Residual bound for linear solves, relative to data scale. A healthy LU on
/// a well-conditioned system lands orders of magnitude below this.
pub const SOLVE: f64 = 1e-10;

/// Gate applied to re-verified solver output before it is accepted.
/// Exceeding it means the solver itself is broken, not the input.
pub const GATE: f64 = 1e-9;

/// Relative tolerance on charge balance and solvability conditions:
/// a condition integral is accepted when |value| <= COMPAT * scale.
pub const COMPAT: f64 = 1e-9;

/// A kernel is declared singular when its 1-norm condition number exceeds
/// this, or when an LU pivot falls below [`SINGULAR_PIVOT`].
pub const SINGULAR_COND: f64 = 1e12;

/// Absolute pivot threshold for singularity. The oriented-cycle example
/// produces an exact zero pivot, so this is generous.
pub const SINGULAR_PIVOT: f64 = 1e-12;

/// Agreement required between the two independent closed forms of the
/// first plate solution.
pub const CROSS_CHECK: f64 = 1e-8;

/// Hard cap on random-walk steps per trajectory; hitting a strongly
/// connected boundary takes nowhere near this long, so exceeding it is a bug.
pub const STEP_CAP: u64 = 100_000_000;

/// Scale for relative comparisons: max(1, |data| ...), so that zero data
/// does not produce a zero tolerance.
pub fn scale_of(values: &[f64]) -> f64 {
    values.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()))
}
