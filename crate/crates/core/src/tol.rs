//! Numerical tolerances shared across modules.

/// Structural invariants: unit norms, probability sums, Hermiticity.
pub const STRUCTURAL: f64 = 1e-10;

/// Completeness of an instrument, `sum_k M_k^dag M_k = I`.
pub const COMPLETENESS: f64 = 1e-8;

/// Probability vectors (priors, conditional ensembles) must sum to one this tightly.
pub const PROBABILITY_SUM: f64 = 1e-12;

/// Outcomes at or below this probability are dropped from instrument output.
pub const NEGLIGIBLE_PROBABILITY: f64 = 1e-14;

/// A bound counts as satisfied when its margin is at least `-BOUND_MARGIN`.
pub const BOUND_MARGIN: f64 = 1e-9;

/// Largest supported Hilbert-space dimension.
pub const MAX_DIM: usize = 64;

/// Default acceptance tolerance for closed-form values.
pub const EXACT_CHECK: f64 = 1e-12;

/// Default acceptance tolerance for Monte Carlo values, in standard errors.
pub const MC_SIGMAS: f64 = 4.0;
