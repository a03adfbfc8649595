//! Default pass/fail thresholds.
//!
//! Every check in the crate reads its threshold from here unless the caller
//! overrides it; the CLI records the values it actually applied.

/// Identities that hold exactly in real arithmetic (telescoping sums,
/// Poisson pathwise identities, semigroup law).
pub const EXACT: f64 = 1e-12;

/// Standard errors allowed for a Monte Carlo estimate against its target.
pub const Z_SIGMA: f64 = 3.0;

/// Per-check |z| bound for the Itô-isometry matrix.
pub const ISOMETRY_Z: f64 = 4.0;

/// Relative slack for time-discretization bias in closed-form comparisons.
pub const DISCRETIZATION: f64 = 0.05;

/// Absolute slack for grid quadratures of deterministic curves.
pub const QUADRATURE: f64 = 1e-9;

/// Agreement between reductions run with different thread counts.
pub const PARALLEL_REDUCTION: f64 = 1e-9;

/// Accepted range of the fitted mesh-convergence exponent.
pub const RATE_RANGE: (f64, f64) = (0.7, 1.3);

/// Lipschitz spot-check slack.
pub const LIPSCHITZ: f64 = 1e-9;

/// Largest accepted ratio of consecutive Picard distances.
pub const CONTRACTION_RATIO: f64 = 0.9;
