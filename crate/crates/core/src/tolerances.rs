//! Numerical tolerances shared across the library.

/// Probabilities must sum to one within this.
pub const PROB_SUM: f64 = 1e-12;
/// Density entries below this are treated as zero.
pub const DENSITY_ZERO: f64 = 1e-14;
/// Acceptance of a density as normalized, E^P[dQ/dP] = 1.
pub const DENSITY_NORM: f64 = 1e-9;
/// Per-scenario tolerance when testing S = P.
pub const MEASURE_EQ: f64 = 1e-10;

/// LP feasibility and optimality tolerance.
pub const LP: f64 = 1e-9;
pub const LP_ITERATION_CAP: usize = 1_000_000;

pub const FIXED_POINT_STEP: f64 = 1e-12;
pub const FIXED_POINT_ITERATION_CAP: usize = 100_000;
/// Agreement between the two clearing methods.
pub const CLEARING_AGREEMENT: f64 = 1e-7;
/// Fixed-point residual accepted after the CCP repair step.
pub const CCP_REPAIR: f64 = 1e-8;

pub const CONJUGATE: f64 = 1e-9;
pub const PENALTY: f64 = 1e-8;
pub const SCALARIZATION: f64 = 1e-6;
pub const SCALARIZATION_AGREEMENT: f64 = 1e-5;
pub const DUALITY_GAP: f64 = 1e-3;
pub const WEAK_DUALITY: f64 = 1e-9;
pub const SLATER_MARGIN: f64 = 1e-6;

pub const MIRROR_ITERATION_CAP: usize = 10_000;
pub const MIRROR_STALL_WINDOW: usize = 50;
pub const MIRROR_STALL_REL: f64 = 1e-10;
pub const BOUNDARY_MASS: f64 = 1e-8;

pub const MAX_DIM: usize = 64;
pub const MAX_SCENARIOS: usize = 100_000;
pub const MAX_PATHS: usize = 10_000;
