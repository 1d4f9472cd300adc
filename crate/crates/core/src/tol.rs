//! Numerical tolerances shared across the crate.
//!
//! Norm-type quantities are compared at [`PASS`]; anything decided by the
//! sign of a smallest eigenvalue uses the looser [`ORDERING`].

/// Structural checks: Hermiticity, unitarity, exact closed forms.
pub const STRUCTURAL: f64 = 1e-12;

/// Equality of derived quantities computed along different routes.
pub const DERIVED_EQ: f64 = 1e-9;

/// Slack allowed on effect and state spectra before validation rejects.
pub const SPECTRUM: f64 = 1e-10;

/// Trace window for states.
pub const TRACE: f64 = 1e-10;

/// Relative commutator norm at which an operator counts as invariant.
pub const INVARIANCE: f64 = 1e-10;

/// Looser invariance threshold used as a checker precondition.
pub const INVARIANCE_PRECONDITION: f64 = 1e-8;

/// Bound checkers pass when `slack >= -PASS`.
pub const PASS: f64 = 1e-9;

/// Operator-ordering checkers pass when the smallest eigenvalue is `>= -ORDERING`.
pub const ORDERING: f64 = 1e-8;

/// Most negative admissible value of a phase density.
pub const DENSITY_FLOOR: f64 = 1e-10;

/// Number of grid points on which phase densities are validated.
pub const DENSITY_GRID: usize = 8192;

/// Unsharpness below which an effect is treated as a projection.
pub const SHARP: f64 = 1e-9;
