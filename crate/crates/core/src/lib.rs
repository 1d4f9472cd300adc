//! Finite-dimensional numerics for quantum reference frames under a U(1)
//! symmetry.
//!
//! The crate is organised bottom-up:
//!
//! - [`qla`]: dense complex operators, validated effects and states, norms,
//!   fidelity.
//! - [`symmetry`]: integer-spectrum U(1) representations, conjugation, the
//!   exact twirl onto the commutant of the total number operator.
//! - [`phasepovm`]: covariant phase POVMs generated by a positive operator
//!   `T`, the phase measure they induce on a reference state, and the
//!   localisation widths of that measure.
//! - [`frames`]: the restriction channel `Γ_ω` (contract a joint operator
//!   against a reference state) and the relativisation map `¥` (lift a
//!   system effect to an invariant joint effect).
//! - [`bounds`]: one checker per accuracy-versus-reference-size inequality,
//!   each returning a [`bounds::BoundReport`].
//! - [`search`]: projected subgradient minimisation of `‖Γ(E) − A‖` over
//!   invariant effects, and trade-off curves built from it.

#![forbid(unsafe_code)]

pub mod bounds;
pub mod error;
pub mod frames;
pub mod phasepovm;
pub mod qla;
pub mod random;
pub mod search;
pub mod symmetry;
pub mod tol;

pub use error::{Error, Result};
pub use qla::{Effect, Operator, State, C64};
pub use symmetry::{JointRepresentation, U1Representation};
