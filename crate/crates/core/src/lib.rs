//! Link spectral invariants of area-preserving maps of the sphere and disc.
//!
//! The crate computes, for autonomous Hamiltonians given either as
//! axisymmetric profiles or as piecewise-linear fields on triangulated
//! spheres:
//!
//! * the measured Reeb tree of the Hamiltonian ([`reeb`]),
//! * Calabi, Hofer and Ruelle invariants by several independent routes
//!   ([`invariants`]),
//! * the link spectral invariants `μ_k`, their placement on the tree and
//!   the subleading Weyl-law sequence with extrapolation ([`spectral`]),
//! * the singular twist examples and the prescribed-sequence construction
//!   ([`twists`]).
//!
//! Rationals are exact throughout whenever the input permits; see
//! [`model::Value`].

pub mod error;
pub mod interval;
pub mod invariants;
pub mod model;
pub mod quad;
pub mod rational;
pub mod reeb;
pub mod smooth;
pub mod spectral;
pub mod twists;

pub use error::{Error, Result};
pub use model::{AxisymmetricProfile, Support, TriangleMesh, Value};
pub use rational::Q;
pub use reeb::MeasuredReebTree;
