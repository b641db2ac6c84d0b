//! Finite-element simulation of Biot poroelasticity on the unit square with a
//! permeability that depends on the dilatation `div u`.
//!
//! Two time discretizations are provided:
//!
//! - a semi-explicit Euler scheme, which lags the pressure in the elasticity
//!   equation so that every step reduces to two sequential SPD solves and the
//!   permeability is evaluated at an already known displacement;
//! - the implicit Euler scheme, whose nonlinear step is resolved by a Picard
//!   (frozen-coefficient) fixed-point iteration on the coupled block system.
//!
//! A third path integrates the equivalent delay system with implicit Euler and
//! serves as an independent check on the semi-explicit trajectory.
//!
//! Spatial discretization is equal-order P1/P1 on a structured triangulation
//! with homogeneous Dirichlet conditions for both fields.

pub mod analysis;
pub mod assembly;
pub mod error;
pub mod forcing;
pub mod linsolve;
pub mod mesh;
pub mod permeability;
pub mod sparse;
pub mod stepper;

pub use assembly::Coefficients;
pub use error::{Error, Result};
pub use mesh::Mesh;
pub use permeability::PermeabilityModel;
pub use sparse::SparseOperator;
