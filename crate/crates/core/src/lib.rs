//! Two-dimensional mixed finite elements on the unit square.
//!
//! The library solves the vector (Hodge) Laplacian under electric, magnetic
//! and Dirichlet boundary conditions with Lagrange x Raviart-Thomas pairs,
//! the Ciarlet-Raviart mixed biharmonic problem, and the
//! vorticity-velocity-pressure formulation of the Stokes problem.  A study
//! harness measures errors against manufactured solutions and reports dyadic
//! convergence rates.

pub mod assembly;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod problems;
pub mod refelem;
pub mod space;
pub mod study;

pub use error::{Error, Result};
pub use mesh::Mesh;
pub use refelem::{Family, QuadratureRule, ReferenceElement};
pub use space::{Constraint, FeFunction, FeSpace};
