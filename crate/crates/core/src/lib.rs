//! Weighted extremal metrics on toric fibrations.
//!
//! Labelled polytopes and exact quadrature, the weights `v` and `w` coming
//! from fibration data, the weighted Futaki invariant with a crease-function
//! stability scan, symplectic potentials with the weighted scalar curvature
//! and Mabuchi energy, and solvers for the extremal equation.

pub mod cli;
pub mod config;
pub mod error;
pub mod fibration;
pub mod geometry;
pub mod linalg;
pub mod poly;
pub mod potentials;
pub mod quadrature;
pub mod scalar;
pub mod solvers;
pub mod stability;
pub mod weights;

pub use error::{Error, Result};
pub use geometry::{AffineFunc, LabelledPolytope, Region};
pub use poly::Poly;
pub use scalar::Scalar;
