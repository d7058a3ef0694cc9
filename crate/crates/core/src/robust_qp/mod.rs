//! Robust quadratic constraints with ellipsoidal uncertainty.

mod bounds;
mod constraint;
pub mod eigen;
mod trs;

pub use bounds::{qp_bounds, QpInstanceBounds};
pub use constraint::{qp_eval, qp_grad_u, qp_grad_x, ConstraintNorms, QpPoint, QuadraticForm, RobustQpConstraint};
pub use eigen::{jacobi_eigen, max_eigenvalue, power_iteration, spectral_norm, SymmetricEigen};
pub use trs::{quadratic_value, trs_max, HARD_CASE_THRESHOLD};
