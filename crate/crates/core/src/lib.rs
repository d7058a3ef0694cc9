//! Online first-order framework for robust convex feasibility and optimization.
//!
//! A robust feasibility problem asks for `x ∈ X` with `sup_{u ∈ U^i} f^i(x, u) ≤ 0`
//! for every constraint `i`, where each `f^i` is convex in `x` and concave in `u`.
//! The solvers in [`framework`] either return a point that is robustly
//! `ε`-feasible or certify that no robustly feasible point exists, using only
//! cheap first-order updates on both the decision and the noise variables
//! ([`framework::run_ofo`]). The classical oracle-based strategies (pessimization
//! oracles, nominal feasibility oracles, cutting-plane scenario generation) are
//! provided alongside for comparison.
//!
//! Module map:
//! - [`geometry`]: proximal setups (ball, simplex, box) and their prox maps.
//! - [`oco`]: online mirror descent, regret bounds, Brent line search and a
//!   certified nominal minimax solver.
//! - [`framework`]: robust instances, run configuration, the four solution
//!   strategies, binary search over objective levels and saddle-point gap checks.
//! - [`robust_qp`]: robust quadratic constraints with ellipsoidal uncertainty,
//!   eigenvalue routines and an exact trust-region pessimizer.
//! - [`portfolio`]: factor-model portfolio instance generation.
//! - [`io`]: the JSON instance file format.

pub mod error;
pub mod framework;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod oco;
pub mod portfolio;
pub mod robust_qp;

pub use error::{Error, Result};
pub use framework::{
    binary_search_optimize, run_fo_pessimization, run_full_pessimization, run_nominal_oracle,
    run_ofo, solve, NominalMode, RobustConstraint, RobustInstance, RunConfig, SolveOutcome,
    Strategy, Verdict,
};
pub use geometry::{Domain, ProximalSetup};
