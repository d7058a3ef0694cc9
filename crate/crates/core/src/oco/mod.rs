//! Online convex optimization primitives.

mod brent;
mod nominal;
mod omd;

pub use brent::{brent_minimize, BrentResult};
pub use nominal::{
    minimize_convex, solve_nominal_minimax, theoretical_budget, ConvexPiece, NominalOptions,
    NominalSolution, NominalStatus,
};
pub use omd::{regret_bound, OmdState, RegretBound, StepMode, StepReport, WeightScheme, ANYTIME_CONSTANT};
