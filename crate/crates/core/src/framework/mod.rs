//! Robust instances and the solution strategies.

mod binary_search;
mod common;
mod config;
mod instance;
mod nominal;
mod ofo;
mod outcome;
mod pessimization;
mod sp_gap;

pub use binary_search::{binary_search_optimize, bisection_steps, BinarySearchOutcome, SearchStatus};
pub use config::{NominalMode, RunConfig, Strategy, TauPolicy, Verification};
pub use instance::{
    singleton_setup, Evaluation, FnConstraint, FnObjective, LevelConstraint, Objective, RobustConstraint,
    RobustInstance, SeparableQuadratic,
};
pub use nominal::run_nominal_oracle;
pub use ofo::{ofo_horizon, run_ofo};
pub use outcome::{Certificate, InfeasibilityEvidence, SolveOutcome, TraceRecord, Verdict};
pub use pessimization::{run_fo_pessimization, run_full_pessimization};
pub use sp_gap::{evaluate_sp_gap, robust_minimax, SP_GAP_MAX_DIM};

use crate::error::Result;

/// Runs the strategy selected in `config`.
pub fn solve(instance: &RobustInstance, config: &RunConfig) -> Result<SolveOutcome> {
    match config.strategy {
        Strategy::Ofo => run_ofo(instance, config),
        Strategy::FoPessimization => run_fo_pessimization(instance, config),
        Strategy::NominalOracle => run_nominal_oracle(instance, config, config.nominal_mode),
        Strategy::FullPessimization => run_full_pessimization(instance, config),
    }
}
