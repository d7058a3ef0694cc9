use std::sync::Arc;

use crate::error::{Error, Result};

use super::config::RunConfig;
use super::instance::{LevelConstraint, RobustInstance};
use super::outcome::Verdict;
use super::solve;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStatus {
    /// The bracket is at most `δ` wide.
    Converged,
    /// A feasibility solve ended undecided; the bracket is the last one reached.
    Undecided,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinarySearchOutcome {
    /// Point certified at the level `upper`, if any level was found feasible.
    pub point: Option<Vec<f64>>,
    /// Largest level certified robustly infeasible (or the initial lower end).
    pub lower: f64,
    /// Smallest level certified `ε`-feasible (or the initial upper end).
    pub upper: f64,
    pub feasibility_solves: usize,
    pub status: SearchStatus,
}

/// Number of bisection steps needed to shrink `[v_lo, v_hi]` below `delta`.
pub fn bisection_steps(v_lo: f64, v_hi: f64, delta: f64) -> usize {
    let mut width = v_hi - v_lo;
    let mut steps = 0;
    while width > delta {
        width *= 0.5;
        steps += 1;
    }
    steps
}

/// Bisection over the objective level `υ`: each probe adds `f⁰(x) ≤ υ` as a
/// constraint without uncertainty and runs the configured feasibility
/// strategy. Feasible probes lower the upper end, infeasible probes raise the
/// lower end, so `Opt ∈ [lower, upper]` and the returned point has
/// `f⁰ ≤ upper + ε` at robust violation at most `ε`.
pub fn binary_search_optimize(
    instance: &RobustInstance,
    config: &RunConfig,
    v_lo: f64,
    v_hi: f64,
    delta: f64,
) -> Result<BinarySearchOutcome> {
    let objective = instance
        .objective()
        .ok_or_else(|| Error::InvalidConfig("binary search needs an objective".into()))?
        .clone();
    if !(v_lo <= v_hi) || !(delta > 0.0) {
        return Err(Error::InvalidConfig("binary search needs v_lo ≤ v_hi and δ > 0".into()));
    }
    let dim = instance.x_setup().dim();
    let (mut lo, mut hi) = (v_lo, v_hi);
    let mut point = None;
    let mut solves = 0;
    // A fixed probe count keeps rounding in `hi − lo` from adding a probe.
    for _ in 0..bisection_steps(v_lo, v_hi, delta) {
        let level = 0.5 * (lo + hi);
        let probe = instance.with_constraint(Arc::new(LevelConstraint::new(Arc::clone(&objective), level, dim)))?;
        let outcome = solve(&probe, config)?;
        solves += 1;
        match outcome.verdict {
            Verdict::Feasible { point: p, .. } => {
                hi = level;
                point = Some(p);
            }
            Verdict::Infeasible { .. } => lo = level,
            Verdict::Undecided { .. } => {
                return Ok(BinarySearchOutcome {
                    point,
                    lower: lo,
                    upper: hi,
                    feasibility_solves: solves,
                    status: SearchStatus::Undecided,
                })
            }
        }
        log::debug!("level {level:.6e}: bracket [{lo:.6e}, {hi:.6e}]");
    }
    Ok(BinarySearchOutcome {
        point,
        lower: lo,
        upper: hi,
        feasibility_solves: solves,
        status: SearchStatus::Converged,
    })
}
