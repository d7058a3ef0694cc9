use crate::error::{Error, Result};
use crate::linalg::axpy;
use crate::oco::{OmdState, StepMode};

use super::config::RunConfig;
use super::instance::RobustInstance;

/// Learner over `X` for the losses `φ_t(x) = max_i f^i(x, u_t^i)`.
pub(crate) fn x_learner(instance: &RobustInstance, config: &RunConfig) -> Result<OmdState> {
    let setup = instance.x_setup();
    let g = instance
        .constraints()
        .iter()
        .map(|c| c.grad_x_bound(setup))
        .fold(0.0, f64::max);
    OmdState::new(setup.clone(), g, config.weight_scheme, config.step_mode)
}

/// One learner per constraint over its uncertainty set. Noise learners always
/// take theoretical steps: every feasibility certificate rests on their
/// regret bounds.
pub(crate) fn u_learners(instance: &RobustInstance, config: &RunConfig) -> Result<Vec<OmdState>> {
    let setup = instance.x_setup();
    instance
        .constraints()
        .iter()
        .map(|c| {
            OmdState::new(
                c.uncertainty().clone(),
                c.grad_u_bound(setup),
                config.weight_scheme,
                StepMode::Theoretical,
            )
        })
        .collect()
}

/// Whether the `x` learner's regret bound holds. Line-searched steps void it,
/// and with it every averaged infeasibility certificate.
pub(crate) fn x_regret_holds(config: &RunConfig) -> bool {
    config.step_mode == StepMode::Theoretical
}

/// Index of the largest value, lowest index on ties.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn check_values(values: &[f64], grads: &[&[f64]], iteration: usize) -> Result<()> {
    if let Some(i) = values.iter().position(|v| v.is_nan()) {
        return Err(Error::NanEvaluation {
            iteration,
            detail: format!("constraint {i} value"),
        });
    }
    if let Some(i) = grads.iter().position(|g| g.iter().any(|v| !v.is_finite())) {
        return Err(Error::NanEvaluation {
            iteration,
            detail: format!("subgradient {i}"),
        });
    }
    Ok(())
}

/// Running sum of iterates for the weighted average.
pub(crate) struct Averager {
    sum: Vec<f64>,
    count: usize,
}

impl Averager {
    pub fn new(dim: usize) -> Self {
        Averager { sum: vec![0.0; dim], count: 0 }
    }

    pub fn add(&mut self, x: &[f64]) {
        axpy(1.0, x, &mut self.sum);
        self.count += 1;
    }

    pub fn mean(&self) -> Vec<f64> {
        let c = self.count.max(1) as f64;
        self.sum.iter().map(|s| s / c).collect()
    }
}

/// `max_i sup_u f^i(point, u)` when it is at most `epsilon`.
pub(crate) fn verified_bound(instance: &RobustInstance, point: &[f64], epsilon: f64) -> Result<Option<f64>> {
    if !instance.has_pessimizers() {
        return Ok(None);
    }
    let worst = instance.max_robust_value(point, 1e-12)?;
    Ok((worst <= epsilon).then_some(worst))
}

/// Step of the `x` learner on `φ_t` with subgradient `grad`.
pub(crate) fn step_x(
    state: &mut OmdState,
    instance: &RobustInstance,
    us: &[Vec<f64>],
    grad: &[f64],
) -> Result<bool> {
    let report = match state.step_mode() {
        StepMode::Theoretical => state.step(grad)?,
        StepMode::LineSearch => {
            let constraints = instance.constraints();
            state.step_line_search(grad, |x| {
                constraints
                    .iter()
                    .zip(us)
                    .map(|(c, u)| c.value(x, u).unwrap_or(f64::NAN))
                    .fold(f64::NEG_INFINITY, |m, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) })
            })?
        }
    };
    Ok(report.bound_violated)
}

/// Ascent step of a noise learner on `f^i(x_t, ·)` with gradient `grad_u`.
pub(crate) fn step_u(state: &mut OmdState, grad_u: &[f64]) -> Result<bool> {
    let descent: Vec<f64> = grad_u.iter().map(|g| -g).collect();
    Ok(state.step(&descent)?.bound_violated)
}
