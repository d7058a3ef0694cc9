use crate::error::{Error, Result};
use crate::oco::RegretBound;

use super::common::{
    argmax, check_values, step_u, step_x, u_learners, verified_bound, x_learner, x_regret_holds, Averager,
};
use super::config::{RunConfig, Strategy, TauPolicy};
use super::instance::RobustInstance;
use super::outcome::{Certificate, InfeasibilityEvidence, SolveOutcome, Tracker, Verdict};

/// Horizon `T` with `max_i ℛ_i(T) + ℛ_x(T) ≤ ε` for fixed-horizon weights.
pub fn ofo_horizon(instance: &RobustInstance, epsilon: f64) -> usize {
    let setup = instance.x_setup();
    let gx = instance
        .constraints()
        .iter()
        .map(|c| c.grad_x_bound(setup))
        .fold(0.0, f64::max);
    let ax = gx * (2.0 * setup.set_width()).sqrt();
    let au = instance
        .constraints()
        .iter()
        .map(|c| c.grad_u_bound(setup) * (2.0 * c.uncertainty().set_width()).sqrt())
        .fold(0.0, f64::max);
    let t = ((ax + au) / epsilon).powi(2).ceil();
    (t as usize).max(1)
}

/// Decision rule shared by the averaged certificates: returns `Some(true)` for
/// feasible, `Some(false)` for infeasible, `None` when neither clause applies.
pub(crate) fn averaged_decision(vartheta: f64, epsilon: f64, kappa_circ: f64, kappa_bullet: f64, tau: f64) -> Option<bool> {
    if kappa_circ > tau || kappa_bullet > 1.0 - tau {
        return None;
    }
    Some(vartheta <= (1.0 - tau) * epsilon)
}

/// Online first-order solver: mirror descent for `x` on
/// `φ_t(x) = max_i f^i(x, u_t^i)` and mirror ascent for every noise `u^i` on
/// `f^i(x_t, ·)`, both driven only by `(x_t, u_t)`.
///
/// At iteration `t` with `κ° = max_i ℛ_i(t)/ε` and `κ• = ℛ_x(t)/ε`, once
/// `κ° + κ• ≤ 1` the run stops: infeasible if `ϑ_t > (1 − τ_t)ε`, otherwise
/// feasible with the averaged iterate `x̄_t`, whose robust violation is at most
/// `ϑ_t + max_i ℛ_i(t) ≤ ε`.
///
/// With line-searched `x` steps `ℛ_x` is not a valid bound, so only the
/// feasibility clause is used, with `τ_t = κ°` under the default policy.
pub fn run_ofo(instance: &RobustInstance, config: &RunConfig) -> Result<SolveOutcome> {
    config.validate()?;
    let eps = config.epsilon;
    let constraints = instance.constraints();
    let m = constraints.len();
    let mut x_state = x_learner(instance, config)?;
    let mut u_states = u_learners(instance, config)?;
    let x_bound: RegretBound = x_state.regret_bound();
    let u_bounds: Vec<RegretBound> = u_states.iter().map(|s| s.regret_bound()).collect();
    let mut tracker = Tracker::new(m, config.record_trace);
    let mut average = Averager::new(instance.x_setup().dim());

    for t in 1..=config.horizon() {
        let x = x_state.point().to_vec();
        let us: Vec<Vec<f64>> = u_states.iter().map(|s| s.point().to_vec()).collect();
        let evals = constraints
            .iter()
            .zip(&us)
            .map(|(c, u)| c.evaluate(&x, u))
            .collect::<Result<Vec<_>>>()?;
        let values: Vec<f64> = evals.iter().map(|e| e.value).collect();
        let grads: Vec<&[f64]> = evals.iter().flat_map(|e| [&e.grad_x[..], &e.grad_u[..]]).collect();
        check_values(&values, &grads, t)?;

        let vartheta = tracker.add(&values);
        average.add(&x);
        let r_circ = u_bounds.iter().map(|b| b.at(t)).fold(0.0, f64::max);
        let kappa_circ = r_circ / eps;
        let kappa_bullet = x_bound.at(t) / eps;
        let guaranteed = x_regret_holds(config);
        let tau = match config.tau() {
            TauPolicy::OneMinusKappaBullet if guaranteed => 1.0 - kappa_bullet,
            // without an x regret bound only the noise regret enters
            TauPolicy::OneMinusKappaBullet => kappa_circ,
            TauPolicy::Fixed(tau) => tau,
        };

        // updates use only (x_t, u_t); computed before any early return so the
        // bound violations of this iteration are recorded
        let mut violated = false;
        let star = argmax(&values);
        let decision = if !config.checkpoint(t) {
            None
        } else if guaranteed {
            if kappa_circ + kappa_bullet <= 1.0 {
                averaged_decision(vartheta, eps, kappa_circ, kappa_bullet, tau)
            } else {
                None
            }
        } else {
            averaged_decision(vartheta, eps, kappa_circ, 0.0, tau).filter(|&feasible| feasible)
        };
        let last = t == config.horizon();
        if decision.is_none() && !last {
            violated |= step_x(&mut x_state, instance, &us, &evals[star].grad_x)?;
            for (i, state) in u_states.iter_mut().enumerate() {
                violated |= step_u(state, &evals[i].grad_u)?;
            }
        }
        tracker.record(kappa_circ, kappa_bullet, tau, violated);

        match decision {
            Some(true) => {
                let verdict = Verdict::Feasible {
                    point: average.mean(),
                    certified_bound: vartheta + r_circ,
                    iteration: t,
                    certificate: Certificate::AveragedIterate,
                };
                return Ok(tracker.finish(Strategy::Ofo, verdict));
            }
            Some(false) => {
                let verdict = Verdict::Infeasible {
                    iteration: t,
                    evidence: InfeasibilityEvidence {
                        vartheta,
                        threshold: (1.0 - tau) * eps,
                        tau,
                        kappa_circ,
                        kappa_bullet,
                        nominal_lower_bound: None,
                    },
                };
                return Ok(tracker.finish(Strategy::Ofo, verdict));
            }
            None => {}
        }
        if config.verify_now(t) {
            let candidate = average.mean();
            if let Some(bound) = verified_bound(instance, &candidate, eps)? {
                let verdict = Verdict::Feasible {
                    point: candidate,
                    certified_bound: bound,
                    iteration: t,
                    certificate: Certificate::DirectVerification,
                };
                return Ok(tracker.finish(Strategy::Ofo, verdict));
            }
        }
    }
    let iterations = config.horizon();
    Ok(tracker.finish(Strategy::Ofo, Verdict::Undecided { iterations }))
}

pub(crate) fn require_pessimizers(instance: &RobustInstance, strategy: Strategy) -> Result<()> {
    if instance.has_pessimizers() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "strategy {strategy} needs a pessimization oracle for every constraint"
        )))
    }
}
