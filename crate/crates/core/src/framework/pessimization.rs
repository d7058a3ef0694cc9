use crate::error::{Error, Result};
use crate::oco::{minimize_convex, NominalOptions, NominalStatus};

use super::common::{argmax, check_values, step_x, x_learner, x_regret_holds, Averager};
use super::config::{RunConfig, Strategy};
use super::instance::RobustInstance;
use super::ofo::{averaged_decision, require_pessimizers};
use super::outcome::{Certificate, InfeasibilityEvidence, SolveOutcome, Tracker, Verdict};

/// Pessimized noises and the constraint values and x-subgradients there.
struct Pessimized {
    us: Vec<Vec<f64>>,
    values: Vec<f64>,
    grads: Vec<Vec<f64>>,
}

fn pessimize_all(instance: &RobustInstance, x: &[f64], tol: f64, t: usize) -> Result<Pessimized> {
    let mut out = Pessimized {
        us: Vec::new(),
        values: Vec::new(),
        grads: Vec::new(),
    };
    for (i, c) in instance.constraints().iter().enumerate() {
        let (u, reported) = c.pessimize(x, tol)?;
        let (value, grad) = c.value_and_grad_x(x, &u)?;
        if reported.is_nan() || (value - reported).abs() > 1e-6 * (1.0 + reported.abs()) {
            return Err(Error::OracleViolation(format!(
                "constraint {i} at iteration {t}: pessimizer reported {reported}, evaluation gives {value}"
            )));
        }
        out.us.push(u);
        out.values.push(value);
        out.grads.push(grad);
    }
    let grads: Vec<&[f64]> = out.grads.iter().map(Vec::as_slice).collect();
    check_values(&out.values, &grads, t)?;
    Ok(out)
}

/// Mirror descent for `x` against noises returned by pessimization oracles
/// with tolerance `τε`.
///
/// Stops with the current iterate as soon as every pessimized value is at
/// most `(1 − τ)ε`. Otherwise, once `ℛ_x(t) ≤ (1 − τ)ε`, the averaged values
/// decide: feasible averaged iterate if `ϑ_t ≤ (1 − τ)ε`, infeasible otherwise.
pub fn run_fo_pessimization(instance: &RobustInstance, config: &RunConfig) -> Result<SolveOutcome> {
    config.validate()?;
    require_pessimizers(instance, Strategy::FoPessimization)?;
    let eps = config.epsilon;
    let tau = config.fixed_tau();
    let target = (1.0 - tau) * eps;
    let mut x_state = x_learner(instance, config)?;
    let x_bound = x_state.regret_bound();
    let mut tracker = Tracker::new(instance.num_constraints(), config.record_trace);
    let mut average = Averager::new(instance.x_setup().dim());

    for t in 1..=config.horizon() {
        let x = x_state.point().to_vec();
        let p = pessimize_all(instance, &x, tau * eps, t)?;
        let vartheta = tracker.add(&p.values);
        average.add(&x);
        let kappa_bullet = x_bound.at(t) / eps;
        let worst = p.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

        if worst <= target {
            tracker.record(tau, kappa_bullet, tau, false);
            let verdict = Verdict::Feasible {
                point: x,
                certified_bound: worst + tau * eps,
                iteration: t,
                certificate: Certificate::PessimizedIterate,
            };
            return Ok(tracker.finish(Strategy::FoPessimization, verdict));
        }
        let decision = if !config.checkpoint(t) {
            None
        } else if x_regret_holds(config) {
            averaged_decision(vartheta, eps, tau, kappa_bullet, tau)
        } else {
            averaged_decision(vartheta, eps, tau, 0.0, tau).filter(|&feasible| feasible)
        };
        let mut violated = false;
        if decision.is_none() && t < config.horizon() {
            violated = step_x(&mut x_state, instance, &p.us, &p.grads[argmax(&p.values)])?;
        }
        tracker.record(tau, kappa_bullet, tau, violated);
        match decision {
            Some(true) => {
                let verdict = Verdict::Feasible {
                    point: average.mean(),
                    certified_bound: vartheta + tau * eps,
                    iteration: t,
                    certificate: Certificate::AveragedIterate,
                };
                return Ok(tracker.finish(Strategy::FoPessimization, verdict));
            }
            Some(false) => {
                let verdict = Verdict::Infeasible {
                    iteration: t,
                    evidence: InfeasibilityEvidence {
                        vartheta,
                        threshold: target,
                        tau,
                        kappa_circ: tau,
                        kappa_bullet,
                        nominal_lower_bound: None,
                    },
                };
                return Ok(tracker.finish(Strategy::FoPessimization, verdict));
            }
            None => {}
        }
    }
    let iterations = config.horizon();
    Ok(tracker.finish(Strategy::FoPessimization, Verdict::Undecided { iterations }))
}

/// Cutting-plane scenario generation: solve the nominal problem over the
/// scenarios collected so far, pessimize at its solution and add every
/// scenario violated by more than `(1 − τ)ε`.
pub fn run_full_pessimization(instance: &RobustInstance, config: &RunConfig) -> Result<SolveOutcome> {
    config.validate()?;
    require_pessimizers(instance, Strategy::FullPessimization)?;
    let eps = config.epsilon;
    let tau = config.fixed_tau();
    let target = (1.0 - tau) * eps;
    let setup = instance.x_setup();
    let constraints = instance.constraints();
    let m = constraints.len();
    let mut scenarios: Vec<Vec<Vec<f64>>> = vec![Vec::new(); m];
    let mut total = 0usize;
    let mut x = setup.initial_point();
    let mut tracker = Tracker::new(m, config.record_trace);

    for t in 1..=config.max_iterations {
        if total > 0 {
            let mut options = NominalOptions::feasibility(target, config.nominal_budget);
            options.accuracy = 0.5 * target;
            options.warm_start = Some(x.clone());
            let solution = minimize_convex(
                setup,
                |z| {
                    let mut best: Option<(f64, Vec<f64>)> = None;
                    for (c, set) in constraints.iter().zip(&scenarios) {
                        if let Some((_, v, g)) = c.max_over_scenarios(z, set)? {
                            if best.as_ref().is_none_or(|(b, _)| v > *b) {
                                best = Some((v, g));
                            }
                        }
                    }
                    Ok(best.expect("at least one scenario"))
                },
                &options,
            )?;
            match solution.status {
                NominalStatus::CertifiedAbove => {
                    tracker.add(&vec![solution.lower_bound; m]);
                    tracker.record(tau, 1.0 - tau, tau, false);
                    let verdict = Verdict::Infeasible {
                        iteration: t,
                        evidence: InfeasibilityEvidence {
                            vartheta: solution.lower_bound,
                            threshold: 0.0,
                            tau,
                            kappa_circ: tau,
                            kappa_bullet: 1.0 - tau,
                            nominal_lower_bound: Some(solution.lower_bound),
                        },
                    };
                    return Ok(tracker.finish(Strategy::FullPessimization, verdict));
                }
                NominalStatus::BudgetExhausted => {
                    log::info!("extended nominal problem undecided at round {t}");
                    return Ok(tracker.finish(Strategy::FullPessimization, Verdict::Undecided { iterations: t - 1 }));
                }
                NominalStatus::ReachedTarget | NominalStatus::Converged => x = solution.point,
            }
        }
        let p = pessimize_all(instance, &x, tau * eps, t)?;
        tracker.add(&p.values);
        tracker.record(tau, 1.0 - tau, tau, false);
        let worst = p.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if worst <= target {
            let verdict = Verdict::Feasible {
                point: x,
                certified_bound: worst + tau * eps,
                iteration: t,
                certificate: Certificate::PessimizedIterate,
            };
            return Ok(tracker.finish(Strategy::FullPessimization, verdict));
        }
        for (i, u) in p.us.into_iter().enumerate() {
            if p.values[i] > target {
                scenarios[i].push(u);
                total += 1;
            }
        }
        if total > config.scenario_cap {
            log::info!("scenario cap {} reached at round {t}", config.scenario_cap);
            return Ok(tracker.finish(Strategy::FullPessimization, Verdict::Undecided { iterations: t }));
        }
    }
    let iterations = config.max_iterations;
    Ok(tracker.finish(Strategy::FullPessimization, Verdict::Undecided { iterations }))
}
