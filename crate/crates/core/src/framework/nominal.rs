use crate::error::{Error, Result};
use crate::geometry::ProximalSetup;
use crate::oco::{minimize_convex, NominalOptions, NominalSolution, NominalStatus};

use super::common::{check_values, step_u, u_learners, verified_bound, Averager};
use super::config::{NominalMode, RunConfig, Strategy};
use super::instance::{Objective, RobustInstance};
use super::outcome::{Certificate, InfeasibilityEvidence, SolveOutcome, Tracker, Verdict};

/// Result of one call of the nominal oracle at fixed noises.
enum OracleAnswer {
    Point(Vec<f64>),
    Infeasible(f64),
    Undecided,
}

/// `x ↦ max_i f^i(x, u_i)` with the subgradient of the first maximizer.
fn nominal_max(instance: &RobustInstance, us: &[Vec<f64>], x: &[f64]) -> Result<(f64, Vec<f64>)> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for (c, u) in instance.constraints().iter().zip(us) {
        let (v, g) = c.value_and_grad_x(x, u)?;
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, g));
        }
    }
    Ok(best.expect("instance has constraints"))
}

/// Minimizes `max_i f^i(x, u_i)` and returns the minimizer when its value is
/// at most `target`, or certifies the nominal minimum is positive. The solve
/// runs to accuracy `target/2` rather than stopping at the first point below
/// `target`, so each answer is a deepest nominally feasible point.
fn nominal_feasibility(
    instance: &RobustInstance,
    us: &[Vec<f64>],
    target: f64,
    budget: usize,
    warm: &[f64],
) -> Result<(OracleAnswer, NominalSolution)> {
    let mut options = NominalOptions::feasibility(target, budget);
    options.accuracy = 0.5 * target;
    options.stop_below = None;
    options.warm_start = Some(warm.to_vec());
    let sol = minimize_convex(instance.x_setup(), |x| nominal_max(instance, us, x), &options)?;
    let answer = match sol.status {
        NominalStatus::CertifiedAbove => OracleAnswer::Infeasible(sol.lower_bound),
        _ if sol.value <= target => OracleAnswer::Point(sol.point.clone()),
        _ => OracleAnswer::Undecided,
    };
    Ok((answer, sol))
}

/// Certified lower bound on `min_X f⁰`.
fn objective_lower_bound(setup: &ProximalSetup, objective: &dyn Objective, accuracy: f64, budget: usize) -> Result<f64> {
    let options = NominalOptions::new(accuracy, budget);
    let sol = minimize_convex(setup, |x| Ok((objective.value(x), objective.gradient(x))), &options)?;
    Ok(sol.lower_bound)
}

/// Nominal optimization oracle: a point with `f^i(x, u_i) ≤ a` and
/// `f⁰(x) ≤ Opt_u + ε`, where `Opt_u` minimizes `f⁰` subject to
/// `f^i(·, u_i) ≤ 0`. Bisects the level `v` of
/// `ψ_v(x) = max(f⁰(x) − v, max_i f^i(x, u_i))` until the bracket is below `ε/2`.
fn nominal_optimization(
    instance: &RobustInstance,
    objective: &dyn Objective,
    us: &[Vec<f64>],
    epsilon: f64,
    target: f64,
    budget: usize,
    warm: &[f64],
) -> Result<OracleAnswer> {
    let a = target.min(0.5 * epsilon);
    let (answer, _) = nominal_feasibility(instance, us, a, budget, warm)?;
    let mut best = match answer {
        OracleAnswer::Point(p) => p,
        other => return Ok(other),
    };
    let setup = instance.x_setup();
    let mut hi = objective.value(&best);
    let mut lo = objective_lower_bound(setup, objective, 0.25 * epsilon, budget)?;
    while hi - lo > 0.5 * epsilon {
        let level = 0.5 * (lo + hi);
        let mut options = NominalOptions::feasibility(a, budget);
        options.accuracy = 0.5 * a;
        options.warm_start = Some(best.clone());
        let sol = minimize_convex(
            setup,
            |x| {
                let (cv, cg) = nominal_max(instance, us, x)?;
                let ov = objective.value(x) - level;
                Ok(if ov > cv { (ov, objective.gradient(x)) } else { (cv, cg) })
            },
            &options,
        )?;
        match sol.status {
            NominalStatus::CertifiedAbove => lo = level,
            _ if sol.value <= a => {
                hi = level;
                best = sol.point;
            }
            _ => return Ok(OracleAnswer::Undecided),
        }
    }
    Ok(OracleAnswer::Point(best))
}

/// Mirror ascent for the noises against a nominal solver for `x`.
///
/// Each `x_t` solves the nominal problem at `u_t` to `(1 − τ)ε`; a certified
/// positive nominal minimum proves robust infeasibility at once. When
/// `max_i ℛ_i(t) ≤ τε` the averaged iterate is returned as feasible. In
/// optimization mode each `x_t` is also `ε`-optimal for the objective subject
/// to the sampled constraints, which makes the average `ε`-optimal for the
/// robust problem.
pub fn run_nominal_oracle(instance: &RobustInstance, config: &RunConfig, mode: NominalMode) -> Result<SolveOutcome> {
    config.validate()?;
    let objective = match mode {
        NominalMode::Optimization => Some(
            instance
                .objective()
                .ok_or_else(|| Error::InvalidConfig("optimization mode needs an objective".into()))?
                .clone(),
        ),
        NominalMode::Feasibility => None,
    };
    let eps = config.epsilon;
    let tau = config.fixed_tau();
    let target = (1.0 - tau) * eps;
    let constraints = instance.constraints();
    let mut u_states = u_learners(instance, config)?;
    let u_bounds: Vec<_> = u_states.iter().map(|s| s.regret_bound()).collect();
    let mut tracker = Tracker::new(constraints.len(), config.record_trace);
    let mut average = Averager::new(instance.x_setup().dim());
    let mut x_prev = instance.x_setup().initial_point();

    for t in 1..=config.horizon() {
        let us: Vec<Vec<f64>> = u_states.iter().map(|s| s.point().to_vec()).collect();
        let answer = match &objective {
            None => nominal_feasibility(instance, &us, target, config.nominal_budget, &x_prev)?.0,
            Some(obj) => nominal_optimization(instance, obj.as_ref(), &us, eps, target, config.nominal_budget, &x_prev)?,
        };
        let x = match answer {
            OracleAnswer::Point(x) => x,
            OracleAnswer::Infeasible(lower_bound) => {
                let verdict = Verdict::Infeasible {
                    iteration: t,
                    evidence: InfeasibilityEvidence {
                        vartheta: tracker.vartheta(),
                        threshold: 0.0,
                        tau,
                        kappa_circ: u_bounds.iter().map(|b| b.at(t)).fold(0.0, f64::max) / eps,
                        kappa_bullet: 1.0 - tau,
                        nominal_lower_bound: Some(lower_bound),
                    },
                };
                return Ok(tracker.finish(Strategy::NominalOracle, verdict));
            }
            OracleAnswer::Undecided => {
                log::info!("nominal solver undecided at iteration {t}");
                return Ok(tracker.finish(Strategy::NominalOracle, Verdict::Undecided { iterations: t - 1 }));
            }
        };
        let evals = constraints
            .iter()
            .zip(&us)
            .map(|(c, u)| c.evaluate(&x, u).map(|e| (e.value, e.grad_u)))
            .collect::<Result<Vec<_>>>()?;
        let values: Vec<f64> = evals.iter().map(|e| e.0).collect();
        let grads: Vec<&[f64]> = evals.iter().map(|e| &e.1[..]).collect();
        check_values(&values, &grads, t)?;
        let vartheta = tracker.add(&values);
        average.add(&x);
        let r_circ = u_bounds.iter().map(|b| b.at(t)).fold(0.0, f64::max);
        let kappa_circ = r_circ / eps;
        let done = config.checkpoint(t) && kappa_circ <= tau;
        let mut violated = false;
        if !done && t < config.horizon() {
            for (i, state) in u_states.iter_mut().enumerate() {
                violated |= step_u(state, &evals[i].1)?;
            }
        }
        tracker.record(kappa_circ, 1.0 - tau, tau, violated);
        if done {
            let verdict = Verdict::Feasible {
                point: average.mean(),
                certified_bound: vartheta + r_circ,
                iteration: t,
                certificate: Certificate::AveragedIterate,
            };
            return Ok(tracker.finish(Strategy::NominalOracle, verdict));
        }
        if config.verify_now(t) {
            if let Some(bound) = verified_bound(instance, &x, eps)? {
                let verdict = Verdict::Feasible {
                    point: x,
                    certified_bound: bound,
                    iteration: t,
                    certificate: Certificate::DirectVerification,
                };
                return Ok(tracker.finish(Strategy::NominalOracle, verdict));
            }
        }
        x_prev = x;
    }
    let iterations = config.horizon();
    Ok(tracker.finish(Strategy::NominalOracle, Verdict::Undecided { iterations }))
}
