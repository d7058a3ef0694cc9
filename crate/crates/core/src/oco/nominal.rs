use crate::error::{ensure_dim, Error, Result};
use crate::geometry::{ProximalSetup, MEMBERSHIP_TOL};
use crate::linalg::{axpy, dot};

/// A convex function of `x` returning its value and a subgradient.
pub type ConvexPiece<'a> = &'a dyn Fn(&[f64]) -> (f64, Vec<f64>);

#[derive(Debug, Clone, PartialEq)]
pub struct NominalOptions {
    /// Stop once `best value − certified lower bound ≤ accuracy`.
    pub accuracy: f64,
    /// Maximum number of subgradient evaluations.
    pub budget: usize,
    /// Stop as soon as a point with value `≤ stop_below` is found.
    pub stop_below: Option<f64>,
    /// Stop as soon as the certified lower bound exceeds `stop_above`.
    pub stop_above: Option<f64>,
    /// Starting point (projected onto the domain); defaults to the setup's
    /// initial point.
    pub warm_start: Option<Vec<f64>>,
}

impl NominalOptions {
    pub fn new(accuracy: f64, budget: usize) -> Self {
        NominalOptions {
            accuracy,
            budget,
            stop_below: None,
            stop_above: None,
            warm_start: None,
        }
    }

    /// Feasibility mode: decide between `min ≤ target` and `min > 0`.
    pub fn feasibility(target: f64, budget: usize) -> Self {
        NominalOptions {
            accuracy: target,
            budget,
            stop_below: Some(target),
            stop_above: Some(0.0),
            warm_start: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NominalStatus {
    /// `value − lower_bound ≤ accuracy`.
    Converged,
    /// A point with value at most `stop_below` was found.
    ReachedTarget,
    /// The lower bound exceeds `stop_above`: the minimum is certified above it.
    CertifiedAbove,
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NominalSolution {
    /// Best point found.
    pub point: Vec<f64>,
    /// Objective value at `point`.
    pub value: f64,
    /// Certified lower bound on the minimum over the domain.
    pub lower_bound: f64,
    pub iterations: usize,
    pub status: NominalStatus,
}

impl NominalSolution {
    /// The minimum is certified to be positive.
    pub fn certified_positive(&self) -> bool {
        self.lower_bound > 0.0
    }
}

/// Evaluations needed by the dual-averaging scheme to reach `accuracy` on a
/// `G`-Lipschitz function over a domain of width `Ω`.
pub fn theoretical_budget(omega: f64, gradient_bound: f64, accuracy: f64) -> usize {
    let t = 16.0 * omega.max(f64::MIN_POSITIVE) * gradient_bound * gradient_bound / (accuracy * accuracy);
    (t.ceil() as usize).saturating_add(1)
}

/// Minimizes `max_i piece_i(x)` over the setup's domain.
pub fn solve_nominal_minimax(
    setup: &ProximalSetup,
    pieces: &[ConvexPiece<'_>],
    options: &NominalOptions,
) -> Result<NominalSolution> {
    if pieces.is_empty() {
        return Err(Error::InvalidConfig("nominal problem needs at least one function".into()));
    }
    minimize_convex(
        setup,
        |x| {
            let mut best: Option<(f64, Vec<f64>)> = None;
            for piece in pieces {
                let (v, g) = piece(x);
                if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
                    best = Some((v, g));
                }
            }
            Ok(best.expect("nonempty"))
        },
        options,
    )
}

/// Dual averaging with adaptive steps on a convex function given by a
/// value/subgradient oracle. Averaging the linearizations gives a certified
/// lower bound on the minimum; the best visited point (iterates and their
/// running average) gives the upper bound.
pub fn minimize_convex<F>(setup: &ProximalSetup, mut oracle: F, options: &NominalOptions) -> Result<NominalSolution>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    if !(options.accuracy > 0.0) || options.budget == 0 {
        return Err(Error::InvalidConfig(
            "nominal solver needs positive accuracy and budget".into(),
        ));
    }
    let n = setup.dim();
    let start = match &options.warm_start {
        Some(w) => {
            ensure_dim(w.len(), n, "warm start")?;
            let p = setup.project(w)?;
            if setup.contains(&p, MEMBERSHIP_TOL) { p } else { setup.initial_point() }
        }
        None => setup.initial_point(),
    };
    let omega = setup.set_width().max(1e-12);

    let mut z = start.clone();
    let mut gradient_sum = vec![0.0; n];
    let mut point_sum = vec![0.0; n];
    let mut intercept_sum = 0.0;
    let mut squared_norms = 0.0;
    let mut best_point = start.clone();
    let mut best_value = f64::INFINITY;
    let mut lower_bound = f64::NEG_INFINITY;

    let mut evaluate = |x: &[f64], iteration: usize| -> Result<(f64, Vec<f64>)> {
        let (v, g) = oracle(x)?;
        if v.is_nan() || g.iter().any(|gi| !gi.is_finite()) {
            return Err(Error::NanEvaluation {
                iteration,
                detail: "nominal objective or subgradient".into(),
            });
        }
        ensure_dim(g.len(), n, "nominal subgradient")?;
        Ok((v, g))
    };

    for k in 1..=options.budget {
        let (value, grad) = evaluate(&z, k)?;
        if value < best_value {
            best_value = value;
            best_point.clone_from(&z);
        }
        let finish = |status, best_point: &Vec<f64>, best_value, lower_bound| {
            Ok(NominalSolution {
                point: best_point.clone(),
                value: best_value,
                lower_bound,
                iterations: k,
                status,
            })
        };
        if options.stop_below.is_some_and(|t| best_value <= t) {
            return finish(NominalStatus::ReachedTarget, &best_point, best_value, lower_bound);
        }

        axpy(1.0, &grad, &mut gradient_sum);
        axpy(1.0, &z, &mut point_sum);
        intercept_sum += value - dot(&grad, &z);
        let (linear_min, _) = setup.linear_minimum(&gradient_sum);
        lower_bound = lower_bound.max((intercept_sum + linear_min) / k as f64);

        if options.stop_above.is_some_and(|t| lower_bound > t) {
            return finish(NominalStatus::CertifiedAbove, &best_point, best_value, lower_bound);
        }
        if best_value - lower_bound <= options.accuracy {
            return finish(NominalStatus::Converged, &best_point, best_value, lower_bound);
        }

        if k % 4 == 0 {
            let average: Vec<f64> = point_sum.iter().map(|s| s / k as f64).collect();
            let average = setup.project(&average)?;
            let (v, _) = evaluate(&average, k)?;
            if v < best_value {
                best_value = v;
                best_point = average;
                if options.stop_below.is_some_and(|t| best_value <= t) {
                    return finish(NominalStatus::ReachedTarget, &best_point, best_value, lower_bound);
                }
                if best_value - lower_bound <= options.accuracy {
                    return finish(NominalStatus::Converged, &best_point, best_value, lower_bound);
                }
            }
        }

        squared_norms += setup.dual_norm(&grad).powi(2);
        if squared_norms == 0.0 {
            // zero subgradient: z is a minimizer and the bound above has closed the gap
            continue;
        }
        let eta = (2.0 * omega).sqrt() / squared_norms.sqrt();
        let scaled: Vec<f64> = gradient_sum.iter().map(|g| eta * g).collect();
        z = setup.prox_step(&start, &scaled)?;
    }
    Ok(NominalSolution {
        point: best_point,
        value: best_value,
        lower_bound,
        iterations: options.budget,
        status: NominalStatus::BudgetExhausted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm2;

    #[test]
    fn squared_norm_on_ball() {
        let ball = ProximalSetup::unit_ball(3).unwrap();
        let f = |x: &[f64]| (dot(x, x), x.iter().map(|v| 2.0 * v).collect::<Vec<_>>());
        let pieces: [ConvexPiece; 1] = [&f];
        let sol = solve_nominal_minimax(&ball, &pieces, &NominalOptions::new(1e-3, 10_000)).unwrap();
        assert!(sol.value <= 1e-3);
        assert!(norm2(&sol.point) < 0.05);
        assert_eq!(sol.status, NominalStatus::Converged);
    }

    #[test]
    fn boundary_minimum_is_feasible() {
        let interval = ProximalSetup::unit_ball(1).unwrap();
        let f = |x: &[f64]| (x[0] + 1.0, vec![1.0]);
        let pieces: [ConvexPiece; 1] = [&f];
        let sol = solve_nominal_minimax(&interval, &pieces, &NominalOptions::feasibility(1e-3, 10_000)).unwrap();
        assert!(sol.value <= 1e-3);
        assert!(!sol.certified_positive());
    }

    #[test]
    fn symmetric_pair_has_value_zero() {
        let interval = ProximalSetup::unit_ball(1).unwrap();
        let f1 = |x: &[f64]| (x[0], vec![1.0]);
        let f2 = |x: &[f64]| (-x[0], vec![-1.0]);
        let pieces: [ConvexPiece; 2] = [&f1, &f2];
        let sol = solve_nominal_minimax(&interval, &pieces, &NominalOptions::new(1e-4, 100_000)).unwrap();
        assert!(sol.value.abs() <= 1e-4);
        assert!(sol.lower_bound <= 1e-12);
        // brute-force grid oracle of the minimax value
        let grid_min = (0..=2000)
            .map(|i| -1.0 + i as f64 / 1000.0)
            .map(|x: f64| x.abs())
            .fold(f64::INFINITY, f64::min);
        assert!((sol.value - grid_min).abs() <= 1e-4);
    }

    #[test]
    fn positive_minimum_is_certified() {
        let interval = ProximalSetup::unit_ball(1).unwrap();
        let f = |x: &[f64]| (x[0] + 1.5, vec![1.0]);
        let pieces: [ConvexPiece; 1] = [&f];
        let sol = solve_nominal_minimax(&interval, &pieces, &NominalOptions::feasibility(1e-3, 10_000)).unwrap();
        assert_eq!(sol.status, NominalStatus::CertifiedAbove);
        assert!(sol.lower_bound > 0.0);
        assert!(sol.lower_bound <= 0.5 + 1e-12);
    }

    #[test]
    fn simplex_linear_minimum() {
        let simplex = ProximalSetup::simplex(4).unwrap();
        let c = [0.3, -0.2, 0.5, 0.1];
        let f = |x: &[f64]| (dot(&c, x), c.to_vec());
        let pieces: [ConvexPiece; 1] = [&f];
        let sol = solve_nominal_minimax(&simplex, &pieces, &NominalOptions::new(1e-6, 1000)).unwrap();
        assert!((sol.lower_bound + 0.2).abs() < 1e-12);
        assert!(sol.value - sol.lower_bound <= 1e-6);
    }
}
