use std::f64::consts::SQRT_2;

use crate::error::{ensure_dim, ensure_finite, Error, Result};
use crate::geometry::{ProximalSetup, MEMBERSHIP_TOL};
use crate::linalg::axpy;

use super::brent::brent_minimize;

/// Constant by which the anytime schedule's regret bound exceeds the
/// fixed-horizon bound `G·sqrt(2Ω/t)`.
pub const ANYTIME_CONSTANT: f64 = SQRT_2;

/// How the convex-combination weights `θ_s` are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightScheme {
    /// `θ_s = 1/t` over every prefix of length `t`. Steps follow dual
    /// averaging from the initial point with `η_t = sqrt(Ω)/(G·sqrt(t))`, so
    /// the bound holds at every `t` simultaneously.
    UniformAnytime,
    /// `θ_s = 1/T` for a horizon `T` fixed in advance, with the constant step
    /// `γθ = sqrt(2Ω/T)/G`.
    FixedHorizon(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMode {
    Theoretical,
    /// Minimize the realized loss along the prox path with Brent's method over
    /// `[0, 10·s]`, `s` the theoretical step scale; never worse than `s`.
    LineSearch,
}

/// Regret bound `ℛ(t)` of mirror descent with the given constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretBound {
    pub omega: f64,
    pub gradient_bound: f64,
    pub scheme: WeightScheme,
}

impl RegretBound {
    /// Bound on the weighted regret after `t` steps.
    ///
    /// Anytime: `ANYTIME_CONSTANT · G·sqrt(2Ω/t)`. Fixed horizon `T`: the
    /// constant step gives `θ(Ω/η + ηtG²/2) = G·sqrt(Ω/2)(T + t)/T^{3/2}`,
    /// which equals `sqrt(2ΩG²Σ_{s≤T}θ_s²) = G·sqrt(2Ω/T)` at `t = T`.
    pub fn at(&self, t: usize) -> f64 {
        let t = t.max(1) as f64;
        let g = self.gradient_bound;
        match self.scheme {
            WeightScheme::UniformAnytime => ANYTIME_CONSTANT * g * (2.0 * self.omega / t).sqrt(),
            WeightScheme::FixedHorizon(horizon) => {
                let h = horizon.max(1) as f64;
                g * (0.5 * self.omega).sqrt() * (h + t) / h.powf(1.5)
            }
        }
    }
}

pub fn regret_bound(bound: &RegretBound, t: usize) -> f64 {
    bound.at(t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    /// Multiplier applied to the subgradient in the prox map.
    pub scale: f64,
    /// The subgradient's dual norm exceeded the declared bound `G`.
    pub bound_violated: bool,
}

/// Mirror-descent learner minimizing a sequence of convex losses over a domain.
#[derive(Debug, Clone)]
pub struct OmdState {
    setup: ProximalSetup,
    start: Vec<f64>,
    current: Vec<f64>,
    gradient_bound: f64,
    scheme: WeightScheme,
    step_mode: StepMode,
    steps: usize,
    squared_weights: f64,
    gradient_sum: Vec<f64>,
    violations: usize,
}

impl OmdState {
    /// Starts at the setup's `ω`-minimizer. A zero `gradient_bound` is allowed
    /// for losses that do not depend on the decision; the state then never moves.
    pub fn new(
        setup: ProximalSetup,
        gradient_bound: f64,
        scheme: WeightScheme,
        step_mode: StepMode,
    ) -> Result<Self> {
        if !(gradient_bound.is_finite() && gradient_bound >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "gradient bound must be finite and nonnegative, got {gradient_bound}"
            )));
        }
        if let WeightScheme::FixedHorizon(0) = scheme {
            return Err(Error::InvalidConfig("fixed horizon must be positive".into()));
        }
        let start = setup.initial_point();
        let dim = start.len();
        Ok(OmdState {
            setup,
            current: start.clone(),
            start,
            gradient_bound,
            scheme,
            step_mode,
            steps: 0,
            squared_weights: 0.0,
            gradient_sum: vec![0.0; dim],
            violations: 0,
        })
    }

    pub fn point(&self) -> &[f64] {
        &self.current
    }

    pub fn setup(&self) -> &ProximalSetup {
        &self.setup
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn gradient_bound(&self) -> f64 {
        self.gradient_bound
    }

    pub fn scheme(&self) -> WeightScheme {
        self.scheme
    }

    pub fn step_mode(&self) -> StepMode {
        self.step_mode
    }

    /// `Σθ_s²` over the steps taken, in the scheme's own weights.
    pub fn accumulated_squared_weights(&self) -> f64 {
        self.squared_weights
    }

    /// Number of subgradients whose dual norm exceeded `G`.
    pub fn bound_violations(&self) -> usize {
        self.violations
    }

    pub fn regret_bound(&self) -> RegretBound {
        RegretBound {
            omega: self.setup.set_width(),
            gradient_bound: self.gradient_bound,
            scheme: self.scheme,
        }
    }

    /// Greedy step scale `γθ_t` for the step about to be taken.
    fn greedy_scale(&self) -> f64 {
        if self.gradient_bound == 0.0 {
            return 0.0;
        }
        let omega = self.setup.set_width();
        match self.scheme {
            WeightScheme::FixedHorizon(h) => (2.0 * omega / h as f64).sqrt() / self.gradient_bound,
            WeightScheme::UniformAnytime => {
                (2.0 * omega).sqrt() / (self.gradient_bound * ((self.steps + 1) as f64).sqrt())
            }
        }
    }

    fn check(&mut self, subgradient: &[f64]) -> Result<bool> {
        ensure_dim(subgradient.len(), self.current.len(), "mirror-descent subgradient")?;
        ensure_finite(subgradient, "mirror-descent subgradient")?;
        let norm = self.setup.dual_norm(subgradient);
        let violated = norm > self.gradient_bound * (1.0 + 1e-9) + 1e-300;
        if violated {
            if self.violations == 0 {
                log::warn!(
                    "subgradient dual norm {norm:.6e} exceeds declared bound {:.6e}; regret guarantee void",
                    self.gradient_bound
                );
            }
            self.violations += 1;
        }
        Ok(violated)
    }

    fn record_weight(&mut self) {
        self.steps += 1;
        self.squared_weights = match self.scheme {
            WeightScheme::UniformAnytime => 1.0 / self.steps as f64,
            WeightScheme::FixedHorizon(h) => self.squared_weights + 1.0 / (h as f64 * h as f64),
        };
    }

    /// Takes one theoretical step on the loss with the given subgradient at
    /// the current point.
    pub fn step(&mut self, subgradient: &[f64]) -> Result<StepReport> {
        let bound_violated = self.check(subgradient)?;
        if self.gradient_bound == 0.0 {
            self.record_weight();
            return Ok(StepReport { scale: 0.0, bound_violated });
        }
        let scale = match self.scheme {
            WeightScheme::UniformAnytime => {
                axpy(1.0, subgradient, &mut self.gradient_sum);
                let t = (self.steps + 1) as f64;
                let eta = self.setup.set_width().sqrt() / (self.gradient_bound * t.sqrt());
                let scaled: Vec<f64> = self.gradient_sum.iter().map(|g| eta * g).collect();
                self.current = self.setup.prox_step(&self.start, &scaled)?;
                eta
            }
            WeightScheme::FixedHorizon(_) => {
                let scale = self.greedy_scale();
                let scaled: Vec<f64> = subgradient.iter().map(|g| scale * g).collect();
                self.current = self.setup.prox_step(&self.current, &scaled)?;
                scale
            }
        };
        self.record_weight();
        Ok(StepReport { scale, bound_violated })
    }

    /// Takes one step whose length minimizes `loss` along the greedy prox path
    /// `s ↦ Prox_z(s·g)`, `s ∈ [0, 10·s_theory]`.
    pub fn step_line_search<F>(&mut self, subgradient: &[f64], mut loss: F) -> Result<StepReport>
    where
        F: FnMut(&[f64]) -> f64,
    {
        let bound_violated = self.check(subgradient)?;
        let theory = self.greedy_scale();
        if theory == 0.0 {
            self.record_weight();
            return Ok(StepReport { scale: 0.0, bound_violated });
        }
        let setup = &self.setup;
        let current = &self.current;
        let along = |s: f64| -> Vec<f64> {
            let scaled: Vec<f64> = subgradient.iter().map(|g| s * g).collect();
            setup
                .prox_step(current, &scaled)
                .expect("prox of a finite step from a member point")
        };
        let theory_point = along(theory);
        let theory_loss = loss(&theory_point);
        let found = brent_minimize(|s| loss(&along(s)), 0.0, 10.0 * theory, 1e-6 * theory.max(1e-12));
        let (scale, point) = if found.value.is_finite() && (found.value < theory_loss || !theory_loss.is_finite()) {
            (found.argmin, along(found.argmin))
        } else {
            (theory, theory_point)
        };
        debug_assert!(self.setup.contains(&point, MEMBERSHIP_TOL));
        self.current = point;
        self.record_weight();
        Ok(StepReport { scale, bound_violated })
    }
}
