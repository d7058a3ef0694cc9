use std::sync::Arc;

use crate::error::{ensure_dim, Error, Result};
use crate::geometry::{Domain, ProximalSetup};
use crate::linalg::norm2;

/// Value and both partial subgradients of a constraint at `(x, u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub grad_x: Vec<f64>,
    pub grad_u: Vec<f64>,
}

/// One robust constraint `sup_{u ∈ U} f(x, u) ≤ 0` with `f` convex in `x`
/// and concave in `u`.
pub trait RobustConstraint: Send + Sync {
    fn x_dim(&self) -> usize;

    /// Proximal setup of the uncertainty set `U`.
    fn uncertainty(&self) -> &ProximalSetup;

    fn value(&self, x: &[f64], u: &[f64]) -> Result<f64>;

    fn grad_x(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>>;

    fn grad_u(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>>;

    fn evaluate(&self, x: &[f64], u: &[f64]) -> Result<Evaluation> {
        Ok(Evaluation {
            value: self.value(x, u)?,
            grad_x: self.grad_x(x, u)?,
            grad_u: self.grad_u(x, u)?,
        })
    }

    fn value_and_grad_x(&self, x: &[f64], u: &[f64]) -> Result<(f64, Vec<f64>)> {
        Ok((self.value(x, u)?, self.grad_x(x, u)?))
    }

    /// `u ↦ f(x, u)` for a fixed `x`, sharing any `x`-dependent work.
    fn section<'a>(&'a self, x: &'a [f64]) -> Result<Box<dyn Fn(&[f64]) -> Result<f64> + 'a>> {
        Ok(Box::new(move |u| self.value(x, u)))
    }

    /// Largest `f(x, u)` over the given scenarios, with its index and
    /// x-subgradient (lowest index on ties). `None` for an empty list.
    fn max_over_scenarios(&self, x: &[f64], scenarios: &[Vec<f64>]) -> Result<Option<(usize, f64, Vec<f64>)>> {
        let mut best: Option<(usize, f64)> = None;
        for (j, u) in scenarios.iter().enumerate() {
            let v = self.value(x, u)?;
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((j, v));
            }
        }
        match best {
            Some((j, v)) => Ok(Some((j, v, self.grad_x(x, &scenarios[j])?))),
            None => Ok(None),
        }
    }

    /// Bound on the dual norm (in the geometry of `x_setup`) of `grad_x` over
    /// `X × U`.
    fn grad_x_bound(&self, x_setup: &ProximalSetup) -> f64;

    /// Bound on the dual norm (in the geometry of `U`) of `grad_u` over `X × U`.
    fn grad_u_bound(&self, x_setup: &ProximalSetup) -> f64;

    fn has_pessimizer(&self) -> bool {
        false
    }

    /// A noise `u*` with `f(x, u*) ≥ sup_u f(x, u) − tol`, and that value.
    fn pessimize(&self, _x: &[f64], _tol: f64) -> Result<(Vec<f64>, f64)> {
        Err(Error::InvalidConfig("constraint has no pessimization oracle".into()))
    }
}

type ValueFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync;
type PessimizeFn = dyn Fn(&[f64], f64) -> (Vec<f64>, f64) + Send + Sync;

/// A constraint assembled from closures.
pub struct FnConstraint {
    x_dim: usize,
    u_setup: ProximalSetup,
    value: Box<ValueFn>,
    grad_x: Box<GradFn>,
    grad_u: Box<GradFn>,
    grad_x_bound: f64,
    grad_u_bound: f64,
    pessimizer: Option<Box<PessimizeFn>>,
}

impl FnConstraint {
    pub fn new(
        x_dim: usize,
        u_setup: ProximalSetup,
        value: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
        grad_x: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
        grad_u: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
        grad_x_bound: f64,
        grad_u_bound: f64,
    ) -> Self {
        FnConstraint {
            x_dim,
            u_setup,
            value: Box::new(value),
            grad_x: Box::new(grad_x),
            grad_u: Box::new(grad_u),
            grad_x_bound,
            grad_u_bound,
            pessimizer: None,
        }
    }

    pub fn with_pessimizer(mut self, p: impl Fn(&[f64], f64) -> (Vec<f64>, f64) + Send + Sync + 'static) -> Self {
        self.pessimizer = Some(Box::new(p));
        self
    }

    /// A constraint `f(x) ≤ 0` without uncertainty. The noise lives in the
    /// singleton `{0} ⊂ ℝ¹`.
    pub fn certain(
        x_dim: usize,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        grad_x_bound: f64,
    ) -> Self {
        let value = Arc::new(value);
        let v2 = Arc::clone(&value);
        FnConstraint::new(
            x_dim,
            singleton_setup(),
            move |x, _| value(x),
            move |x, _| grad(x),
            |_, _| vec![0.0],
            grad_x_bound,
            0.0,
        )
        .with_pessimizer(move |x, _| (vec![0.0], v2(x)))
    }
}

/// The uncertainty setup `{0} ⊂ ℝ¹` of constraints without noise.
pub fn singleton_setup() -> ProximalSetup {
    ProximalSetup::cube(vec![0.0], vec![0.0]).expect("degenerate box is valid")
}

fn check_args(c: &dyn RobustConstraint, x: &[f64], u: &[f64]) -> Result<()> {
    ensure_dim(x.len(), c.x_dim(), "constraint x argument")?;
    ensure_dim(u.len(), c.uncertainty().dim(), "constraint u argument")
}

impl RobustConstraint for FnConstraint {
    fn x_dim(&self) -> usize {
        self.x_dim
    }

    fn uncertainty(&self) -> &ProximalSetup {
        &self.u_setup
    }

    fn value(&self, x: &[f64], u: &[f64]) -> Result<f64> {
        check_args(self, x, u)?;
        Ok((self.value)(x, u))
    }

    fn grad_x(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        check_args(self, x, u)?;
        Ok((self.grad_x)(x, u))
    }

    fn grad_u(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        check_args(self, x, u)?;
        Ok((self.grad_u)(x, u))
    }

    fn grad_x_bound(&self, _x_setup: &ProximalSetup) -> f64 {
        self.grad_x_bound
    }

    fn grad_u_bound(&self, _x_setup: &ProximalSetup) -> f64 {
        self.grad_u_bound
    }

    fn has_pessimizer(&self) -> bool {
        self.pessimizer.is_some()
    }

    fn pessimize(&self, x: &[f64], tol: f64) -> Result<(Vec<f64>, f64)> {
        ensure_dim(x.len(), self.x_dim, "pessimizer x argument")?;
        match &self.pessimizer {
            Some(p) => Ok(p(x, tol)),
            None => Err(Error::InvalidConfig("constraint has no pessimization oracle".into())),
        }
    }
}

/// Convex objective `f⁰`.
pub trait Objective: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    /// Bound on the dual norm of the gradient over the domain of `x_setup`.
    fn gradient_bound(&self, x_setup: &ProximalSetup) -> f64;
}

/// `f⁰(x) = ⟨linear, x⟩ + Σ_i quadratic_diag_i · x_i²` with nonnegative
/// quadratic coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableQuadratic {
    pub linear: Vec<f64>,
    pub quadratic_diag: Vec<f64>,
}

impl SeparableQuadratic {
    pub fn new(linear: Vec<f64>, quadratic_diag: Vec<f64>) -> Result<Self> {
        ensure_dim(quadratic_diag.len(), linear.len(), "objective quadratic diagonal")?;
        if linear.iter().chain(&quadratic_diag).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context: "objective coefficients" });
        }
        if quadratic_diag.iter().any(|&q| q < 0.0) {
            return Err(Error::Instance("objective quadratic diagonal must be nonnegative".into()));
        }
        Ok(SeparableQuadratic { linear, quadratic_diag })
    }

    pub fn linear(linear: Vec<f64>) -> Self {
        let n = linear.len();
        SeparableQuadratic { linear, quadratic_diag: vec![0.0; n] }
    }
}

impl Objective for SeparableQuadratic {
    fn value(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.linear.iter().zip(&self.quadratic_diag))
            .map(|(xi, (l, q))| l * xi + q * xi * xi)
            .sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.linear.iter().zip(&self.quadratic_diag))
            .map(|(xi, (l, q))| l + 2.0 * q * xi)
            .collect()
    }

    fn gradient_bound(&self, x_setup: &ProximalSetup) -> f64 {
        let per_coord = |lo: f64, hi: f64| -> Vec<f64> {
            self.linear
                .iter()
                .zip(&self.quadratic_diag)
                .map(|(l, q)| (l + 2.0 * q * lo).abs().max((l + 2.0 * q * hi).abs()))
                .collect()
        };
        match x_setup.domain() {
            Domain::Simplex { .. } => per_coord(0.0, 1.0).into_iter().fold(0.0, f64::max),
            Domain::Box { lower, upper } => {
                let v: Vec<f64> = (0..lower.len())
                    .map(|i| {
                        let (l, q) = (self.linear[i], self.quadratic_diag[i]);
                        (l + 2.0 * q * lower[i]).abs().max((l + 2.0 * q * upper[i]).abs())
                    })
                    .collect();
                norm2(&v)
            }
            Domain::Ball { .. } => {
                let r = x_setup.max_euclidean_norm();
                norm2(&self.linear) + 2.0 * self.quadratic_diag.iter().fold(0.0f64, |m, q| m.max(*q)) * r
            }
        }
    }
}

/// An objective assembled from closures.
pub struct FnObjective {
    value: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    gradient: Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
    bound: f64,
}

impl FnObjective {
    pub fn new(
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        bound: f64,
    ) -> Self {
        FnObjective {
            value: Box::new(value),
            gradient: Box::new(gradient),
            bound,
        }
    }
}

impl Objective for FnObjective {
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.gradient)(x)
    }

    fn gradient_bound(&self, _x_setup: &ProximalSetup) -> f64 {
        self.bound
    }
}

/// The level constraint `f⁰(x) − level ≤ 0`, with singleton uncertainty.
pub struct LevelConstraint {
    objective: Arc<dyn Objective>,
    level: f64,
    x_dim: usize,
    u_setup: ProximalSetup,
}

impl LevelConstraint {
    pub fn new(objective: Arc<dyn Objective>, level: f64, x_dim: usize) -> Self {
        LevelConstraint {
            objective,
            level,
            x_dim,
            u_setup: singleton_setup(),
        }
    }

    pub fn level(&self) -> f64 {
        self.level
    }
}

impl RobustConstraint for LevelConstraint {
    fn x_dim(&self) -> usize {
        self.x_dim
    }

    fn uncertainty(&self) -> &ProximalSetup {
        &self.u_setup
    }

    fn value(&self, x: &[f64], u: &[f64]) -> Result<f64> {
        check_args(self, x, u)?;
        Ok(self.objective.value(x) - self.level)
    }

    fn grad_x(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        check_args(self, x, u)?;
        Ok(self.objective.gradient(x))
    }

    fn grad_u(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        check_args(self, x, u)?;
        Ok(vec![0.0])
    }

    fn grad_x_bound(&self, x_setup: &ProximalSetup) -> f64 {
        self.objective.gradient_bound(x_setup)
    }

    fn grad_u_bound(&self, _x_setup: &ProximalSetup) -> f64 {
        0.0
    }

    fn has_pessimizer(&self) -> bool {
        true
    }

    fn pessimize(&self, x: &[f64], _tol: f64) -> Result<(Vec<f64>, f64)> {
        ensure_dim(x.len(), self.x_dim, "pessimizer x argument")?;
        Ok((vec![0.0], self.objective.value(x) - self.level))
    }
}

/// Domain `X`, robust constraints and an optional objective.
#[derive(Clone)]
pub struct RobustInstance {
    x_setup: ProximalSetup,
    constraints: Vec<Arc<dyn RobustConstraint>>,
    objective: Option<Arc<dyn Objective>>,
}

impl RobustInstance {
    pub fn new(x_setup: ProximalSetup, constraints: Vec<Arc<dyn RobustConstraint>>) -> Result<Self> {
        if constraints.is_empty() {
            return Err(Error::Instance("at least one constraint is required".into()));
        }
        for c in &constraints {
            ensure_dim(c.x_dim(), x_setup.dim(), "constraint x dimension")?;
        }
        Ok(RobustInstance {
            x_setup,
            constraints,
            objective: None,
        })
    }

    pub fn with_objective(mut self, objective: Arc<dyn Objective>) -> Self {
        self.objective = Some(objective);
        self
    }

    /// Copy of the instance with one more constraint appended.
    pub fn with_constraint(&self, constraint: Arc<dyn RobustConstraint>) -> Result<Self> {
        ensure_dim(constraint.x_dim(), self.x_setup.dim(), "constraint x dimension")?;
        let mut out = self.clone();
        out.constraints.push(constraint);
        Ok(out)
    }

    pub fn x_setup(&self) -> &ProximalSetup {
        &self.x_setup
    }

    pub fn constraints(&self) -> &[Arc<dyn RobustConstraint>] {
        &self.constraints
    }

    pub fn objective(&self) -> Option<&Arc<dyn Objective>> {
        self.objective.as_ref()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn has_pessimizers(&self) -> bool {
        self.constraints.iter().all(|c| c.has_pessimizer())
    }

    /// `sup_u f^i(x, u)` for every constraint via the pessimizers.
    pub fn robust_values(&self, x: &[f64], tol: f64) -> Result<Vec<f64>> {
        self.constraints.iter().map(|c| Ok(c.pessimize(x, tol)?.1)).collect()
    }

    /// `max_i sup_u f^i(x, u)`.
    pub fn max_robust_value(&self, x: &[f64], tol: f64) -> Result<f64> {
        Ok(self.robust_values(x, tol)?.into_iter().fold(f64::NEG_INFINITY, f64::max))
    }
}
