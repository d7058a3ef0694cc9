//! Robust mean-variance portfolio instances from a factor model.
//!
//! Returns follow `r = μ + Vᵀf + ε` with factor covariance `F` and diagonal
//! residual covariance `D`. The generator draws a ground-truth model, samples
//! `p` return observations, and estimates `μ₀`, `V₀` by least squares. The
//! estimation error defines a box around `μ₀` of half-widths `γ` and an
//! ellipsoid around `V₀` spanned by `K = min{2m, 15}` perturbation matrices.
//!
//! The robust problem is
//! `min_{x ∈ Δ_n} max_{V} ‖Vx‖² + xᵀDx − λ min_{μ} μᵀx`.
//! Over the simplex the inner minimum is `(μ₀ − γ)ᵀx`, so only the factor
//! loadings stay uncertain.

mod fdist;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::framework::{solve, RobustConstraint, RobustInstance, RunConfig, Verdict};
use crate::geometry::ProximalSetup;
use crate::linalg::{cholesky, cholesky_solve, dot, norm2, Matrix};
use crate::oco::{minimize_convex, NominalOptions};
use crate::robust_qp::{jacobi_eigen, RobustQpConstraint};

pub use fdist::{f_cdf, f_critical_value};

/// Default number of return observations.
pub const DEFAULT_SAMPLES: usize = 90;
/// Default confidence level.
pub const DEFAULT_ALPHA: f64 = 0.95;
/// Cap on the number of perturbation matrices.
pub const MAX_PERTURBATIONS: usize = 15;
/// Substreams tried before giving up on a singular regression.
const MAX_SUBSTREAMS: u64 = 64;

/// Number of perturbation matrices for `m` factors.
pub fn perturbation_count(m: usize) -> usize {
    (2 * m).min(MAX_PERTURBATIONS)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioParams {
    /// Assets.
    pub n: usize,
    /// Factors.
    pub m: usize,
    /// Return observations.
    pub p: usize,
    /// Confidence level of the uncertainty sets.
    pub alpha: f64,
    /// Risk/return trade-off.
    pub lambda: f64,
    pub seed: u64,
    /// Second degrees of freedom of the F critical values; `p − m` when unset.
    pub second_df: Option<usize>,
}

impl PortfolioParams {
    pub fn new(n: usize, m: usize, lambda: f64, seed: u64) -> Self {
        PortfolioParams {
            n,
            m,
            p: DEFAULT_SAMPLES,
            alpha: DEFAULT_ALPHA,
            lambda,
            seed,
            second_df: None,
        }
    }

    pub fn with_samples(mut self, p: usize) -> Self {
        self.p = p;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn k(&self) -> usize {
        perturbation_count(self.m)
    }

    fn second_df(&self) -> usize {
        self.second_df.unwrap_or(self.p - self.m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::InvalidConfig("portfolio needs n ≥ 1 assets and m ≥ 1 factors".into()));
        }
        // The residual variance divides by p − m − 1.
        if self.p < self.m + 2 {
            return Err(Error::InvalidConfig(format!(
                "portfolio needs p ≥ m + 2 samples, got p = {}, m = {}",
                self.p, self.m
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha must lie in (0,1), got {}", self.alpha)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!("lambda must be finite and ≥ 0, got {}", self.lambda)));
        }
        if self.second_df == Some(0) {
            return Err(Error::InvalidConfig("second degrees of freedom must be positive".into()));
        }
        Ok(())
    }
}

/// Generated instance: estimated model plus uncertainty sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioInstance {
    pub params: PortfolioParams,
    pub mu0: Vec<f64>,
    /// Half-widths of the box around `mu0`.
    pub gamma: Vec<f64>,
    /// `m × n` estimated loadings.
    pub v0: Matrix,
    /// `K` perturbation matrices, each `m × n`.
    pub p: Vec<Matrix>,
    /// Diagonal of `D`.
    pub d: Vec<f64>,
    pub lambda: f64,
    /// Residual variances `s_i²`.
    pub s2: Vec<f64>,
    /// Top-left entry of the inverse regression Gram matrix.
    pub nu: f64,
    /// `c_1(α)`.
    pub c1: f64,
    /// `c_m(α)`.
    pub cm: f64,
    /// Substream of the seed that produced the instance.
    pub stream: u64,
}

/// Ground-truth model drawn by the generator.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    /// `m × n` loadings.
    pub v: Matrix,
    /// `m × m` factor covariance.
    pub f: Matrix,
    pub mu: Vec<f64>,
}

pub fn generate_instance(params: &PortfolioParams) -> Result<PortfolioInstance> {
    generate_with_model(params).map(|(pi, _)| pi)
}

/// Like [`generate_instance`], also returning the drawn ground truth.
pub fn generate_with_model(params: &PortfolioParams) -> Result<(PortfolioInstance, FactorModel)> {
    params.validate()?;
    for stream in 0..MAX_SUBSTREAMS {
        let mut rng = ChaCha20Rng::seed_from_u64(params.seed);
        rng.set_stream(stream);
        match draw(params, &mut rng, stream)? {
            Some(out) => return Ok(out),
            None => log::warn!("singular regression on stream {stream} of seed {}; redrawing", params.seed),
        }
    }
    Err(Error::Instance(format!(
        "regression stayed singular on {MAX_SUBSTREAMS} substreams of seed {}",
        params.seed
    )))
}

fn normal(rng: &mut ChaCha20Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn normal_matrix(rng: &mut ChaCha20Rng, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| normal(rng)).collect();
    Matrix::from_row_major(rows, cols, data).expect("sized")
}

fn draw(params: &PortfolioParams, rng: &mut ChaCha20Rng, stream: u64) -> Result<Option<(PortfolioInstance, FactorModel)>> {
    let (n, m, p) = (params.n, params.m, params.p);

    let v = normal_matrix(rng, m, n);
    let g = normal_matrix(rng, m, m);
    let g_scaled = g.scale(1.0 / (m as f64).sqrt());
    let f = g_scaled.matmul(&g_scaled.transpose());
    let fv = f.matmul(&v);
    let d: Vec<f64> = (0..n)
        .map(|i| 0.1 * (0..m).map(|r| v[(r, i)] * fv[(r, i)]).sum::<f64>())
        .collect();
    let mu: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..5.0)).collect();

    // Factor samples f_(l) = G z / √m have covariance GGᵀ/m = F.
    let mut factors = Vec::with_capacity(p);
    let mut returns = Vec::with_capacity(p);
    for _ in 0..p {
        let z: Vec<f64> = (0..m).map(|_| normal(rng)).collect();
        let fl = g_scaled.mul_vec(&z);
        let vt_f = v.tr_mul_vec(&fl);
        let r: Vec<f64> = (0..n).map(|i| mu[i] + vt_f[i] + d[i].sqrt() * normal(rng)).collect();
        factors.push(fl);
        returns.push(r);
    }

    // Least squares on the design rows (1, f_(l)ᵀ).
    let q = m + 1;
    let design = |l: usize, j: usize| if j == 0 { 1.0 } else { factors[l][j - 1] };
    let mut gram = Matrix::zeros(q, q);
    for l in 0..p {
        for a in 0..q {
            for b in 0..q {
                gram[(a, b)] += design(l, a) * design(l, b);
            }
        }
    }
    let chol = match cholesky(&gram) {
        Some(c) => c,
        None => return Ok(None),
    };
    let mut e0 = vec![0.0; q];
    e0[0] = 1.0;
    let nu = cholesky_solve(&chol, &e0)[0];

    let mut mu0 = vec![0.0; n];
    let mut v_bar = Matrix::zeros(m, n);
    let mut s2 = vec![0.0; n];
    let dof = (p - m - 1) as f64;
    for i in 0..n {
        let rhs: Vec<f64> = (0..q).map(|a| (0..p).map(|l| design(l, a) * returns[l][i]).sum()).collect();
        let coef = cholesky_solve(&chol, &rhs);
        mu0[i] = coef[0];
        for r in 0..m {
            v_bar[(r, i)] = coef[r + 1];
        }
        s2[i] = (0..p)
            .map(|l| {
                let fit = coef[0] + dot(&coef[1..], &factors[l]);
                (returns[l][i] - fit).powi(2)
            })
            .sum::<f64>()
            / dof;
    }

    let v0 = sqrt_psd(&f)?.matmul(&v_bar);

    let df2 = params.second_df();
    let c1 = f_critical_value(1, df2, params.alpha)?;
    let cm = f_critical_value(m, df2, params.alpha)?;
    let gamma: Vec<f64> = s2.iter().map(|s| (nu * c1 * s).sqrt()).collect();

    let k = params.k();
    let mut perturbations: Vec<Matrix> = (0..k).map(|_| normal_matrix(rng, m, n)).collect();
    for i in 0..n {
        let target = (m as f64 * cm * s2[i]).sqrt();
        let current = column_deviation_bound(&perturbations, i)?;
        let factor = if current > 0.0 { target / current } else { 0.0 };
        for pk in &mut perturbations {
            for r in 0..m {
                pk[(r, i)] *= factor;
            }
        }
    }

    let instance = PortfolioInstance {
        params: params.clone(),
        mu0,
        gamma,
        v0,
        p: perturbations,
        d,
        lambda: params.lambda,
        s2,
        nu,
        c1,
        cm,
        stream,
    };
    Ok(Some((instance, FactorModel { v, f, mu })))
}

/// Symmetric PSD square root via eigendecomposition; tiny negative
/// eigenvalues are clipped to zero.
fn sqrt_psd(a: &Matrix) -> Result<Matrix> {
    let eig = jacobi_eigen(a)?;
    let n = a.rows();
    let mut out = Matrix::zeros(n, n);
    for (j, &lam) in eig.values.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        for r in 0..n {
            for c in 0..n {
                out[(r, c)] += s * eig.vectors[(r, j)] * eig.vectors[(c, j)];
            }
        }
    }
    Ok(out)
}

/// `max_{‖u‖ ≤ 1} ‖Σ_k u_k P_k e_i‖`, the spectral norm of `[P_1e_i … P_Ke_i]`.
pub fn column_deviation_bound(p: &[Matrix], i: usize) -> Result<f64> {
    let k = p.len();
    let cols: Vec<Vec<f64>> = p.iter().map(|pk| pk.column(i)).collect();
    let mut gram = Matrix::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            gram[(a, b)] = dot(&cols[a], &cols[b]);
        }
    }
    let top = jacobi_eigen(&gram)?.values[0];
    Ok(top.max(0.0).sqrt())
}

impl PortfolioInstance {
    pub fn n(&self) -> usize {
        self.mu0.len()
    }

    pub fn m(&self) -> usize {
        self.v0.rows()
    }

    pub fn k(&self) -> usize {
        self.p.len()
    }

    /// Allowed column deviation `sqrt(m c_m(α) s_i²)` of asset `i`.
    pub fn column_radius(&self, i: usize) -> f64 {
        (self.m() as f64 * self.cm * self.s2[i]).sqrt()
    }

    /// `λ(μ₀ − γ)`, the worst-case return weights scaled by `λ`.
    pub fn worst_return_weights(&self) -> Vec<f64> {
        self.mu0.iter().zip(&self.gamma).map(|(m, g)| self.lambda * (m - g)).collect()
    }

    /// The robust constraint `max_V ‖Vx‖² + xᵀDx − λ(μ₀−γ)ᵀx ≤ level`,
    /// with `A = [V₀; diag(√D)]` and the `P_k` padded with zero rows.
    pub fn objective_constraint(&self, level: f64) -> Result<RobustQpConstraint> {
        let (n, m) = (self.n(), self.m());
        let mut a = Matrix::zeros(m + n, n);
        for r in 0..m {
            for c in 0..n {
                a[(r, c)] = self.v0[(r, c)];
            }
        }
        for i in 0..n {
            a[(m + i, i)] = self.d[i].sqrt();
        }
        let p = self
            .p
            .iter()
            .map(|pk| {
                let mut padded = Matrix::zeros(m + n, n);
                for r in 0..m {
                    for c in 0..n {
                        padded[(r, c)] = pk[(r, c)];
                    }
                }
                padded
            })
            .collect();
        RobustQpConstraint::new(a, self.worst_return_weights(), level, p)
    }

    /// Robust objective `max_V ‖Vx‖² + xᵀDx − λ(μ₀−γ)ᵀx`, evaluated exactly.
    pub fn robust_objective(&self, x: &[f64]) -> Result<f64> {
        let constraint = self.objective_constraint(0.0)?;
        Ok(constraint.pessimize(x, 1e-12)?.1)
    }

    /// Lower bound on the robust objective over the simplex.
    pub fn objective_floor(&self) -> f64 {
        -self.worst_return_weights().into_iter().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Feasibility instance "robust objective ≤ level" over the simplex.
pub fn build_robust_instance(pi: &PortfolioInstance, level: f64) -> Result<RobustInstance> {
    let constraint: Arc<dyn RobustConstraint> = Arc::new(pi.objective_constraint(level)?);
    RobustInstance::new(ProximalSetup::simplex(pi.n())?, vec![constraint])
}

/// Approximate robust optimum: a simplex point, its robust objective value
/// and a certified lower bound on the optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustOptimum {
    pub point: Vec<f64>,
    pub value: f64,
    pub lower_bound: f64,
}

/// Minimizes the robust objective with the exact pessimizer and a subgradient
/// method; `budget` caps the objective evaluations.
pub fn robust_optimum(pi: &PortfolioInstance, accuracy: f64, budget: usize) -> Result<RobustOptimum> {
    let constraint = pi.objective_constraint(0.0)?;
    let setup = ProximalSetup::simplex(pi.n())?;
    let sol = minimize_convex(
        &setup,
        |x| {
            let (u, v) = constraint.pessimize(x, 1e-12)?;
            Ok((v, constraint.grad_x(x, &u)?))
        },
        &NominalOptions::new(accuracy, budget),
    )?;
    Ok(RobustOptimum {
        point: sol.point,
        value: sol.value,
        lower_bound: sol.lower_bound,
    })
}

/// Level `v̂ + fraction·(Φ(uniform) − v̂)` where `v̂` is the value of an
/// approximate robust optimum. Any `fraction > 0` leaves a feasible level
/// with slack, and the uniform starting portfolio stays infeasible for
/// `fraction < 1`.
pub fn default_level(pi: &PortfolioInstance, fraction: f64) -> Result<f64> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!("level fraction must lie in (0,1], got {fraction}")));
    }
    let n = pi.n();
    let uniform = vec![1.0 / n as f64; n];
    let at_uniform = pi.robust_objective(&uniform)?;
    let scale = at_uniform.abs().max(1.0);
    let best = robust_optimum(pi, 1e-4 * scale, 20_000)?;
    let v_hat = best.value.min(at_uniform);
    Ok(v_hat + fraction * (at_uniform - v_hat))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSearch {
    pub point: Option<Vec<f64>>,
    pub lower: f64,
    pub upper: f64,
    pub feasibility_solves: usize,
    /// All probes reached a verdict.
    pub converged: bool,
}

/// Bisection on the level of the robust objective, running the configured
/// feasibility strategy on [`build_robust_instance`] at each probe.
pub fn optimize_by_levels(
    pi: &PortfolioInstance,
    config: &RunConfig,
    v_lo: f64,
    v_hi: f64,
    delta: f64,
) -> Result<LevelSearch> {
    if !(v_lo <= v_hi) || !(delta > 0.0) {
        return Err(Error::InvalidConfig("level search needs v_lo ≤ v_hi and δ > 0".into()));
    }
    let (mut lo, mut hi) = (v_lo, v_hi);
    let mut point = None;
    let mut solves = 0;
    while hi - lo > delta {
        let level = 0.5 * (lo + hi);
        let outcome = solve(&build_robust_instance(pi, level)?, config)?;
        solves += 1;
        match outcome.verdict {
            Verdict::Feasible { point: p, .. } => {
                hi = level;
                point = Some(p);
            }
            Verdict::Infeasible { .. } => lo = level,
            Verdict::Undecided { .. } => {
                return Ok(LevelSearch {
                    point,
                    lower: lo,
                    upper: hi,
                    feasibility_solves: solves,
                    converged: false,
                })
            }
        }
    }
    Ok(LevelSearch {
        point,
        lower: lo,
        upper: hi,
        feasibility_solves: solves,
        converged: true,
    })
}

/// Largest column deviation ratio `‖Σ_k u_k P_k e_i‖ / radius_i` for one `u`.
pub fn deviation_ratio(pi: &PortfolioInstance, u: &[f64]) -> f64 {
    let (m, n) = (pi.m(), pi.n());
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let col: Vec<f64> = (0..m)
            .map(|r| pi.p.iter().zip(u).map(|(pk, uk)| uk * pk[(r, i)]).sum())
            .collect();
        let radius = pi.column_radius(i);
        let norm = norm2(&col);
        if radius > 0.0 {
            worst = worst.max(norm / radius);
        } else if norm > 0.0 {
            worst = f64::INFINITY;
        }
    }
    worst
}
