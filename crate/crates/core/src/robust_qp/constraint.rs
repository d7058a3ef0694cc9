use crate::error::{ensure_dim, ensure_finite, Error, Result};
use crate::framework::{Evaluation, RobustConstraint};
use crate::geometry::{Domain, ProximalSetup};
use crate::linalg::{axpy, dot, norm2, Matrix};

use super::eigen::{jacobi_eigen, spectral_norm};
use super::trs::trs_max;

/// Slack allowed on `‖u‖₂ ≤ 1`.
const BALL_TOL: f64 = 1e-9;

/// Robust quadratic constraint
/// `‖(A + Σ_k u_k P_k) x‖² − bᵀx − c ≤ 0` for all `‖u‖₂ ≤ 1`,
/// evaluated through the concave-in-`u` reformulation
/// `f(x, u) = uᵀQ_x u + 2r_xᵀu + s_x + λ_max(Q_x)(1 − ‖u‖²)`
/// with `Q_x = 𝒫_xᵀ𝒫_x`, `r_x = 𝒫_xᵀAx`, `s_x = ‖Ax‖² − bᵀx − c` and
/// `𝒫_x = [P_1x … P_Kx]`. On the unit sphere `f` equals the raw quadratic,
/// and its supremum over the ball equals the raw robust value.
#[derive(Debug, Clone)]
pub struct RobustQpConstraint {
    a: Matrix,
    b: Vec<f64>,
    c: f64,
    p: Vec<Matrix>,
    /// Rows where some `P_k` is nonzero.
    p_rows: Vec<usize>,
    /// The `P_k` restricted to `p_rows`.
    p_compact: Vec<Matrix>,
    u_setup: ProximalSetup,
    norms: ConstraintNorms,
}

/// Norms entering the gradient bounds of a single constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintNorms {
    /// `Σ_k ‖P_k‖_F²`.
    pub sigma2: f64,
    /// `max_k ‖P_k‖₂`.
    pub chi: f64,
    /// `‖A‖₂`.
    pub rho: f64,
    /// `‖b‖₂`.
    pub beta: f64,
    /// `max_j ‖A e_j‖₂`.
    pub a_col: f64,
    /// `Σ_k max_j ‖P_k e_j‖₂²`.
    pub sigma2_col: f64,
    /// `max_j (‖A e_j‖₂ + sqrt(Σ_k ‖P_k e_j‖₂²))²`.
    pub c_col2: f64,
    /// `max_j Σ_k ‖P_k e_j‖₂²`.
    pub p_col2: f64,
    /// `‖b‖∞`.
    pub beta_inf: f64,
}

/// The quadratic form `(Q_x, r_x, s_x)` of the constraint at a fixed `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    pub q: Matrix,
    pub r: Vec<f64>,
    pub s: f64,
}

/// Everything about the constraint that depends on `x` only.
#[derive(Debug, Clone)]
pub struct QpPoint<'a> {
    constraint: &'a RobustQpConstraint,
    ax: Vec<f64>,
    px: Vec<Vec<f64>>,
    form: QuadraticForm,
    lambda_max: f64,
    top: Vec<f64>,
}

impl RobustQpConstraint {
    /// `a` and every `p[k]` are `rows × n`; `b` has length `n`; `K = p.len() ≥ 1`.
    pub fn new(a: Matrix, b: Vec<f64>, c: f64, p: Vec<Matrix>) -> Result<Self> {
        let n = a.cols();
        if n == 0 || a.rows() == 0 {
            return Err(Error::Instance("constraint matrix A must be nonempty".into()));
        }
        ensure_dim(b.len(), n, "constraint vector b")?;
        if p.is_empty() {
            return Err(Error::Instance("at least one perturbation matrix P_k is required".into()));
        }
        for pk in &p {
            ensure_dim(pk.rows(), a.rows(), "perturbation matrix rows")?;
            ensure_dim(pk.cols(), n, "perturbation matrix columns")?;
            if !pk.is_finite() {
                return Err(Error::NonFinite { context: "perturbation matrix" });
            }
        }
        if !a.is_finite() || !c.is_finite() {
            return Err(Error::NonFinite { context: "constraint data" });
        }
        ensure_finite(&b, "constraint vector b")?;
        let norms = ConstraintNorms::compute(&a, &b, &p)?;
        let u_setup = ProximalSetup::unit_ball(p.len())?;
        let p_rows: Vec<usize> = (0..a.rows())
            .filter(|&r| p.iter().any(|pk| pk.row(r).iter().any(|&v| v != 0.0)))
            .collect();
        let p_compact = p
            .iter()
            .map(|pk| {
                let data = p_rows.iter().flat_map(|&r| pk.row(r).iter().copied()).collect();
                Matrix::from_row_major(p_rows.len(), n, data)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RobustQpConstraint {
            a,
            b,
            c,
            p,
            p_rows,
            p_compact,
            u_setup,
            norms,
        })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn p(&self) -> &[Matrix] {
        &self.p
    }

    /// Number of uncertain directions `K`.
    pub fn k(&self) -> usize {
        self.p.len()
    }

    pub fn norms(&self) -> &ConstraintNorms {
        &self.norms
    }

    /// Precomputes the `x`-dependent quantities.
    pub fn at(&self, x: &[f64]) -> Result<QpPoint<'_>> {
        ensure_dim(x.len(), self.a.cols(), "robust QP x argument")?;
        ensure_finite(x, "robust QP x argument")?;
        let ax = self.a.mul_vec(x);
        let px: Vec<Vec<f64>> = self.p_compact.iter().map(|pk| pk.mul_vec(x)).collect();
        let ax_rows: Vec<f64> = self.p_rows.iter().map(|&r| ax[r]).collect();
        let k = px.len();
        let mut q = Matrix::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                let v = dot(&px[i], &px[j]);
                q[(i, j)] = v;
                q[(j, i)] = v;
            }
        }
        let r: Vec<f64> = px.iter().map(|pk| dot(pk, &ax_rows)).collect();
        let s = dot(&ax, &ax) - dot(&self.b, x) - self.c;
        let eig = jacobi_eigen(&q)?;
        let lambda_max = eig.values[0].max(0.0);
        let top = eig.vector(0);
        Ok(QpPoint {
            constraint: self,
            ax,
            px,
            form: QuadraticForm { q, r, s },
            lambda_max,
            top,
        })
    }

    /// `(Q_x, r_x, s_x)`.
    pub fn quadratic_form(&self, x: &[f64]) -> Result<QuadraticForm> {
        Ok(self.at(x)?.form)
    }

    /// The raw quadratic `‖(A + Σ u_k P_k)x‖² − bᵀx − c`.
    pub fn raw_value(&self, x: &[f64], u: &[f64]) -> Result<f64> {
        ensure_dim(u.len(), self.k(), "robust QP u argument")?;
        let mut w = self.a.mul_vec(x);
        for (pk, &uk) in self.p_compact.iter().zip(u) {
            for (&r, v) in self.p_rows.iter().zip(pk.mul_vec(x)) {
                w[r] += uk * v;
            }
        }
        Ok(dot(&w, &w) - dot(&self.b, x) - self.c)
    }

    /// Euclidean-geometry gradient bounds over a domain of radius `radius`:
    /// `(‖∇_x f‖₂, ‖∇_u f‖₂)` bounded by
    /// `(2(ρ+σ)²R + 2σ²R + ‖b‖, 2R²(σ² + σρ))`.
    fn euclidean_bounds(&self, radius: f64) -> (f64, f64) {
        let n = &self.norms;
        let sigma = n.sigma2.sqrt();
        let gx = 2.0 * (n.rho + sigma).powi(2) * radius + 2.0 * n.sigma2 * radius + n.beta;
        let gu = 2.0 * radius * radius * (n.sigma2 + sigma * n.rho);
        (gx, gu)
    }
}

impl ConstraintNorms {
    fn compute(a: &Matrix, b: &[f64], p: &[Matrix]) -> Result<Self> {
        let n = a.cols();
        let col_sq = |m: &Matrix, j: usize| -> f64 { (0..m.rows()).map(|i| m[(i, j)] * m[(i, j)]).sum() };
        let a_cols: Vec<f64> = (0..n).map(|j| col_sq(a, j).sqrt()).collect();
        let p_cols: Vec<f64> = (0..n).map(|j| p.iter().map(|pk| col_sq(pk, j)).sum()).collect();
        let sigma2_col = p
            .iter()
            .map(|pk| (0..n).map(|j| col_sq(pk, j)).fold(0.0, f64::max))
            .sum();
        let mut chi: f64 = 0.0;
        for pk in p {
            chi = chi.max(spectral_norm(pk)?);
        }
        Ok(ConstraintNorms {
            sigma2: p.iter().map(Matrix::frobenius_norm_sq).sum(),
            chi,
            rho: spectral_norm(a)?,
            beta: norm2(b),
            a_col: a_cols.iter().cloned().fold(0.0, f64::max),
            sigma2_col,
            c_col2: (0..n).map(|j| (a_cols[j] + p_cols[j].sqrt()).powi(2)).fold(0.0, f64::max),
            p_col2: p_cols.iter().cloned().fold(0.0, f64::max),
            beta_inf: b.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        })
    }
}

impl QpPoint<'_> {
    pub fn form(&self) -> &QuadraticForm {
        &self.form
    }

    /// `λ_max(Q_x)`.
    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// Unit top eigenvector of `Q_x` with the canonical sign.
    pub fn top_eigenvector(&self) -> &[f64] {
        &self.top
    }

    fn check_u(&self, u: &[f64]) -> Result<()> {
        ensure_dim(u.len(), self.constraint.k(), "robust QP u argument")?;
        ensure_finite(u, "robust QP u argument")?;
        let len = norm2(u);
        if len > 1.0 + BALL_TOL {
            return Err(Error::OutsideDomain { violation: len - 1.0 });
        }
        Ok(())
    }

    fn value_unchecked(&self, u: &[f64]) -> f64 {
        let QuadraticForm { q, r, s } = &self.form;
        dot(u, &q.mul_vec(u)) + 2.0 * dot(r, u) + s + self.lambda_max * (1.0 - dot(u, u))
    }

    pub fn value(&self, u: &[f64]) -> Result<f64> {
        self.check_u(u)?;
        Ok(self.value_unchecked(u))
    }

    /// `2(Q_x − λ_max I)u + 2r_x`.
    pub fn grad_u(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_u(u)?;
        let mut g = self.form.q.mul_vec(u);
        for ((gi, ui), ri) in g.iter_mut().zip(u).zip(&self.form.r) {
            *gi = 2.0 * (*gi - self.lambda_max * ui) + 2.0 * ri;
        }
        Ok(g)
    }

    /// `2A_uᵀA_u x + 2(1 − ‖u‖²)B_vᵀB_v x − b` with `A_u = A + Σ u_k P_k` and
    /// `B_v = Σ v_k P_k` for the top eigenvector `v` of `Q_x`.
    pub fn grad_x(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_u(u)?;
        let c = self.constraint;
        let rows = c.p_rows.len();
        let mut w = self.ax.clone();
        let mut w_rows = vec![0.0; rows];
        let mut z = vec![0.0; rows];
        for ((pkx, &uk), &vk) in self.px.iter().zip(u).zip(&self.top) {
            axpy(uk, pkx, &mut w_rows);
            axpy(vk, pkx, &mut z);
        }
        for (wr, &r) in w_rows.iter_mut().zip(&c.p_rows) {
            w[r] += *wr;
            *wr = w[r];
        }
        let damp = 1.0 - dot(u, u);
        let mut g: Vec<f64> = c.b.iter().map(|bi| -bi).collect();
        c.a.tr_mul_vec_acc(&w, 2.0, &mut g);
        let mut combo = vec![0.0; rows];
        for ((pk, &uk), &vk) in c.p_compact.iter().zip(u).zip(&self.top) {
            for ((ci, wi), zi) in combo.iter_mut().zip(&w_rows).zip(&z) {
                *ci = uk * wi + damp * vk * zi;
            }
            pk.tr_mul_vec_acc(&combo, 2.0, &mut g);
        }
        Ok(g)
    }
}

pub fn qp_eval(constraint: &RobustQpConstraint, x: &[f64], u: &[f64]) -> Result<f64> {
    constraint.at(x)?.value(u)
}

pub fn qp_grad_u(constraint: &RobustQpConstraint, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
    constraint.at(x)?.grad_u(u)
}

pub fn qp_grad_x(constraint: &RobustQpConstraint, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
    constraint.at(x)?.grad_x(u)
}

impl RobustConstraint for RobustQpConstraint {
    fn x_dim(&self) -> usize {
        self.a.cols()
    }

    fn uncertainty(&self) -> &ProximalSetup {
        &self.u_setup
    }

    fn value(&self, x: &[f64], u: &[f64]) -> Result<f64> {
        qp_eval(self, x, u)
    }

    fn grad_x(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        qp_grad_x(self, x, u)
    }

    fn grad_u(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        qp_grad_u(self, x, u)
    }

    fn evaluate(&self, x: &[f64], u: &[f64]) -> Result<Evaluation> {
        let point = self.at(x)?;
        Ok(Evaluation {
            value: point.value(u)?,
            grad_x: point.grad_x(u)?,
            grad_u: point.grad_u(u)?,
        })
    }

    fn value_and_grad_x(&self, x: &[f64], u: &[f64]) -> Result<(f64, Vec<f64>)> {
        let point = self.at(x)?;
        Ok((point.value(u)?, point.grad_x(u)?))
    }

    fn section<'a>(&'a self, x: &'a [f64]) -> Result<Box<dyn Fn(&[f64]) -> Result<f64> + 'a>> {
        let point = self.at(x)?;
        Ok(Box::new(move |u| point.value(u)))
    }

    fn max_over_scenarios(&self, x: &[f64], scenarios: &[Vec<f64>]) -> Result<Option<(usize, f64, Vec<f64>)>> {
        if scenarios.is_empty() {
            return Ok(None);
        }
        let point = self.at(x)?;
        let mut best = (0, f64::NEG_INFINITY);
        for (j, u) in scenarios.iter().enumerate() {
            let v = point.value(u)?;
            if v > best.1 {
                best = (j, v);
            }
        }
        let g = point.grad_x(&scenarios[best.0])?;
        Ok(Some((best.0, best.1, g)))
    }

    fn grad_x_bound(&self, x_setup: &ProximalSetup) -> f64 {
        let (euclid, _) = self.euclidean_bounds(x_setup.max_euclidean_norm());
        match x_setup.domain() {
            Domain::Simplex { .. } => {
                let n = &self.norms;
                let linf = 2.0 * n.c_col2 + 2.0 * n.p_col2 + n.beta_inf;
                linf.min(euclid)
            }
            _ => euclid,
        }
    }

    fn grad_u_bound(&self, x_setup: &ProximalSetup) -> f64 {
        let (_, euclid) = self.euclidean_bounds(x_setup.max_euclidean_norm());
        match x_setup.domain() {
            Domain::Simplex { .. } => {
                let n = &self.norms;
                let sigma = n.sigma2_col.sqrt();
                (2.0 * (n.sigma2_col + sigma * n.a_col)).min(euclid)
            }
            _ => euclid,
        }
    }

    fn has_pessimizer(&self) -> bool {
        true
    }

    /// Exact pessimizer: the trust-region maximizer of the raw quadratic.
    fn pessimize(&self, x: &[f64], tol: f64) -> Result<(Vec<f64>, f64)> {
        let form = self.quadratic_form(x)?;
        trs_max(&form.q, &form.r, form.s, tol.max(1e-15))
    }
}
