//! Symmetric eigenvalue routines.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, Matrix};

/// Dense eigendecomposition is used up to this dimension.
pub const DENSE_EIGEN_MAX_DIM: usize = 64;

const POWER_ITERATION_CAP: usize = 100_000;
const MAX_SWEEPS: usize = 100;

/// Eigendecomposition of a symmetric matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    /// Eigenvectors stored as columns, in the order of `values`.
    pub vectors: Matrix,
}

impl SymmetricEigen {
    pub fn vector(&self, j: usize) -> Vec<f64> {
        self.vectors.column(j)
    }
}

fn check_symmetric(m: &Matrix) -> Result<()> {
    if m.rows() != m.cols() {
        return Err(Error::DimensionMismatch {
            context: "symmetric matrix",
            expected: m.rows(),
            got: m.cols(),
        });
    }
    if !m.is_finite() {
        return Err(Error::NonFinite { context: "symmetric matrix" });
    }
    let asym = m.asymmetry();
    if asym > 1e-10 * m.frobenius_norm().max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

/// Flips `v` so that its largest-magnitude entry (first one on ties) is positive.
pub fn canonical_sign(v: &mut [f64]) {
    let mut pivot = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[pivot].abs() * (1.0 + 1e-12) {
            pivot = i;
        }
    }
    if v.get(pivot).is_some_and(|&p| p < 0.0) {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Cyclic Jacobi eigendecomposition. Eigenvalues are sorted in descending
/// order (stable with respect to the original diagonal position) and every
/// eigenvector carries the [`canonical_sign`].
pub fn jacobi_eigen(m: &Matrix) -> Result<SymmetricEigen> {
    check_symmetric(m)?;
    let n = m.rows();
    let mut a = m.clone();
    // symmetrize exactly so rotations act on a symmetric matrix
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = avg;
            a[(j, i)] = avg;
        }
    }
    let mut v = Matrix::identity(n);
    let scale = m.frobenius_norm();
    let mut converged = n <= 1 || scale == 0.0;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let off: f64 = (0..n).flat_map(|p| (p + 1..n).map(move |q| (p, q))).map(|(p, q)| a[(p, q)] * a[(p, q)]).sum();
        if off.sqrt() <= 0.5 * f64::EPSILON * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        let off: f64 = (0..n).flat_map(|p| (p + 1..n).map(move |q| (p, q))).map(|(p, q)| a[(p, q)] * a[(p, q)]).sum();
        if off.sqrt() > 1e-12 * scale {
            return Err(Error::NoConvergence {
                routine: "Jacobi eigendecomposition",
                iterations: MAX_SWEEPS,
            });
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let mut vec = v.column(src);
        canonical_sign(&mut vec);
        for (k, x) in vec.into_iter().enumerate() {
            vectors[(k, col)] = x;
        }
    }
    Ok(SymmetricEigen { values, vectors })
}

/// Largest eigenvalue of a symmetric matrix and a unit eigenvector for it.
///
/// Dimensions up to [`DENSE_EIGEN_MAX_DIM`] use [`jacobi_eigen`]; larger ones
/// use [`power_iteration`]. The eigenvalue is accurate to `tol·max(1, ‖M‖_F)`.
pub fn max_eigenvalue(m: &Matrix, tol: f64) -> Result<(f64, Vec<f64>)> {
    check_symmetric(m)?;
    if m.rows() == 0 {
        return Err(Error::DimensionMismatch {
            context: "max_eigenvalue",
            expected: 1,
            got: 0,
        });
    }
    if m.rows() <= DENSE_EIGEN_MAX_DIM {
        let eig = jacobi_eigen(m)?;
        Ok((eig.values[0], eig.vector(0)))
    } else {
        power_iteration(m, tol)
    }
}

/// Power iteration for the largest eigenvalue. If the dominant eigenvalue
/// found is negative, the iteration is repeated on `M + |λ|·I` so that the
/// algebraically largest eigenvalue dominates.
pub fn power_iteration(m: &Matrix, tol: f64) -> Result<(f64, Vec<f64>)> {
    check_symmetric(m)?;
    let (lambda, v) = power_iteration_shifted(m, 0.0, tol)?;
    if lambda >= 0.0 {
        return Ok((lambda, v));
    }
    let shift = lambda.abs();
    let (shifted, v) = power_iteration_shifted(m, shift, tol)?;
    Ok((shifted - shift, v))
}

fn power_iteration_shifted(m: &Matrix, shift: f64, tol: f64) -> Result<(f64, Vec<f64>)> {
    let n = m.rows();
    let threshold = tol * m.frobenius_norm().max(1.0);
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 * 0.618_033_988_749_895).fract()).collect();
    let len = norm2(&v);
    v.iter_mut().for_each(|x| *x /= len);
    for _ in 0..POWER_ITERATION_CAP {
        let mut w = m.mul_vec(&v);
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi += shift * vi;
        }
        let lambda = dot(&v, &w);
        let residual = w.iter().zip(&v).map(|(wi, vi)| (wi - lambda * vi).powi(2)).sum::<f64>().sqrt();
        let len = norm2(&w);
        if residual <= threshold || len == 0.0 {
            canonical_sign(&mut v);
            return Ok((lambda, v));
        }
        v = w.into_iter().map(|x| x / len).collect();
    }
    Err(Error::NoConvergence {
        routine: "power iteration",
        iterations: POWER_ITERATION_CAP,
    })
}

/// Spectral norm `‖M‖₂`, computed from the smaller Gram matrix after dropping
/// zero rows and columns.
pub fn spectral_norm(m: &Matrix) -> Result<f64> {
    let rows: Vec<usize> = (0..m.rows()).filter(|&i| m.row(i).iter().any(|&x| x != 0.0)).collect();
    let cols: Vec<usize> = (0..m.cols()).filter(|&j| rows.iter().any(|&i| m[(i, j)] != 0.0)).collect();
    if rows.is_empty() {
        return Ok(0.0);
    }
    let mut reduced = Matrix::zeros(rows.len(), cols.len());
    for (a, &i) in rows.iter().enumerate() {
        for (b, &j) in cols.iter().enumerate() {
            reduced[(a, b)] = m[(i, j)];
        }
    }
    let gram = if reduced.rows() < reduced.cols() {
        reduced.transpose().gram()
    } else {
        reduced.gram()
    };
    let (lambda, _) = max_eigenvalue(&gram, 1e-12)?;
    Ok(lambda.max(0.0).sqrt())
}
