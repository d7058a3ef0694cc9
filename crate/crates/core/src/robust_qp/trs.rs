//! Exact maximization of a convex quadratic over the unit ball.

use crate::error::{ensure_dim, ensure_finite, Error, Result};
use crate::linalg::{dot, norm2, Matrix};

use super::eigen::jacobi_eigen;

/// Relative size below which the linear term's component in the top
/// eigenspace is treated as zero.
pub const HARD_CASE_THRESHOLD: f64 = 1e-12;

/// Eigenvalues below `−PSD_FLOOR·max(1, ‖Q‖_F)` make `Q` indefinite.
pub const PSD_FLOOR: f64 = 1e-9;

const SECULAR_MAX_ITER: usize = 500;

/// `uᵀQu + 2rᵀu + s`.
pub fn quadratic_value(q: &Matrix, r: &[f64], s: f64, u: &[f64]) -> f64 {
    dot(u, &q.mul_vec(u)) + 2.0 * dot(r, u) + s
}

/// Maximizes `uᵀQu + 2rᵀu + s` over `‖u‖₂ ≤ 1` for symmetric PSD `Q`.
///
/// The maximizer of a convex quadratic over the ball lies on the sphere, where
/// it satisfies `(μI − Q)u = r` with `μ ≥ λ_max(Q)`. In the eigenbasis of `Q`
/// this is the secular equation `Σ_j r̃_j²/(μ − λ_j)² = 1`, solved by a
/// safeguarded Newton iteration on `1/‖u(μ)‖`. When `r` has no component in
/// the top eigenspace and the remaining solution lies inside the ball, a
/// top eigenvector component is added to reach the sphere.
///
/// Returns the maximizer and its value; the value is within `tol` of the
/// supremum (in practice to rounding accuracy).
pub fn trs_max(q: &Matrix, r: &[f64], s: f64, tol: f64) -> Result<(Vec<f64>, f64)> {
    let k = q.rows();
    ensure_dim(q.cols(), k, "trust-region matrix")?;
    ensure_dim(r.len(), k, "trust-region linear term")?;
    ensure_finite(r, "trust-region linear term")?;
    if !s.is_finite() || !(tol > 0.0) {
        return Err(Error::NonFinite { context: "trust-region constant or tolerance" });
    }
    if k == 0 {
        return Ok((Vec::new(), s));
    }
    let eig = jacobi_eigen(q)?;
    let scale = q.frobenius_norm().max(1.0);
    let lambda_min = *eig.values.last().expect("nonempty");
    if lambda_min < -PSD_FLOOR * scale {
        return Err(Error::NotPsd(lambda_min));
    }
    let lambda_max = eig.values[0];
    let rt = eig.vectors.tr_mul_vec(r);
    let r_norm = norm2(r);
    let top_gap = 1e-12 * lambda_max.abs().max(1.0);
    let top: Vec<bool> = eig.values.iter().map(|&l| l >= lambda_max - top_gap).collect();
    let top_norm = rt.iter().zip(&top).filter(|(_, &t)| t).map(|(x, _)| x * x).sum::<f64>().sqrt();

    let to_original = |coords: &[f64]| -> Vec<f64> { eig.vectors.mul_vec(coords) };
    let finish = |mut u: Vec<f64>| -> (Vec<f64>, f64) {
        let len = norm2(&u);
        if len > 0.0 {
            u.iter_mut().for_each(|x| *x /= len);
        }
        let value = quadratic_value(q, r, s, &u);
        (u, value)
    };

    if r_norm == 0.0 {
        return Ok(finish(eig.vector(0)));
    }

    let hard = top_norm <= HARD_CASE_THRESHOLD * r_norm;
    if hard {
        // candidate at μ = λ_max using only the non-top components
        let mut coords = vec![0.0; k];
        for j in 0..k {
            if !top[j] {
                coords[j] = rt[j] / (lambda_max - eig.values[j]);
            }
        }
        let len_sq = dot(&coords, &coords);
        if len_sq <= 1.0 {
            coords[0] = (1.0 - len_sq).sqrt();
            return Ok(finish(to_original(&coords)));
        }
    }

    // Solve ‖u(μ)‖ = 1 on (λ_max, λ_max + ‖r‖].
    let weights: Vec<f64> = rt
        .iter()
        .zip(&top)
        .map(|(&x, &t)| if hard && t { 0.0 } else { x * x })
        .collect();
    let norm_sq = |mu: f64| -> (f64, f64) {
        let mut n = 0.0;
        let mut dn = 0.0;
        for (w, l) in weights.iter().zip(&eig.values) {
            if *w == 0.0 {
                continue;
            }
            let d = mu - l;
            n += w / (d * d);
            dn -= 2.0 * w / (d * d * d);
        }
        (n, dn)
    };
    let mut lo = lambda_max;
    let mut hi = lambda_max + r_norm;
    let mut mu = hi;
    for _ in 0..SECULAR_MAX_ITER {
        let (n, dn) = norm_sq(mu);
        if (n - 1.0).abs() <= 4.0 * f64::EPSILON {
            break;
        }
        if n > 1.0 {
            lo = mu;
        } else {
            hi = mu;
        }
        // Newton on φ(μ) = 1/sqrt(n(μ)) − 1, φ' = −½ n^{-3/2} n'
        let phi = 1.0 / n.sqrt() - 1.0;
        let dphi = -0.5 * dn / (n * n.sqrt());
        let mut next = mu - phi / dphi;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if next == mu || hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            break;
        }
        mu = next;
    }
    let coords: Vec<f64> = rt
        .iter()
        .zip(&eig.values)
        .zip(&weights)
        .map(|((&x, &l), &w)| if w == 0.0 { 0.0 } else { x / (mu - l) })
        .collect();
    Ok(finish(to_original(&coords)))
}
