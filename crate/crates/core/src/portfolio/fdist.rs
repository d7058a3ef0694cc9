use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

/// CDF of the `F(d1, d2)` distribution at `x`.
pub fn f_cdf(d1: usize, d2: usize, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    let (a, b) = (d1 as f64, d2 as f64);
    beta_reg(a / 2.0, b / 2.0, a * x / (a * x + b))
}

/// The `α`-critical value of `F(d1, d2)`: the point with CDF `α`, found by
/// bisection on the regularized incomplete beta representation of the CDF.
pub fn f_critical_value(d1: usize, d2: usize, alpha: f64) -> Result<f64> {
    if d1 == 0 || d2 == 0 {
        return Err(Error::InvalidConfig("F-distribution degrees of freedom must be positive".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig(format!("alpha must lie in (0,1), got {alpha}")));
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while f_cdf(d1, d2, hi) < alpha {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::NoConvergence {
                routine: "F critical value bracketing",
                iterations: 1000,
            });
        }
    }
    for _ in 0..2000 {
        if hi - lo <= 1e-13 * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f_cdf(d1, d2, mid) < alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
