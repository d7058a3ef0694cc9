use crate::error::{ensure_dim, Error, Result};
use crate::oco::{minimize_convex, NominalOptions, NominalSolution};

use super::instance::RobustInstance;

/// Largest dimension accepted by [`evaluate_sp_gap`].
pub const SP_GAP_MAX_DIM: usize = 10;

/// Minimizes the robust violation `F(x) = max_i sup_u f^i(x, u)` over `X`
/// using the pessimizers (a maximizing noise yields a subgradient of `F`).
/// The solution carries a certified lower bound on `min_X F`.
pub fn robust_minimax(instance: &RobustInstance, options: &NominalOptions) -> Result<NominalSolution> {
    if !instance.has_pessimizers() {
        return Err(Error::InvalidConfig("robust minimax needs pessimizers".into()));
    }
    let constraints = instance.constraints();
    minimize_convex(
        instance.x_setup(),
        |x| {
            let mut best: Option<(f64, Vec<f64>)> = None;
            for c in constraints {
                let (u, v) = c.pessimize(x, 1e-12)?;
                if best.as_ref().is_none_or(|(b, _)| v > *b) {
                    best = Some((v, c.grad_x(x, &u)?));
                }
            }
            Ok(best.expect("instance has constraints"))
        },
        options,
    )
}

/// Saddle-point gap `sup_u Φ(x̄, u) − inf_x Φ(x, ū)` of `Φ = max_i f^i`,
/// accurate to `tol`. The supremum uses the pessimizers; the infimum is
/// minimized to accuracy `tol` with a certified lower bound.
pub fn evaluate_sp_gap(instance: &RobustInstance, x_bar: &[f64], u_bar: &[Vec<f64>], tol: f64) -> Result<f64> {
    let n = instance.x_setup().dim();
    if n > SP_GAP_MAX_DIM {
        return Err(Error::InvalidConfig(format!(
            "saddle-point gap evaluation is limited to dimension {SP_GAP_MAX_DIM}, got {n}"
        )));
    }
    ensure_dim(x_bar.len(), n, "gap x argument")?;
    ensure_dim(u_bar.len(), instance.num_constraints(), "gap noise count")?;
    let sup = instance.max_robust_value(x_bar, 1e-12)?;
    let constraints = instance.constraints();
    let sol = minimize_convex(
        instance.x_setup(),
        |x| {
            let mut best: Option<(f64, Vec<f64>)> = None;
            for (c, u) in constraints.iter().zip(u_bar) {
                let (v, g) = c.value_and_grad_x(x, u)?;
                if best.as_ref().is_none_or(|(b, _)| v > *b) {
                    best = Some((v, g));
                }
            }
            Ok(best.expect("instance has constraints"))
        },
        &NominalOptions::new(tol, 10_000_000),
    )?;
    Ok((sup - sol.value).max(0.0))
}
