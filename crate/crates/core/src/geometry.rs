//! Proximal setups for the domains used by the solvers.
//!
//! A setup bundles a domain with a distance-generating function `ω`, its prox
//! map `Prox_z(ξ) = argmin_w { ⟨ξ, w⟩ + ω(w) − ⟨∇ω(z), w⟩ }` and the set width
//! `Ω = max ω − min ω`. The ball and the box use `ω = ½‖·‖₂²` (prox is the
//! Euclidean projection of `z − ξ`); the simplex uses the entropy (prox is a
//! multiplicative-weights update, `Ω = ln n`).

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, ensure_finite, Error, Result};
use crate::linalg::{dot, norm2, norm_inf};

/// Tolerance used when checking that an input point lies in the domain.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Smallest weight kept by the entropy prox.
const SIMPLEX_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Domain {
    Ball { center: Vec<f64>, radius: f64 },
    Simplex { dimension: usize },
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

/// Norm family the setup's strong convexity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    /// `‖·‖₂`, dual norm `‖·‖₂`.
    Euclidean,
    /// `‖·‖₁`, dual norm `‖·‖∞`.
    Entropy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProximalSetup {
    domain: Domain,
    set_width: f64,
}

impl ProximalSetup {
    pub fn new(domain: Domain) -> Result<Self> {
        let set_width = match &domain {
            Domain::Ball { center, radius } => {
                ensure_finite(center, "ball center")?;
                if center.is_empty() {
                    return Err(Error::InvalidDomain("ball dimension must be at least 1".into()));
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidDomain(format!("ball radius must be positive, got {radius}")));
                }
                0.5 * radius * radius
            }
            Domain::Simplex { dimension } => {
                if *dimension == 0 {
                    return Err(Error::InvalidDomain("simplex dimension must be at least 1".into()));
                }
                (*dimension as f64).ln()
            }
            Domain::Box { lower, upper } => {
                ensure_dim(upper.len(), lower.len(), "box bounds")?;
                ensure_finite(lower, "box lower bound")?;
                ensure_finite(upper, "box upper bound")?;
                if lower.is_empty() {
                    return Err(Error::InvalidDomain("box dimension must be at least 1".into()));
                }
                if let Some(i) = (0..lower.len()).find(|&i| lower[i] > upper[i]) {
                    return Err(Error::InvalidDomain(format!(
                        "box lower bound exceeds upper bound in coordinate {i}"
                    )));
                }
                lower.iter().zip(upper).map(|(l, u)| (u - l) * (u - l)).sum::<f64>() / 8.0
            }
        };
        Ok(ProximalSetup { domain, set_width })
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        Self::new(Domain::Ball { center, radius })
    }

    /// Unit Euclidean ball centered at the origin.
    pub fn unit_ball(dim: usize) -> Result<Self> {
        Self::ball(vec![0.0; dim], 1.0)
    }

    pub fn simplex(dimension: usize) -> Result<Self> {
        Self::new(Domain::Simplex { dimension })
    }

    pub fn cube(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        Self::new(Domain::Box { lower, upper })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// `Ω`, the variation of the distance-generating function over the domain.
    pub fn set_width(&self) -> f64 {
        self.set_width
    }

    pub fn dim(&self) -> usize {
        match &self.domain {
            Domain::Ball { center, .. } => center.len(),
            Domain::Simplex { dimension } => *dimension,
            Domain::Box { lower, .. } => lower.len(),
        }
    }

    pub fn geometry(&self) -> Geometry {
        match self.domain {
            Domain::Simplex { .. } => Geometry::Entropy,
            _ => Geometry::Euclidean,
        }
    }

    /// Dual norm of a gradient in this setup's geometry.
    pub fn dual_norm(&self, g: &[f64]) -> f64 {
        match self.geometry() {
            Geometry::Euclidean => norm2(g),
            Geometry::Entropy => norm_inf(g),
        }
    }

    /// Largest Euclidean norm of a point of the domain.
    pub fn max_euclidean_norm(&self) -> f64 {
        match &self.domain {
            Domain::Ball { center, radius } => norm2(center) + radius,
            Domain::Simplex { .. } => 1.0,
            Domain::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| {
                    let a = l.abs().max(u.abs());
                    a * a
                })
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Distance by which `z` violates the domain constraints (0 inside).
    pub fn violation(&self, z: &[f64]) -> f64 {
        if z.len() != self.dim() || z.iter().any(|v| !v.is_finite()) {
            return f64::INFINITY;
        }
        match &self.domain {
            Domain::Ball { center, radius } => {
                let d = z.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt();
                (d - radius).max(0.0)
            }
            Domain::Simplex { .. } => {
                let neg = z.iter().fold(0.0f64, |m, &v| m.max(-v));
                let sum: f64 = z.iter().sum();
                neg.max((sum - 1.0).abs())
            }
            Domain::Box { lower, upper } => z
                .iter()
                .zip(lower.iter().zip(upper))
                .fold(0.0f64, |m, (&v, (&l, &u))| m.max(l - v).max(v - u)),
        }
    }

    pub fn contains(&self, z: &[f64], tol: f64) -> bool {
        self.violation(z) <= tol
    }

    /// The minimizer of `ω`: center, uniform vector or midpoint.
    pub fn initial_point(&self) -> Vec<f64> {
        match &self.domain {
            Domain::Ball { center, .. } => center.clone(),
            Domain::Simplex { dimension } => vec![1.0 / *dimension as f64; *dimension],
            Domain::Box { lower, upper } => {
                lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)).collect()
            }
        }
    }

    /// `Prox_current(scaled_gradient)`.
    pub fn prox_step(&self, current: &[f64], scaled_gradient: &[f64]) -> Result<Vec<f64>> {
        ensure_dim(current.len(), self.dim(), "prox current point")?;
        ensure_dim(scaled_gradient.len(), self.dim(), "prox gradient")?;
        ensure_finite(current, "prox current point")?;
        ensure_finite(scaled_gradient, "prox gradient")?;
        let violation = self.violation(current);
        if violation > MEMBERSHIP_TOL {
            return Err(Error::OutsideDomain { violation });
        }
        match &self.domain {
            Domain::Simplex { .. } => Ok(multiplicative_weights(current, scaled_gradient)),
            _ => {
                let shifted: Vec<f64> =
                    current.iter().zip(scaled_gradient).map(|(z, g)| z - g).collect();
                self.project(&shifted)
            }
        }
    }

    /// Euclidean projection onto the domain.
    pub fn project(&self, point: &[f64]) -> Result<Vec<f64>> {
        ensure_dim(point.len(), self.dim(), "projection input")?;
        ensure_finite(point, "projection input")?;
        Ok(match &self.domain {
            Domain::Ball { center, radius } => {
                let d: Vec<f64> = point.iter().zip(center).map(|(p, c)| p - c).collect();
                let len = norm2(&d);
                if len <= *radius {
                    point.to_vec()
                } else {
                    let s = radius / len;
                    center.iter().zip(&d).map(|(c, di)| c + s * di).collect()
                }
            }
            Domain::Simplex { .. } => project_simplex(point),
            Domain::Box { lower, upper } => point
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(&p, (&l, &u))| p.clamp(l, u))
                .collect(),
        })
    }

    /// `min_{z ∈ domain} ⟨g, z⟩` together with a minimizer.
    pub fn linear_minimum(&self, g: &[f64]) -> (f64, Vec<f64>) {
        match &self.domain {
            Domain::Ball { center, radius } => {
                let len = norm2(g);
                let z: Vec<f64> = if len > 0.0 {
                    center.iter().zip(g).map(|(c, gi)| c - radius * gi / len).collect()
                } else {
                    center.clone()
                };
                (dot(g, center) - radius * len, z)
            }
            Domain::Simplex { dimension } => {
                let mut best = 0;
                for (i, v) in g.iter().enumerate() {
                    if *v < g[best] {
                        best = i;
                    }
                }
                let mut z = vec![0.0; *dimension];
                z[best] = 1.0;
                (g[best], z)
            }
            Domain::Box { lower, upper } => {
                let z: Vec<f64> = g
                    .iter()
                    .zip(lower.iter().zip(upper))
                    .map(|(&gi, (&l, &u))| if gi >= 0.0 { l } else { u })
                    .collect();
                (dot(g, &z), z)
            }
        }
    }
}

/// `w ∝ z · exp(−ξ)`, computed in log space and floored before renormalizing.
fn multiplicative_weights(current: &[f64], xi: &[f64]) -> Vec<f64> {
    let logs: Vec<f64> = current
        .iter()
        .zip(xi)
        .map(|(z, g)| z.max(SIMPLEX_FLOOR).ln() - g)
        .collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = logs.iter().map(|l| (l - top).exp().max(SIMPLEX_FLOOR)).collect();
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v /= total;
    }
    w
}

/// Sort-and-threshold Euclidean projection onto the probability simplex.
fn project_simplex(point: &[f64]) -> Vec<f64> {
    let mut sorted = point.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        cumulative += v;
        let candidate = (cumulative - 1.0) / (k + 1) as f64;
        if v - candidate > 0.0 {
            theta = candidate;
        }
    }
    point.iter().map(|v| (v - theta).max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn set_widths() {
        assert_eq!(ProximalSetup::unit_ball(3).unwrap().set_width(), 0.5);
        assert_eq!(ProximalSetup::ball(vec![1.0], 2.0).unwrap().set_width(), 2.0);
        assert_abs_diff_eq!(ProximalSetup::simplex(4).unwrap().set_width(), 4f64.ln());
        // max ½‖z − mid‖² over [0,2]×[0,4] is ½(1 + 4)
        assert_abs_diff_eq!(
            ProximalSetup::cube(vec![0.0, 0.0], vec![2.0, 4.0]).unwrap().set_width(),
            2.5
        );
    }

    #[test]
    fn invalid_domains() {
        assert!(ProximalSetup::ball(vec![0.0], 0.0).is_err());
        assert!(ProximalSetup::simplex(0).is_err());
        assert!(ProximalSetup::cube(vec![1.0], vec![0.0]).is_err());
        assert!(ProximalSetup::cube(vec![0.0, 0.0], vec![1.0]).is_err());
    }

    #[test]
    fn prox_examples() {
        let ball = ProximalSetup::unit_ball(2).unwrap();
        assert_eq!(ball.prox_step(&[0.5, 0.0], &[0.0, 0.0]).unwrap(), vec![0.5, 0.0]);
        assert_eq!(ball.prox_step(&[1.0, 0.0], &[-1.0, 0.0]).unwrap(), vec![1.0, 0.0]);

        let simplex = ProximalSetup::simplex(2).unwrap();
        let w = simplex.prox_step(&[0.5, 0.5], &[2f64.ln(), 0.0]).unwrap();
        assert_abs_diff_eq!(w[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w[1], 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn prox_rejects_bad_input() {
        let ball = ProximalSetup::unit_ball(2).unwrap();
        assert!(matches!(
            ball.prox_step(&[2.0, 0.0], &[0.0, 0.0]),
            Err(Error::OutsideDomain { .. })
        ));
        assert!(matches!(
            ball.prox_step(&[0.0, 0.0], &[f64::NAN, 0.0]),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn projection_examples() {
        let ball = ProximalSetup::unit_ball(2).unwrap();
        let p = ball.project(&[3.0, 4.0]).unwrap();
        assert_abs_diff_eq!(p[0], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.8, epsilon = 1e-15);

        let s3 = ProximalSetup::simplex(3).unwrap();
        let third = 1.0 / 3.0;
        assert_eq!(s3.project(&[third; 3]).unwrap(), vec![third; 3]);

        let s2 = ProximalSetup::simplex(2).unwrap();
        assert_eq!(s2.project(&[1.5, -0.5]).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn initial_points() {
        assert_eq!(ProximalSetup::unit_ball(2).unwrap().initial_point(), vec![0.0, 0.0]);
        assert_eq!(ProximalSetup::simplex(4).unwrap().initial_point(), vec![0.25; 4]);
        assert_eq!(
            ProximalSetup::cube(vec![0.0, 0.0], vec![2.0, 4.0]).unwrap().initial_point(),
            vec![1.0, 2.0]
        );
    }

    #[test]
    fn linear_minimum_matches_vertices() {
        let cube = ProximalSetup::cube(vec![-1.0, 0.0], vec![1.0, 2.0]).unwrap();
        let (v, z) = cube.linear_minimum(&[1.0, -1.0]);
        assert_eq!(z, vec![-1.0, 2.0]);
        assert_eq!(v, -3.0);
        let ball = ProximalSetup::ball(vec![1.0, 0.0], 2.0).unwrap();
        let (v, _) = ball.linear_minimum(&[0.0, 1.0]);
        assert_eq!(v, -2.0);
    }

    #[test]
    fn domain_json_shape() {
        let d: Domain = serde_json::from_str(r#"{"simplex":{"dimension":3}}"#).unwrap();
        assert_eq!(d, Domain::Simplex { dimension: 3 });
        assert!(serde_json::from_str::<Domain>(r#"{"simplex":{"dimension":3,"x":1}}"#).is_err());
    }
}
