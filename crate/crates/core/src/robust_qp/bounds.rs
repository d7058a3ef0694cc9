use super::constraint::RobustQpConstraint;

/// Instance-wide constants of a family of robust quadratic constraints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpInstanceBounds {
    /// `σ² = max_i Σ_k ‖P_k^i‖_F²`.
    pub sigma2: f64,
    /// `χ = max_i max_k ‖P_k^i‖₂`.
    pub chi: f64,
    /// `ρ = max_i ‖A_i‖₂`.
    pub rho: f64,
    /// `β = max_i ‖b_i‖₂`.
    pub beta: f64,
    /// Largest number of perturbation matrices `K`.
    pub k: usize,
}

impl QpInstanceBounds {
    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    /// Bound `2(σ² + σρ)` on `‖∇_u f‖₂` over the unit balls.
    pub fn grad_u_bound(&self) -> f64 {
        2.0 * (self.sigma2 + self.sigma() * self.rho)
    }

    /// Bound `4(ρ + √K σ)² + β` on `‖∇_x f‖₂` over the unit balls.
    pub fn grad_x_bound(&self) -> f64 {
        4.0 * (self.rho + (self.k as f64).sqrt() * self.sigma()).powi(2) + self.beta
    }

    /// `((ρ + √K σ)² + β)²`, the instance factor of the iteration count.
    pub fn iteration_factor(&self) -> f64 {
        ((self.rho + (self.k as f64).sqrt() * self.sigma()).powi(2) + self.beta).powi(2)
    }
}

pub fn qp_bounds(constraints: &[RobustQpConstraint]) -> QpInstanceBounds {
    let mut out = QpInstanceBounds {
        sigma2: 0.0,
        chi: 0.0,
        rho: 0.0,
        beta: 0.0,
        k: 0,
    };
    for c in constraints {
        let n = c.norms();
        out.sigma2 = out.sigma2.max(n.sigma2);
        out.chi = out.chi.max(n.chi);
        out.rho = out.rho.max(n.rho);
        out.beta = out.beta.max(n.beta);
        out.k = out.k.max(c.k());
    }
    out
}
