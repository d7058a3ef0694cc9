//! JSON instance files for robust quadratic feasibility problems.
//!
//! ```json
//! {
//!   "domain_x": {"simplex": {"dimension": 3}},
//!   "constraints": [{"A": [[1, 0, 0]], "b": [0, 0, 0], "c": 0.5, "P": [[[0, 1, 0]]]}],
//!   "objective": {"linear": [1, 2, 3], "quadratic_diag": [0, 0, 0]},
//!   "lambda": 1.0
//! }
//! ```
//!
//! Unknown keys are rejected at every level.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::framework::{RobustConstraint, RobustInstance, SeparableQuadratic};
use crate::geometry::{Domain, ProximalSetup};
use crate::linalg::Matrix;
use crate::portfolio::PortfolioInstance;
use crate::robust_qp::RobustQpConstraint;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSpec {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: f64,
    #[serde(rename = "P")]
    pub p: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSpec {
    pub linear: Vec<f64>,
    pub quadratic_diag: Vec<f64>,
}

/// Provenance of generated instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceMeta {
    pub generator: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stream: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub domain_x: Domain,
    pub constraints: Vec<ConstraintSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<ObjectiveSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<InstanceMeta>,
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<Matrix> {
    Matrix::from_rows(rows).map_err(|e| Error::Instance(format!("{what}: {e}")))
}

impl ConstraintSpec {
    pub fn from_constraint(c: &RobustQpConstraint) -> Self {
        ConstraintSpec {
            a: c.a().to_rows(),
            b: c.b().to_vec(),
            c: c.c(),
            p: c.p().iter().map(Matrix::to_rows).collect(),
        }
    }

    pub fn to_constraint(&self, index: usize) -> Result<RobustQpConstraint> {
        let a = matrix(&self.a, &format!("constraints[{index}].A"))?;
        let p = self
            .p
            .iter()
            .enumerate()
            .map(|(k, pk)| matrix(pk, &format!("constraints[{index}].P[{k}]")))
            .collect::<Result<Vec<_>>>()?;
        RobustQpConstraint::new(a, self.b.clone(), self.c, p)
            .map_err(|e| Error::Instance(format!("constraints[{index}]: {e}")))
    }
}

impl InstanceFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn from_constraints(domain_x: Domain, constraints: &[RobustQpConstraint]) -> Self {
        InstanceFile {
            domain_x,
            constraints: constraints.iter().map(ConstraintSpec::from_constraint).collect(),
            objective: None,
            lambda: None,
            meta: None,
        }
    }

    /// The portfolio problem "robust objective ≤ level" over the simplex.
    pub fn from_portfolio(pi: &PortfolioInstance, level: f64) -> Result<Self> {
        let constraint = pi.objective_constraint(level)?;
        let mut file = Self::from_constraints(Domain::Simplex { dimension: pi.n() }, &[constraint]);
        file.lambda = Some(pi.lambda);
        file.meta = Some(InstanceMeta {
            generator: "portfolio".into(),
            seed: pi.params.seed,
            n: Some(pi.n()),
            m: Some(pi.m()),
            k: Some(pi.k()),
            samples: Some(pi.params.p),
            alpha: Some(pi.params.alpha),
            stream: Some(pi.stream),
        });
        Ok(file)
    }

    /// Dimension of `x` declared by `domain_x`.
    pub fn x_dim(&self) -> usize {
        match &self.domain_x {
            Domain::Ball { center, .. } => center.len(),
            Domain::Simplex { dimension } => *dimension,
            Domain::Box { lower, .. } => lower.len(),
        }
    }

    pub fn qp_constraints(&self) -> Result<Vec<RobustQpConstraint>> {
        self.constraints
            .iter()
            .enumerate()
            .map(|(i, c)| c.to_constraint(i))
            .collect()
    }

    /// Builds the solver instance, checking dimensions across all blocks.
    pub fn to_instance(&self) -> Result<RobustInstance> {
        let setup = ProximalSetup::new(self.domain_x.clone())
            .map_err(|e| Error::Instance(format!("domain_x: {e}")))?;
        let n = setup.dim();
        if self.constraints.is_empty() {
            return Err(Error::Instance("constraints: at least one constraint is required".into()));
        }
        let mut constraints: Vec<Arc<dyn RobustConstraint>> = Vec::with_capacity(self.constraints.len());
        for (i, c) in self.qp_constraints()?.into_iter().enumerate() {
            if c.a().cols() != n {
                return Err(Error::Instance(format!(
                    "constraints[{i}].A has {} columns but domain_x has dimension {n}",
                    c.a().cols()
                )));
            }
            constraints.push(Arc::new(c));
        }
        let mut instance = RobustInstance::new(setup, constraints)?;
        if let Some(obj) = &self.objective {
            if obj.linear.len() != n {
                return Err(Error::Instance(format!(
                    "objective.linear has length {} but domain_x has dimension {n}",
                    obj.linear.len()
                )));
            }
            let objective = SeparableQuadratic::new(obj.linear.clone(), obj.quadratic_diag.clone())
                .map_err(|e| Error::Instance(format!("objective: {e}")))?;
            instance = instance.with_objective(Arc::new(objective));
        }
        Ok(instance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = r#"{
        "domain_x": {"simplex": {"dimension": 2}},
        "constraints": [{"A": [[1.0, 0.0]], "b": [0.0, 0.0], "c": 0.5, "P": [[[0.0, 0.25]]]}],
        "objective": {"linear": [1.0, -1.0], "quadratic_diag": [0.0, 0.5]}
    }"#;

    #[test]
    fn parses_and_builds() {
        let file = InstanceFile::from_json(TOY).unwrap();
        let instance = file.to_instance().unwrap();
        assert_eq!(instance.num_constraints(), 1);
        assert!(instance.objective().is_some());
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = TOY.replace("\"c\": 0.5", "\"c\": 0.5, \"d\": 1");
        assert!(InstanceFile::from_json(&bad).is_err());
        let bad = TOY.replace("\"dimension\": 2", "\"dimension\": 2, \"radius\": 1");
        assert!(InstanceFile::from_json(&bad).is_err());
    }

    #[test]
    fn dimension_errors_name_the_block() {
        let bad = TOY.replace("[[1.0, 0.0]]", "[[1.0, 0.0, 0.0]]");
        let err = InstanceFile::from_json(&bad).unwrap().to_instance().err().unwrap();
        assert!(err.to_string().contains("constraints[0]"), "{err}");
        let bad = TOY.replace("\"linear\": [1.0, -1.0]", "\"linear\": [1.0]");
        let err = InstanceFile::from_json(&bad).unwrap().to_instance().err().unwrap();
        assert!(err.to_string().contains("objective"), "{err}");
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut file = InstanceFile::from_json(TOY).unwrap();
        file.constraints[0].c = 0.1 + 0.2;
        file.constraints[0].b = vec![1.0 / 3.0, -2.0f64.sqrt()];
        file.lambda = Some(std::f64::consts::PI);
        let back = InstanceFile::from_json(&file.to_json().unwrap()).unwrap();
        assert_eq!(back, file);
    }
}
