use std::time::{Duration, Instant};

use super::config::Strategy;

/// How a feasibility verdict was certified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Certificate {
    /// Weighted average of the iterates, certified by the regret bounds.
    AveragedIterate,
    /// A single iterate whose pessimized constraint values are small.
    PessimizedIterate,
    /// A candidate checked directly with the exact pessimizers.
    DirectVerification,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfeasibilityEvidence {
    /// `ϑ_t` at the decisive iteration.
    pub vartheta: f64,
    /// Threshold `(1 − τ)ε` that `ϑ_t` exceeded (0 for nominal certificates).
    pub threshold: f64,
    pub tau: f64,
    pub kappa_circ: f64,
    pub kappa_bullet: f64,
    /// Positive certified lower bound of a nominal problem, when that is the evidence.
    pub nominal_lower_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    /// `point` satisfies `max_i sup_u f^i(point, u) ≤ certified_bound ≤ ε`.
    Feasible {
        point: Vec<f64>,
        certified_bound: f64,
        iteration: usize,
        certificate: Certificate,
    },
    /// No point of `X` is robustly feasible.
    Infeasible {
        iteration: usize,
        evidence: InfeasibilityEvidence,
    },
    /// The budget ended before either certificate applied.
    Undecided { iterations: usize },
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Feasible { .. } => "feasible",
            Verdict::Infeasible { .. } => "infeasible",
            Verdict::Undecided { .. } => "undecided",
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, Verdict::Feasible { .. })
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, Verdict::Infeasible { .. })
    }

    pub fn point(&self) -> Option<&[f64]> {
        match self {
            Verdict::Feasible { point, .. } => Some(point),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    /// `Σ_{s≤t} θ_s f^i(x_s, u_s^i)` for every constraint.
    pub per_constraint_avg: Vec<f64>,
    /// Maximum of `per_constraint_avg`.
    pub vartheta: f64,
    pub kappa_circ: f64,
    pub kappa_bullet: f64,
    pub tau: f64,
    pub wall_ms: f64,
    /// A subgradient exceeded its declared bound during this iteration.
    pub gradient_bound_violation: bool,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub strategy: Strategy,
    pub verdict: Verdict,
    /// Per-iteration records (empty unless tracing was requested).
    pub trace: Vec<TraceRecord>,
    /// Record of the last completed iteration.
    pub last_record: Option<TraceRecord>,
    pub iterations: usize,
    pub elapsed: Duration,
    pub gradient_bound_violations: usize,
}

/// Running per-constraint averages and the trace.
pub(crate) struct Tracker {
    sums: Vec<f64>,
    t: usize,
    record: bool,
    trace: Vec<TraceRecord>,
    last: Option<TraceRecord>,
    started: Instant,
    lap: Instant,
    violations: usize,
}

impl Tracker {
    pub fn new(m: usize, record: bool) -> Self {
        let now = Instant::now();
        Tracker {
            sums: vec![0.0; m],
            t: 0,
            record,
            trace: Vec::new(),
            last: None,
            started: now,
            lap: now,
            violations: 0,
        }
    }

    /// Adds the realized values of iteration `t` and returns `ϑ_t`.
    pub fn add(&mut self, values: &[f64]) -> f64 {
        self.t += 1;
        for (s, v) in self.sums.iter_mut().zip(values) {
            *s += v;
        }
        self.vartheta()
    }

    pub fn averages(&self) -> Vec<f64> {
        let t = self.t.max(1) as f64;
        self.sums.iter().map(|s| s / t).collect()
    }

    pub fn vartheta(&self) -> f64 {
        self.averages().into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn record(&mut self, kappa_circ: f64, kappa_bullet: f64, tau: f64, violation: bool) {
        let now = Instant::now();
        let per_constraint_avg = self.averages();
        let vartheta = per_constraint_avg.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if violation {
            self.violations += 1;
        }
        let rec = TraceRecord {
            iteration: self.t,
            per_constraint_avg,
            vartheta,
            kappa_circ,
            kappa_bullet,
            tau,
            wall_ms: (now - self.lap).as_secs_f64() * 1e3,
            gradient_bound_violation: violation,
        };
        self.lap = now;
        if self.record {
            self.trace.push(rec.clone());
        }
        self.last = Some(rec);
    }

    pub fn finish(self, strategy: Strategy, verdict: Verdict) -> SolveOutcome {
        SolveOutcome {
            strategy,
            verdict,
            iterations: self.t,
            elapsed: self.started.elapsed(),
            trace: self.trace,
            last_record: self.last,
            gradient_bound_violations: self.violations,
        }
    }
}
