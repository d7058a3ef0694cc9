use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::oco::{StepMode, WeightScheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Online first-order updates for both `x` and the noises.
    Ofo,
    /// First-order `x` updates against pessimized noises.
    FoPessimization,
    /// First-order noise updates against a nominal solver for `x`.
    NominalOracle,
    /// Cutting-plane scenario generation with pessimization.
    FullPessimization,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Ofo,
        Strategy::FoPessimization,
        Strategy::NominalOracle,
        Strategy::FullPessimization,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Ofo => "ofo",
            Strategy::FoPessimization => "fo_pessimization",
            Strategy::NominalOracle => "nominal_oracle",
            Strategy::FullPessimization => "full_pessimization",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown strategy `{s}`")))
    }
}

/// How the split `τ` between the feasibility and infeasibility thresholds is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauPolicy {
    /// `τ_t = 1 − κ_t•`.
    OneMinusKappaBullet,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NominalMode {
    Feasibility,
    /// Also minimize the instance objective subject to the sampled constraints.
    Optimization,
}

/// Optional direct check of candidate points with the exact pessimizers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verification {
    Off,
    /// Check every `k`-th iteration.
    Every(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub epsilon: f64,
    pub max_iterations: usize,
    pub strategy: Strategy,
    /// `None` selects the strategy default: `1 − κ•` for OFO, `1/2` otherwise.
    pub tau_policy: Option<TauPolicy>,
    pub weight_scheme: WeightScheme,
    pub step_mode: StepMode,
    pub seed: u64,
    pub nominal_mode: NominalMode,
    /// Iteration budget of each nominal solve.
    pub nominal_budget: usize,
    /// Largest total number of scenarios kept by full pessimization.
    pub scenario_cap: usize,
    pub verification: Verification,
    /// Keep one trace record per iteration.
    pub record_trace: bool,
}

impl RunConfig {
    pub fn new(epsilon: f64) -> Self {
        RunConfig {
            epsilon,
            max_iterations: 1_000_000,
            strategy: Strategy::Ofo,
            tau_policy: None,
            weight_scheme: WeightScheme::UniformAnytime,
            step_mode: StepMode::Theoretical,
            seed: 0,
            nominal_mode: NominalMode::Feasibility,
            nominal_budget: 200_000,
            scenario_cap: 10_000,
            verification: Verification::Off,
            record_trace: false,
        }
    }

    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    pub fn with_tau(mut self, tau: TauPolicy) -> Self {
        self.tau_policy = Some(tau);
        self
    }

    pub fn with_weights(mut self, scheme: WeightScheme) -> Self {
        self.weight_scheme = scheme;
        self
    }

    pub fn with_step_mode(mut self, mode: StepMode) -> Self {
        self.step_mode = mode;
        self
    }

    pub fn with_verification(mut self, v: Verification) -> Self {
        self.verification = v;
        self
    }

    pub fn with_trace(mut self, record: bool) -> Self {
        self.record_trace = record;
        self
    }

    pub fn with_nominal_mode(mut self, mode: NominalMode) -> Self {
        self.nominal_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be positive".into()));
        }
        if let Some(TauPolicy::Fixed(t)) = self.tau_policy {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::InvalidConfig(format!("fixed tau must lie in (0,1), got {t}")));
            }
        }
        if let WeightScheme::FixedHorizon(0) = self.weight_scheme {
            return Err(Error::InvalidConfig("fixed horizon must be positive".into()));
        }
        if let Verification::Every(0) = self.verification {
            return Err(Error::InvalidConfig("verification period must be positive".into()));
        }
        if self.nominal_budget == 0 {
            return Err(Error::InvalidConfig("nominal budget must be positive".into()));
        }
        Ok(())
    }

    /// Effective τ policy of the configured strategy.
    pub fn tau(&self) -> TauPolicy {
        self.tau_policy.unwrap_or(match self.strategy {
            Strategy::Ofo => TauPolicy::OneMinusKappaBullet,
            _ => TauPolicy::Fixed(0.5),
        })
    }

    /// Fixed τ for the oracle-based strategies.
    pub(crate) fn fixed_tau(&self) -> f64 {
        match self.tau() {
            TauPolicy::Fixed(t) => t,
            TauPolicy::OneMinusKappaBullet => 0.5,
        }
    }

    pub(crate) fn verify_now(&self, t: usize) -> bool {
        matches!(self.verification, Verification::Every(k) if t.is_multiple_of(k))
    }

    /// Whether the certificate may be checked at iteration `t`.
    pub(crate) fn checkpoint(&self, t: usize) -> bool {
        match self.weight_scheme {
            WeightScheme::UniformAnytime => true,
            WeightScheme::FixedHorizon(h) => t == h,
        }
    }

    /// Last iteration of the run.
    pub(crate) fn horizon(&self) -> usize {
        match self.weight_scheme {
            WeightScheme::UniformAnytime => self.max_iterations,
            WeightScheme::FixedHorizon(h) => h.min(self.max_iterations),
        }
    }

    pub fn scheme_label(&self) -> String {
        match self.weight_scheme {
            WeightScheme::UniformAnytime => "uniform_anytime".into(),
            WeightScheme::FixedHorizon(h) => format!("fixed_horizon:{h}"),
        }
    }
}
