use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use robust_ofo::framework::{ofo_horizon, NominalMode, RunConfig, Strategy, TauPolicy, Verification};
use robust_ofo::oco::{StepMode, WeightScheme};
use robust_ofo::RobustInstance;

#[derive(Debug, Parser)]
#[command(name = "robust-ofo", version, about = "Robust convex feasibility with online first-order methods")]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one instance file.
    Solve(SolveArgs),
    /// Generate a seeded portfolio instance file.
    GenPortfolio(GenPortfolioArgs),
    /// Run strategies on many instances and write summary CSVs.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StepModeArg {
    Theoretical,
    LineSearch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NominalModeArg {
    Feasibility,
    Optimization,
}

/// `auto` or a number in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauArg {
    Auto,
    Fixed(f64),
}

impl FromStr for TauArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(TauArg::Auto);
        }
        let t: f64 = s.parse().map_err(|_| format!("expected `auto` or a number, got `{s}`"))?;
        if t > 0.0 && t < 1.0 {
            Ok(TauArg::Fixed(t))
        } else {
            Err(format!("tau must lie in (0,1), got {t}"))
        }
    }
}

/// `uniform`, `fixed` (horizon from the instance constants) or `fixed:T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightsArg {
    Uniform,
    FixedAuto,
    Fixed(usize),
}

impl FromStr for WeightsArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "uniform" => Ok(WeightsArg::Uniform),
            "fixed" => Ok(WeightsArg::FixedAuto),
            _ => {
                let t = s
                    .strip_prefix("fixed:")
                    .and_then(|t| t.parse::<usize>().ok())
                    .filter(|&t| t > 0)
                    .ok_or_else(|| format!("expected `uniform`, `fixed` or `fixed:T` with T ≥ 1, got `{s}`"))?;
                Ok(WeightsArg::Fixed(t))
            }
        }
    }
}

/// Solver settings shared by `solve` and `bench`.
#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Robust feasibility tolerance ε.
    #[arg(long, default_value_t = 0.002)]
    pub epsilon: f64,
    /// Iteration budget.
    #[arg(long, default_value_t = 1_000_000)]
    pub max_iter: usize,
    /// Seed recorded in every output header.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Split τ between the certificates: `auto` or a number in (0,1).
    #[arg(long, default_value = "auto")]
    pub tau: TauArg,
    /// Weights: `uniform`, `fixed` or `fixed:T`.
    #[arg(long, default_value = "uniform")]
    pub weights: WeightsArg,
    #[arg(long, value_enum, default_value_t = StepModeArg::LineSearch)]
    pub step_mode: StepModeArg,
    /// Check candidate points with the exact pessimizers every k iterations (0 disables).
    #[arg(long, default_value_t = 1)]
    pub verify_every: usize,
    #[arg(long, value_enum, default_value_t = NominalModeArg::Feasibility)]
    pub nominal_mode: NominalModeArg,
    /// Iteration budget of each nominal solve.
    #[arg(long, default_value_t = 200_000)]
    pub nominal_budget: usize,
    /// Largest number of scenarios kept by full pessimization.
    #[arg(long, default_value_t = 10_000)]
    pub scenario_cap: usize,
}

impl SolverArgs {
    pub fn run_config(&self, strategy: Strategy, instance: &RobustInstance) -> RunConfig {
        let mut config = RunConfig::new(self.epsilon)
            .with_strategy(strategy)
            .with_max_iterations(self.max_iter)
            .with_step_mode(match self.step_mode {
                StepModeArg::Theoretical => StepMode::Theoretical,
                StepModeArg::LineSearch => StepMode::LineSearch,
            })
            .with_verification(match self.verify_every {
                0 => Verification::Off,
                k => Verification::Every(k),
            })
            .with_nominal_mode(match self.nominal_mode {
                NominalModeArg::Feasibility => NominalMode::Feasibility,
                NominalModeArg::Optimization => NominalMode::Optimization,
            })
            .with_weights(match self.weights {
                WeightsArg::Uniform => WeightScheme::UniformAnytime,
                WeightsArg::FixedAuto => WeightScheme::FixedHorizon(ofo_horizon(instance, self.epsilon)),
                WeightsArg::Fixed(t) => WeightScheme::FixedHorizon(t),
            });
        if let TauArg::Fixed(t) = self.tau {
            config = config.with_tau(TauPolicy::Fixed(t));
        }
        config.seed = self.seed;
        config.nominal_budget = self.nominal_budget;
        config.scenario_cap = self.scenario_cap;
        config
    }

    /// Header fragment describing the settings.
    pub fn describe(&self) -> String {
        format!(
            "seed={} epsilon={} max_iter={} tau={} weights={} step_mode={} verify_every={} nominal_budget={}",
            self.seed,
            self.epsilon,
            self.max_iter,
            match self.tau {
                TauArg::Auto => "auto".to_string(),
                TauArg::Fixed(t) => t.to_string(),
            },
            match self.weights {
                WeightsArg::Uniform => "uniform".to_string(),
                WeightsArg::FixedAuto => "fixed".to_string(),
                WeightsArg::Fixed(t) => format!("fixed:{t}"),
            },
            match self.step_mode {
                StepModeArg::Theoretical => "theoretical",
                StepModeArg::LineSearch => "line_search",
            },
            self.verify_every,
            self.nominal_budget,
        )
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Instance file (JSON).
    pub instance: PathBuf,
    #[arg(long, default_value = "ofo", value_parser = parse_strategy)]
    pub strategy: Strategy,
    /// Write the per-iteration trace CSV here.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct GenPortfolioArgs {
    /// Assets.
    #[arg(long)]
    pub n: usize,
    /// Factors.
    #[arg(long)]
    pub m: usize,
    /// Return observations.
    #[arg(long, default_value_t = 90)]
    pub p: usize,
    #[arg(long, default_value_t = 0.95)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Objective level as a fraction of the gap between the robust optimum and
    /// the uniform portfolio.
    #[arg(long, default_value_t = 0.25)]
    pub level_fraction: f64,
    /// Output instance file.
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Instance files or glob patterns.
    #[arg(required = true)]
    pub instances: Vec<String>,
    /// Comma-separated strategies.
    #[arg(
        long,
        value_delimiter = ',',
        value_parser = parse_strategy,
        default_value = "ofo,fo_pessimization,nominal_oracle,full_pessimization"
    )]
    pub strategies: Vec<Strategy>,
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    /// Output directory.
    #[arg(long, default_value = "bench_out")]
    pub out: PathBuf,
    /// Skip the per-run trace files.
    #[arg(long)]
    pub no_traces: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse::<Strategy>().map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_and_weights_parse() {
        assert_eq!("auto".parse::<TauArg>(), Ok(TauArg::Auto));
        assert_eq!("0.25".parse::<TauArg>(), Ok(TauArg::Fixed(0.25)));
        assert!("1".parse::<TauArg>().is_err());
        assert!("x".parse::<TauArg>().is_err());
        assert_eq!("uniform".parse::<WeightsArg>(), Ok(WeightsArg::Uniform));
        assert_eq!("fixed".parse::<WeightsArg>(), Ok(WeightsArg::FixedAuto));
        assert_eq!("fixed:40".parse::<WeightsArg>(), Ok(WeightsArg::Fixed(40)));
        assert!("fixed:0".parse::<WeightsArg>().is_err());
    }

    #[test]
    fn strategies_default_to_all_four() {
        let cli = Cli::try_parse_from(["robust-ofo", "bench", "a.json"]).unwrap();
        let Command::Bench(args) = cli.command else { panic!("bench expected") };
        assert_eq!(args.strategies, Strategy::ALL.to_vec());
        assert_eq!(args.solver.step_mode, StepModeArg::LineSearch);
    }
}
