use std::fs::File;
use std::io::BufWriter;

use anyhow::Context;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use robust_ofo::framework::{solve as run_solver, Verdict};
use robust_ofo::io::InstanceFile;
use robust_ofo::portfolio::{default_level, deviation_ratio, generate_instance, PortfolioParams};

use crate::bench::{expand_instances, run_bench, BenchOptions};
use crate::cli::{BenchArgs, GenPortfolioArgs, SolveArgs};
use crate::trace::write_trace;
use crate::{exit_code, UsageError, EXIT_FEASIBLE, EXIT_SOFTWARE};

/// Random unit directions used for the scaling diagnostic of `gen-portfolio`.
const SCALING_SAMPLES: usize = 1000;

pub fn solve(args: &SolveArgs) -> anyhow::Result<i32> {
    let path = &args.instance;
    let file = InstanceFile::read(path).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
    let instance = file.to_instance().map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
    let config = args
        .solver
        .run_config(args.strategy, &instance)
        .with_trace(args.trace.is_some());
    config.validate().map_err(|e| UsageError(e.to_string()))?;
    let outcome = run_solver(&instance, &config)?;

    println!("strategy:    {}", args.strategy);
    println!("verdict:     {}", outcome.verdict.label());
    match &outcome.verdict {
        Verdict::Feasible { certified_bound, iteration, certificate, .. } => {
            println!("bound:       {certified_bound:.6e} (certificate {certificate:?} at iteration {iteration})");
        }
        Verdict::Infeasible { iteration, evidence } => {
            println!(
                "evidence:    vartheta {:.6e} > threshold {:.6e} at iteration {iteration}",
                evidence.vartheta, evidence.threshold
            );
            if let Some(lb) = evidence.nominal_lower_bound {
                println!("             nominal lower bound {lb:.6e} > 0");
            }
        }
        Verdict::Undecided { .. } => {}
    }
    println!("iterations:  {}", outcome.iterations);
    println!("time:        {:.3} s", outcome.elapsed.as_secs_f64());
    if outcome.gradient_bound_violations > 0 {
        println!("warning:     {} subgradients exceeded their declared bounds", outcome.gradient_bound_violations);
    }

    if let Some(trace_path) = &args.trace {
        let comment = format!(
            "robust-ofo trace instance={} strategy={} {}",
            path.display(),
            args.strategy,
            args.solver.describe()
        );
        let w = BufWriter::new(File::create(trace_path).with_context(|| format!("creating {}", trace_path.display()))?);
        write_trace(w, &comment, &config, &outcome, instance.num_constraints())?;
    }
    Ok(exit_code(&outcome.verdict))
}

pub fn gen_portfolio(args: &GenPortfolioArgs) -> anyhow::Result<i32> {
    let params = PortfolioParams::new(args.n, args.m, args.lambda, args.seed)
        .with_samples(args.p)
        .with_alpha(args.alpha);
    params.validate().map_err(|e| UsageError(e.to_string()))?;
    if !(args.level_fraction > 0.0 && args.level_fraction <= 1.0) {
        return Err(UsageError(format!("level fraction must lie in (0,1], got {}", args.level_fraction)).into());
    }
    let pi = generate_instance(&params)?;
    let level = default_level(&pi, args.level_fraction)?;
    let file = InstanceFile::from_portfolio(&pi, level)?;
    file.write(&args.out).with_context(|| format!("writing {}", args.out.display()))?;

    let mut rng = ChaCha20Rng::seed_from_u64(args.seed);
    rng.set_stream(u64::MAX);
    let k = pi.k();
    let mut worst: f64 = 0.0;
    for _ in 0..SCALING_SAMPLES {
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        let u: Vec<f64> = raw.iter().map(|v| v / norm).collect();
        worst = worst.max(deviation_ratio(&pi, &u));
    }
    println!("wrote {} (n = {}, m = {}, K = {k}, seed = {})", args.out.display(), pi.n(), pi.m(), args.seed);
    println!("level: {level:.6}");
    println!("max column deviation / radius over {SCALING_SAMPLES} unit directions: {worst:.6}");
    Ok(EXIT_FEASIBLE)
}

pub fn bench(args: &BenchArgs) -> anyhow::Result<i32> {
    let opts = BenchOptions {
        instances: expand_instances(&args.instances)?,
        strategies: args.strategies.clone(),
        solver: args.solver.clone(),
        repeats: args.repeats,
        out_dir: args.out.clone(),
        traces: !args.no_traces,
    };
    let report = run_bench(&opts)?;
    println!("{:<20} {:>6} {:>16} {:>14} {:>14}", "strategy", "runs", "mean_iterations", "mean_seconds", "s/iteration");
    for m in report.means() {
        println!(
            "{:<20} {:>6} {:>16.3} {:>14.4} {:>14.6}",
            m.strategy.name(),
            m.runs,
            m.mean_iterations,
            m.mean_seconds,
            m.mean_seconds_per_iteration
        );
    }
    let failed = report.rows.iter().filter(|r| r.failed()).count();
    if failed > 0 {
        eprintln!("{failed} of {} runs failed; see summary.csv", report.rows.len());
    }
    println!("results in {}", opts.out_dir.display());
    Ok(if report.all_failed() { EXIT_SOFTWARE } else { EXIT_FEASIBLE })
}
