//! Strategy comparison over many instances.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use rayon::prelude::*;

use robust_ofo::framework::{solve, Strategy};
use robust_ofo::io::InstanceFile;

use crate::cli::SolverArgs;
use crate::trace::write_trace;
use crate::UsageError;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "ROBUST_OFO_THREADS";

pub const SUMMARY_HEADER: [&str; 6] = ["strategy", "instance", "verdict", "iterations", "seconds", "seconds_per_iteration"];

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub instances: Vec<PathBuf>,
    pub strategies: Vec<Strategy>,
    pub solver: SolverArgs,
    pub repeats: usize,
    pub out_dir: PathBuf,
    pub traces: bool,
}

/// One (strategy, instance, repeat) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub strategy: Strategy,
    pub instance: String,
    pub n: usize,
    pub repeat: usize,
    /// Verdict label, or `error`.
    pub verdict: String,
    pub iterations: usize,
    pub seconds: f64,
    pub error: Option<String>,
}

impl RunRow {
    pub fn seconds_per_iteration(&self) -> f64 {
        self.seconds / self.iterations.max(1) as f64
    }

    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

/// Means over the successful runs of one strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyMeans {
    pub strategy: Strategy,
    pub runs: usize,
    pub mean_iterations: f64,
    pub mean_seconds: f64,
    pub mean_seconds_per_iteration: f64,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub rows: Vec<RunRow>,
}

impl BenchReport {
    pub fn all_failed(&self) -> bool {
        self.rows.iter().all(RunRow::failed)
    }

    pub fn means(&self) -> Vec<StrategyMeans> {
        let mut order: Vec<Strategy> = Vec::new();
        for r in &self.rows {
            if !order.contains(&r.strategy) {
                order.push(r.strategy);
            }
        }
        order
            .into_iter()
            .filter_map(|s| {
                let ok: Vec<&RunRow> = self.rows.iter().filter(|r| r.strategy == s && !r.failed()).collect();
                mean_of(s, &ok)
            })
            .collect()
    }

    /// Means per problem size `n` and strategy, ordered by `n`.
    pub fn plot_data(&self) -> Vec<(usize, StrategyMeans)> {
        let mut groups: BTreeMap<(usize, usize), Vec<&RunRow>> = BTreeMap::new();
        let strategies: Vec<Strategy> = Strategy::ALL.to_vec();
        for r in self.rows.iter().filter(|r| !r.failed()) {
            let idx = strategies.iter().position(|s| *s == r.strategy).expect("known strategy");
            groups.entry((r.n, idx)).or_default().push(r);
        }
        groups
            .into_iter()
            .filter_map(|((n, idx), rows)| mean_of(strategies[idx], &rows).map(|m| (n, m)))
            .collect()
    }
}

fn mean_of(strategy: Strategy, rows: &[&RunRow]) -> Option<StrategyMeans> {
    if rows.is_empty() {
        return None;
    }
    let k = rows.len() as f64;
    Some(StrategyMeans {
        strategy,
        runs: rows.len(),
        mean_iterations: rows.iter().map(|r| r.iterations as f64).sum::<f64>() / k,
        mean_seconds: rows.iter().map(|r| r.seconds).sum::<f64>() / k,
        mean_seconds_per_iteration: rows.iter().map(|r| r.seconds_per_iteration()).sum::<f64>() / k,
    })
}

/// Expands glob patterns; plain paths are kept as given. The result is sorted
/// and deduplicated.
pub fn expand_instances(patterns: &[String]) -> anyhow::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in patterns {
        if p.contains(['*', '?', '[']) {
            let matches = glob::glob(p).map_err(|e| UsageError(format!("bad pattern `{p}`: {e}")))?;
            for m in matches {
                out.push(m.context("reading a glob match")?);
            }
        } else {
            out.push(PathBuf::from(p));
        }
    }
    out.sort();
    out.dedup();
    if out.is_empty() {
        return Err(UsageError("no instance files matched".into()).into());
    }
    Ok(out)
}

/// Worker count from [`THREADS_ENV`], defaulting to the available parallelism.
pub fn thread_count() -> anyhow::Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(UsageError(format!("{THREADS_ENV} must be a positive integer, got `{v}`")).into()),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn instance_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn run_cell(
    opts: &BenchOptions,
    file: &InstanceFile,
    name: &str,
    strategy: Strategy,
    repeat: usize,
) -> RunRow {
    let started = Instant::now();
    let mut row = RunRow {
        strategy,
        instance: name.to_string(),
        n: file.x_dim(),
        repeat,
        verdict: "error".into(),
        iterations: 0,
        seconds: 0.0,
        error: None,
    };
    let result = (|| -> anyhow::Result<()> {
        let instance = file.to_instance()?;
        let config = opts
            .solver
            .run_config(strategy, &instance)
            .with_trace(opts.traces);
        let outcome = solve(&instance, &config)?;
        row.verdict = outcome.verdict.label().into();
        row.iterations = outcome.iterations;
        row.seconds = outcome.elapsed.as_secs_f64();
        if opts.traces {
            let path = opts.out_dir.join("traces").join(format!("{name}_{strategy}_{repeat}.csv"));
            let comment = format!("robust-ofo trace instance={name} strategy={strategy} repeat={repeat} {}", opts.solver.describe());
            let w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
            write_trace(w, &comment, &config, &outcome, instance.num_constraints())?;
        }
        Ok(())
    })();
    if let Err(e) = result {
        log::error!("{strategy} on {name} (repeat {repeat}) failed: {e:#}");
        row.verdict = "error".into();
        row.seconds = started.elapsed().as_secs_f64();
        row.error = Some(format!("{e:#}"));
    }
    row
}

/// Runs every (strategy × instance × repeat) cell and writes `summary.csv`,
/// `means.csv`, `plot_data.csv` and, unless disabled, `traces/*.csv`.
pub fn run_bench(opts: &BenchOptions) -> anyhow::Result<BenchReport> {
    if opts.repeats == 0 {
        bail!(UsageError("repeats must be positive".into()));
    }
    if opts.strategies.is_empty() {
        bail!(UsageError("at least one strategy is required".into()));
    }
    let files: Vec<(String, InstanceFile)> = opts
        .instances
        .iter()
        .map(|p| {
            InstanceFile::read(p)
                .map(|f| (instance_name(p), f))
                .map_err(|e| UsageError(format!("{}: {e}", p.display())).into())
        })
        .collect::<anyhow::Result<_>>()?;
    std::fs::create_dir_all(&opts.out_dir).with_context(|| format!("creating {}", opts.out_dir.display()))?;
    if opts.traces {
        std::fs::create_dir_all(opts.out_dir.join("traces"))?;
    }

    let mut cells = Vec::new();
    for (fi, _) in files.iter().enumerate() {
        for &s in &opts.strategies {
            for r in 0..opts.repeats {
                cells.push((fi, s, r));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(thread_count()?).build()?;
    let rows: Vec<RunRow> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(fi, s, r)| run_cell(opts, &files[fi].1, &files[fi].0, s, r))
            .collect()
    });
    let report = BenchReport { rows };
    write_outputs(opts, &report)?;
    Ok(report)
}

fn write_outputs(opts: &BenchOptions, report: &BenchReport) -> anyhow::Result<()> {
    let comment = format!("# robust-ofo bench repeats={} {}\n", opts.repeats, opts.solver.describe());

    let mut summary = File::create(opts.out_dir.join("summary.csv"))?;
    summary.write_all(comment.as_bytes())?;
    let mut w = csv::Writer::from_writer(summary);
    w.write_record(SUMMARY_HEADER)?;
    for r in &report.rows {
        w.write_record([
            r.strategy.name().to_string(),
            r.instance.clone(),
            r.verdict.clone(),
            r.iterations.to_string(),
            r.seconds.to_string(),
            r.seconds_per_iteration().to_string(),
        ])?;
    }
    w.flush()?;

    let mut means = File::create(opts.out_dir.join("means.csv"))?;
    means.write_all(comment.as_bytes())?;
    let mut w = csv::Writer::from_writer(means);
    w.write_record(["strategy", "runs", "mean_iterations", "mean_seconds", "mean_seconds_per_iteration"])?;
    for m in report.means() {
        w.write_record([
            m.strategy.name().to_string(),
            m.runs.to_string(),
            m.mean_iterations.to_string(),
            m.mean_seconds.to_string(),
            m.mean_seconds_per_iteration.to_string(),
        ])?;
    }
    w.flush()?;

    let mut plot = File::create(opts.out_dir.join("plot_data.csv"))?;
    plot.write_all(comment.as_bytes())?;
    let mut w = csv::Writer::from_writer(plot);
    w.write_record(["n", "strategy", "runs", "mean_seconds", "mean_iterations", "mean_seconds_per_iteration"])?;
    for (n, m) in report.plot_data() {
        w.write_record([
            n.to_string(),
            m.strategy.name().to_string(),
            m.runs.to_string(),
            m.mean_seconds.to_string(),
            m.mean_iterations.to_string(),
            m.mean_seconds_per_iteration.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reader for the CSV outputs that skips the comment line.
pub fn reader<R: std::io::Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(strategy: Strategy, n: usize, iterations: usize, seconds: f64, failed: bool) -> RunRow {
        RunRow {
            strategy,
            instance: format!("i{n}"),
            n,
            repeat: 0,
            verdict: if failed { "error" } else { "feasible" }.into(),
            iterations,
            seconds,
            error: failed.then(|| "boom".to_string()),
        }
    }

    #[test]
    fn means_skip_failed_runs() {
        let report = BenchReport {
            rows: vec![
                row(Strategy::Ofo, 10, 100, 1.0, false),
                row(Strategy::Ofo, 20, 300, 3.0, false),
                row(Strategy::Ofo, 20, 0, 0.0, true),
                row(Strategy::NominalOracle, 10, 2, 4.0, false),
            ],
        };
        let means = report.means();
        assert_eq!(means.len(), 2);
        assert_eq!((means[0].runs, means[0].mean_iterations, means[0].mean_seconds), (2, 200.0, 2.0));
        assert_eq!(means[1].mean_seconds_per_iteration, 2.0);
        let plot = report.plot_data();
        assert_eq!(plot.iter().map(|(n, m)| (*n, m.strategy)).collect::<Vec<_>>(), [
            (10, Strategy::Ofo),
            (10, Strategy::NominalOracle),
            (20, Strategy::Ofo)
        ]);
        assert!(!report.all_failed());
    }
}
