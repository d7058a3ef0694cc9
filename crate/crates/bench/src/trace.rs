//! Per-iteration trace CSV.

use std::io::Write;

use robust_ofo::framework::{RunConfig, SolveOutcome, TraceRecord};
use robust_ofo::oco::WeightScheme;

/// Columns before the per-constraint averages.
pub const LEADING_COLUMNS: [&str; 6] = ["iteration", "theta_t_scheme", "vartheta", "kappa_circ", "kappa_bullet", "tau"];

pub fn header(constraints: usize) -> Vec<String> {
    let mut cols: Vec<String> = LEADING_COLUMNS.iter().map(|s| s.to_string()).collect();
    cols.extend((0..constraints).map(|i| format!("per_constraint_avg_{i}")));
    cols.push("wall_ms".into());
    cols
}

/// Weight `θ_t` of iteration `t` under the configured scheme.
pub fn theta(scheme: WeightScheme, t: usize) -> f64 {
    match scheme {
        WeightScheme::UniformAnytime => 1.0 / t.max(1) as f64,
        WeightScheme::FixedHorizon(h) => 1.0 / h as f64,
    }
}

fn row(record: &TraceRecord, scheme: WeightScheme) -> Vec<String> {
    let mut out = vec![
        record.iteration.to_string(),
        theta(scheme, record.iteration).to_string(),
        record.vartheta.to_string(),
        record.kappa_circ.to_string(),
        record.kappa_bullet.to_string(),
        record.tau.to_string(),
    ];
    out.extend(record.per_constraint_avg.iter().map(f64::to_string));
    out.push(record.wall_ms.to_string());
    out
}

/// Writes `# <comment>` followed by the CSV header and one row per iteration.
pub fn write_trace<W: Write>(
    mut out: W,
    comment: &str,
    config: &RunConfig,
    outcome: &SolveOutcome,
    constraints: usize,
) -> csv::Result<()> {
    writeln!(out, "# {comment}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(constraints))?;
    for record in &outcome.trace {
        w.write_record(row(record, config.weight_scheme))?;
    }
    w.flush()?;
    Ok(())
}

/// Reader for trace files that skips the comment line.
pub fn reader<R: std::io::Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_matches_scheme() {
        assert_eq!(theta(WeightScheme::UniformAnytime, 4), 0.25);
        assert_eq!(theta(WeightScheme::FixedHorizon(8), 3), 0.125);
        assert_eq!(header(2).len(), LEADING_COLUMNS.len() + 3);
    }
}
