//! Column statistics over a results CSV.

use std::path::Path;

use anyhow::{bail, Context, Result};
use vqo_core::ising::same_energy;
use vqo_core::stats::MeanError;

use crate::schema::SUMMARY_ROW;

/// Columns treated as labels rather than measurements.
const IDENTIFIERS: &[&str] = &["run_id", "seed"];

/// Measurements where a larger value is better.
const MAXIMISED: &[&str] = &["p_gnd", "p_feas", "r_approx", "frequency"];

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSummary {
    pub metric: String,
    pub stats: MeanError,
    /// Fraction of rows attaining the best value.
    pub freq_of_best: f64,
    pub best_run: String,
}

impl MetricSummary {
    pub fn record(&self) -> Vec<String> {
        vec![
            self.metric.clone(),
            self.stats.count.to_string(),
            self.stats.mean.to_string(),
            self.stats.error().to_string(),
            self.stats.min.to_string(),
            self.stats.max.to_string(),
            self.freq_of_best.to_string(),
            self.best_run.clone(),
        ]
    }
}

pub fn summarize_file(path: &Path) -> Result<Vec<MetricSummary>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: record {}", path.display(), k + 1))?;
        if rec.get(0) == Some(SUMMARY_ROW) {
            continue;
        }
        rows.push(rec.iter().map(str::to_string).collect::<Vec<_>>());
    }
    summarize(&header, &rows)
}

/// Summarises every column whose cells all parse as numbers.
pub fn summarize(header: &[String], rows: &[Vec<String>]) -> Result<Vec<MetricSummary>> {
    if rows.is_empty() {
        bail!("no data rows to summarise");
    }
    let id_col = header.iter().position(|h| h == "run_id");
    let mut out = Vec::new();
    for (c, name) in header.iter().enumerate() {
        if IDENTIFIERS.contains(&name.as_str()) {
            continue;
        }
        let values: Option<Vec<f64>> = rows
            .iter()
            .map(|r| r.get(c).and_then(|v| v.trim().parse::<f64>().ok()))
            .collect();
        let Some(values) = values else { continue };
        let stats = MeanError::from_samples(&values).expect("non-empty");
        let best = if MAXIMISED.contains(&name.as_str()) {
            stats.max
        } else {
            stats.min
        };
        let first = values
            .iter()
            .position(|&v| same_energy(v, best))
            .expect("best is attained");
        let hits = values.iter().filter(|&&v| same_energy(v, best)).count();
        out.push(MetricSummary {
            metric: name.clone(),
            stats,
            freq_of_best: hits as f64 / values.len() as f64,
            best_run: id_col.map_or_else(|| first.to_string(), |i| rows[first][i].clone()),
        });
    }
    if out.is_empty() {
        bail!("no numeric columns found");
    }
    Ok(out)
}
