//! Result emission: the fixed-header CSV table and the JSON run summary.
//! CSV files are byte-identical across reruns of the same seed; the JSON
//! summary carries the config echo, version, and wall clock.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use jigsaw::engine::{DynamicsParams, Theta};
use jigsaw::montecarlo::McEstimate;
use jigsaw::topology::Topology;

pub const CSV_HEADER: &str = "topology,sigma,tau,theta,rule,p,trials,successes,p_hat,ci_low,ci_high,tf_median,max_exams_per_vertex,seed";

/// One estimate row keyed by its configuration.
#[derive(Clone, Debug, Serialize)]
pub struct ResultRow {
    pub topology: String,
    pub sigma: u32,
    pub tau: u32,
    pub theta: String,
    pub rule: String,
    pub p: f64,
    pub trials: u32,
    pub successes: u32,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub tf_median: f64,
    pub max_exams_per_vertex: u32,
    pub seed: u64,
}

impl ResultRow {
    pub fn new(
        topology: &Topology,
        params: DynamicsParams,
        p: f64,
        seed: u64,
        est: &McEstimate,
    ) -> Self {
        ResultRow {
            topology: topology.to_string(),
            sigma: params.sigma,
            tau: params.tau,
            theta: match params.theta {
                Theta::Finite(t) => t.to_string(),
                Theta::Infinite => "inf".into(),
            },
            rule: params.rule.to_string(),
            p,
            trials: est.trials,
            successes: est.successes,
            p_hat: est.p_hat,
            ci_low: est.ci_low,
            ci_high: est.ci_high,
            tf_median: est.tf_median,
            max_exams_per_vertex: est.max_exams_per_vertex,
            seed,
        }
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            csv_field(&self.topology),
            self.sigma,
            self.tau,
            self.theta,
            self.rule,
            self.p,
            self.trials,
            self.successes,
            self.p_hat,
            self.ci_low,
            self.ci_high,
            self.tf_median,
            self.max_exams_per_vertex,
            self.seed
        )
    }
}

/// Quotes a field when it contains CSV metacharacters (topology specs
/// carry commas).
fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Writes the header plus one line per row.
pub fn write_results<W: Write>(mut w: W, rows: &[ResultRow]) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for row in rows {
        writeln!(w, "{}", row.csv_line())?;
    }
    Ok(())
}

pub fn write_results_file(path: &Path, rows: &[ResultRow]) -> std::io::Result<()> {
    let mut buf = Vec::new();
    write_results(&mut buf, rows)?;
    std::fs::write(path, buf)
}

/// JSON run summary: effective config echo, artifact version, wall clock,
/// and whatever estimates the subcommand produced.
#[derive(Serialize)]
pub struct Summary<'a, T: Serialize> {
    pub version: &'a str,
    pub config: &'a crate::config::ExperimentConfig,
    pub wall_clock_secs: f64,
    pub estimates: T,
}

pub fn write_summary_file<T: Serialize>(path: &Path, summary: &Summary<'_, T>) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(summary).expect("summary serializes");
    std::fs::write(path, text)
}
