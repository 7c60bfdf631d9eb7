//! Benchmark report serialization and the strategy-comparison CSV.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::pareto::{on_frontier_flags, ParetoPoint};
use super::EvalError;
use crate::ensemble::EnsembleDecision;
use crate::gateway::TokenUsage;

/// One item × repeat execution, with full member-level detail inside the
/// decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub item_id: String,
    pub repeat_index: usize,
    pub decision: EnsembleDecision,
    pub correct: bool,
    pub cost_usd: f64,
    pub usage_total: TokenUsage,
}

/// The full result of a benchmark run. Field order here is the JSON key
/// order; `generated_at` is the only wall-clock-dependent field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub strategy: String,
    pub dataset: String,
    pub per_repeat_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub total_cost_usd: f64,
    pub preprocessing_cost_usd: f64,
    pub records: Vec<RunRecord>,
    pub config: serde_json::Value,
    pub generated_at: String,
}

/// Writes a report as pretty-printed JSON.
pub fn write_report(report: &BenchmarkReport, path: &Path) -> Result<(), EvalError> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, report).map_err(|e| EvalError::Parse(e.to_string()))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn load_report(path: &Path) -> Result<BenchmarkReport, EvalError> {
    let file = File::open(path)?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| EvalError::Parse(e.to_string()))
}

/// The strategy-level numbers that feed cross-run comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategySummary {
    pub label: String,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub total_cost_usd: f64,
}

impl StrategySummary {
    pub fn from_report(report: &BenchmarkReport) -> Self {
        StrategySummary {
            label: report.strategy.clone(),
            mean_accuracy: report.mean_accuracy,
            std_accuracy: report.std_accuracy,
            total_cost_usd: report.total_cost_usd,
        }
    }

    pub fn pareto_point(&self) -> ParetoPoint {
        ParetoPoint::new(self.label.clone(), self.total_cost_usd, self.mean_accuracy)
    }
}

/// Writes one CSV row per strategy: label, mean_accuracy, std_accuracy,
/// total_cost_usd, on_frontier.
pub fn write_comparison_csv(
    summaries: &[StrategySummary],
    path: &Path,
) -> Result<(), EvalError> {
    let points: Vec<ParetoPoint> = summaries.iter().map(|s| s.pareto_point()).collect();
    let flags = on_frontier_flags(&points)?;

    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "label",
        "mean_accuracy",
        "std_accuracy",
        "total_cost_usd",
        "on_frontier",
    ])
    .map_err(|e| EvalError::Parse(e.to_string()))?;
    for (summary, on_frontier) in summaries.iter().zip(&flags) {
        w.write_record([
            summary.label.as_str(),
            &summary.mean_accuracy.to_string(),
            &summary.std_accuracy.to_string(),
            &summary.total_cost_usd.to_string(),
            if *on_frontier { "true" } else { "false" },
        ])
        .map_err(|e| EvalError::Parse(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
