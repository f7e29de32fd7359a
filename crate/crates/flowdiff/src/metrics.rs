//! Flat metric records with a fixed field set.

use std::fmt::Write as _;

use flowdiff_core::{ClusterMetrics, PipelineOutcome};
use serde::Serialize;

/// Field names in output order.
pub const FIELDS: [&str; 10] =
    ["precision", "recall", "f1", "jaccard", "conductance", "delta", "p", "eps", "pushes", "touched"];

/// One run. Fields that need ground truth (or a solve) are `None` when it is
/// not available; they print as `null` in JSON and `NA` in TSV.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MetricsRecord {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub jaccard: Option<f64>,
    pub conductance: Option<f64>,
    pub delta: Option<f64>,
    pub p: Option<f64>,
    pub eps: Option<f64>,
    pub pushes: Option<u64>,
    pub touched: Option<usize>,
}

impl MetricsRecord {
    /// Solver fields from a pipeline run; truth fields are left empty.
    pub fn from_outcome(outcome: &PipelineOutcome, p: f64, eps: f64) -> Self {
        Self {
            conductance: Some(outcome.sweep.best_conductance),
            delta: Some(outcome.delta),
            p: Some(p),
            eps: Some(eps),
            pushes: Some(outcome.solution.pushes),
            touched: Some(outcome.solution.touched_count()),
            ..Self::default()
        }
    }

    pub fn with_truth(mut self, m: &ClusterMetrics) -> Self {
        self.precision = Some(m.precision);
        self.recall = Some(m.recall);
        self.f1 = Some(m.f1);
        self.jaccard = Some(m.jaccard);
        self.conductance = Some(m.conductance);
        self
    }

    /// Values in [`FIELDS`] order, `NA` for missing ones.
    pub fn tsv_values(&self) -> Vec<String> {
        fn f(v: Option<f64>) -> String {
            v.map_or_else(|| "NA".to_string(), |x| x.to_string())
        }
        fn u<T: ToString>(v: Option<T>) -> String {
            v.map_or_else(|| "NA".to_string(), |x| x.to_string())
        }
        vec![
            f(self.precision),
            f(self.recall),
            f(self.f1),
            f(self.jaccard),
            f(self.conductance),
            f(self.delta),
            f(self.p),
            f(self.eps),
            u(self.pushes),
            u(self.touched),
        ]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("metrics serialize")
    }

    /// Header line plus one row.
    pub fn to_tsv(&self) -> String {
        let mut out = FIELDS.join("\t");
        let _ = writeln!(out);
        let _ = writeln!(out, "{}", self.tsv_values().join("\t"));
        out
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Tsv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Tsv => "tsv",
        }
    }

    pub fn render(self, record: &MetricsRecord) -> String {
        match self {
            Format::Json => record.to_json() + "\n",
            Format::Tsv => record.to_tsv(),
        }
    }
}
