use std::fs;

use serde::{Deserialize, Serialize};

use super::pipeline::{save_json, GridResults, MlResults, Paths};
use super::ExperimentError;
use crate::metrics::{MetricsRow, METRIC_HEADERS};

pub const REPORT_HEADERS: [&str; 4] = ["Model", "DK Type", "DK source", "N_ex"];

const AVERAGE_LABEL: &str = "Avg.";
const NOT_APPLICABLE: &str = "-";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    Ml,
    Baseline,
    MlAverage,
    Prompt,
    PromptAverage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: String,
    pub dk_type: String,
    pub dk_source: String,
    pub n_ex: Option<usize>,
    pub kind: ReportKind,
    pub metrics: MetricsRow,
    /// Replies that needed the fallback label, for prompt rows.
    pub unparseable: Option<usize>,
}

impl ReportRow {
    fn cells(&self, fmt: impl Fn(f64) -> String) -> Vec<String> {
        let mut cells = vec![
            self.model.clone(),
            self.dk_type.clone(),
            self.dk_source.clone(),
            self.n_ex.map_or(NOT_APPLICABLE.to_string(), |n| n.to_string()),
        ];
        cells.extend(self.metrics.values().iter().map(|&v| fmt(v)));
        cells
    }
}

/// The results table: models, baselines and their average, then the prompt
/// variants and their average for each example count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub model_name: String,
    pub rows: Vec<ReportRow>,
}

fn headers() -> Vec<&'static str> {
    REPORT_HEADERS.iter().chain(METRIC_HEADERS.iter()).copied().collect()
}

fn ml_row(model: &str, kind: ReportKind, metrics: MetricsRow) -> ReportRow {
    ReportRow {
        model: model.to_string(),
        dk_type: NOT_APPLICABLE.into(),
        dk_source: NOT_APPLICABLE.into(),
        n_ex: None,
        kind,
        metrics,
        unparseable: None,
    }
}

/// Averages cover the tuned models and the prompt variants; the trivial
/// baselines are excluded.
pub fn build_report(ml: &MlResults, grid: &GridResults, n_ex_grid: &[usize]) -> ReportTable {
    let mut rows = Vec::new();
    let models: Vec<MetricsRow> = ml.rows.iter().filter(|r| r.family.is_some()).map(|r| r.metrics).collect();
    for r in ml.rows.iter().filter(|r| r.family.is_some()) {
        rows.push(ml_row(&r.label, ReportKind::Ml, r.metrics));
    }
    for r in ml.rows.iter().filter(|r| r.baseline.is_some()) {
        rows.push(ml_row(&r.label, ReportKind::Baseline, r.metrics));
    }
    if let Some(avg) = MetricsRow::mean(&models) {
        rows.push(ml_row(AVERAGE_LABEL, ReportKind::MlAverage, avg));
    }
    for &n_ex in n_ex_grid {
        let mut cells: Vec<_> = grid.cells.iter().filter(|c| c.n_ex == n_ex).collect();
        cells.sort_by_key(|c| c.prompt_index);
        for c in &cells {
            rows.push(ReportRow {
                model: format!("prompt-{}", c.prompt_index),
                dk_type: c.slot.kind.label().to_string(),
                dk_source: c.slot.source_label().to_string(),
                n_ex: Some(n_ex),
                kind: ReportKind::Prompt,
                metrics: c.metrics,
                unparseable: Some(c.unparseable),
            });
        }
        let metrics: Vec<MetricsRow> = cells.iter().map(|c| c.metrics).collect();
        if let Some(avg) = MetricsRow::mean(&metrics) {
            rows.push(ReportRow {
                model: AVERAGE_LABEL.into(),
                dk_type: NOT_APPLICABLE.into(),
                dk_source: NOT_APPLICABLE.into(),
                n_ex: Some(n_ex),
                kind: ReportKind::PromptAverage,
                metrics: avg,
                unparseable: Some(cells.iter().map(|c| c.unparseable).sum()),
            });
        }
    }
    ReportTable { model_name: grid.model_name.clone(), rows }
}

impl ReportTable {
    /// CSV with full-precision values.
    pub fn to_csv(&self) -> Result<String, ExperimentError> {
        let csv_err = |e: csv::Error| ExperimentError::Decode { path: "report.csv".into(), message: e.to_string() };
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(headers()).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.cells(|v| v.to_string())).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| csv_err(e.into_error().into()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    /// Markdown table with four decimals.
    pub fn to_markdown(&self) -> String {
        let headers = headers();
        let mut out = format!("| {} |\n", headers.join(" | "));
        out.push_str(&format!("|{}\n", "---|".repeat(headers.len())));
        for row in &self.rows {
            out.push_str(&format!("| {} |\n", row.cells(|v| format!("{v:.4}")).join(" | ")));
        }
        out
    }

    pub fn save(&self, paths: &Paths) -> Result<(), ExperimentError> {
        save_json(&paths.report("json"), self)?;
        for (ext, text) in [("csv", self.to_csv()?), ("md", self.to_markdown())] {
            let path = paths.report(ext);
            fs::write(&path, text).map_err(|source| ExperimentError::Io { path, source })?;
        }
        Ok(())
    }

    pub fn rows_of(&self, kind: ReportKind) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(move |r| r.kind == kind)
    }
}
