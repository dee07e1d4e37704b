use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::ClassifierKind;

pub const COLUMNS: [&str; 7] = [
    "Model",
    "CV Mean Acc.",
    "CV STD of Acc.",
    "Exp. Mean Acc.",
    "Exp. STD of Acc.",
    "Best AUC",
    "Worst AUC",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelRow {
    pub model: String,
    pub classifier: ClassifierKind,
    pub cv_mean_acc: f64,
    pub cv_std_acc: f64,
    pub exp_mean_acc: f64,
    pub exp_std_acc: f64,
    pub best_auc: Option<f64>,
    pub worst_auc: Option<f64>,
    #[serde(default)]
    pub flags: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub train_name: String,
    pub exploration_name: String,
    pub cycles: usize,
    pub folds: usize,
    pub master_seed: u64,
    pub rows: Vec<ModelRow>,
}

impl EvalReport {
    pub fn row(&self, model: &str) -> Option<&ModelRow> {
        self.rows.iter().find(|r| r.model == model)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Text,
    Csv,
    Json,
}

fn title(r: &EvalReport) -> String {
    format!(
        "Model Performance over {} independent cycles with {}-Fold Cross-Validation",
        r.cycles, r.folds
    )
}

fn two(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.2}"))
}

fn full(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

pub fn render_report(report: &EvalReport, format: ReportFormat) -> Result<String> {
    let mut out = String::new();
    match format {
        ReportFormat::Json => {
            out = serde_json::to_string_pretty(report)?;
            out.push('\n');
        }
        ReportFormat::Text => {
            let _ = writeln!(out, "{}", title(report));
            let _ = writeln!(out, "Training Dataset: {}", report.train_name);
            let _ = writeln!(out, "Exploration Dataset: {}", report.exploration_name);
            let _ = writeln!(out, "Seed: {}", report.master_seed);
            let cells: Vec<Vec<String>> = report
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.model.clone(),
                        two(Some(r.cv_mean_acc)),
                        two(Some(r.cv_std_acc)),
                        two(Some(r.exp_mean_acc)),
                        two(Some(r.exp_std_acc)),
                        two(r.best_auc),
                        two(r.worst_auc),
                    ]
                })
                .collect();
            let widths: Vec<usize> = (0..COLUMNS.len())
                .map(|i| cells.iter().map(|c| c[i].len()).chain([COLUMNS[i].len()]).max().unwrap_or(0))
                .collect();
            let line = |cols: Vec<&str>| {
                cols.iter()
                    .zip(&widths)
                    .map(|(c, w)| format!("{c:<w$}"))
                    .collect::<Vec<_>>()
                    .join("  ")
                    .trim_end()
                    .to_string()
            };
            let _ = writeln!(out, "{}", line(COLUMNS.to_vec()));
            for row in &cells {
                let _ = writeln!(out, "{}", line(row.iter().map(String::as_str).collect()));
            }
            for r in report.rows.iter().filter(|r| !r.flags.is_empty()) {
                let _ = writeln!(out, "note: {}: {}", r.model, r.flags.join("; "));
            }
        }
        ReportFormat::Csv => {
            let _ = writeln!(out, "# {}", title(report));
            let _ = writeln!(out, "# Training Dataset: {}", report.train_name);
            let _ = writeln!(out, "# Exploration Dataset: {}", report.exploration_name);
            let _ = writeln!(out, "# master_seed: {}", report.master_seed);
            for r in &report.rows {
                let _ = writeln!(out, "# {}: {}", r.model, serde_json::to_string(&r.classifier)?);
            }
            let _ = writeln!(out, "{}", COLUMNS.join(","));
            for r in &report.rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    r.model,
                    r.cv_mean_acc,
                    r.cv_std_acc,
                    r.exp_mean_acc,
                    r.exp_std_acc,
                    full(r.best_auc),
                    full(r.worst_auc)
                );
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(rows: Vec<ModelRow>) -> EvalReport {
        EvalReport {
            train_name: "iris.csv".into(),
            exploration_name: "iris.csv".into(),
            cycles: 100,
            folds: 10,
            master_seed: 7,
            rows,
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        let text = render_report(&report(vec![]), ReportFormat::Text).unwrap();
        let last = text.lines().last().unwrap();
        assert_eq!(
            last,
            "Model  CV Mean Acc.  CV STD of Acc.  Exp. Mean Acc.  Exp. STD of Acc.  Best AUC  Worst AUC"
        );
    }

    #[test]
    fn json_round_trip() {
        let r = report(vec![ModelRow {
            model: "LDA".into(),
            classifier: ClassifierKind::Lda,
            cv_mean_acc: 0.97333,
            cv_std_acc: 0.004,
            exp_mean_acc: 0.98,
            exp_std_acc: 0.0,
            best_auc: Some(0.998),
            worst_auc: None,
            flags: vec![],
        }]);
        let json = render_report(&r, ReportFormat::Json).unwrap();
        assert_eq!(EvalReport::from_json(&json).unwrap(), r);
        let text = render_report(&r, ReportFormat::Text).unwrap();
        assert!(text.contains("LDA    0.97"));
        assert!(text.contains("n/a"));
        let csv = render_report(&r, ReportFormat::Csv).unwrap();
        assert!(csv.contains("\nLDA,0.97333,0.004,0.98,0,0.998,\n"));
    }
}
