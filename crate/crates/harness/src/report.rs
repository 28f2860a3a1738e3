//! CSV and plain-text summaries of experiment cells.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use stockblend_core::FitnessMode;

use crate::experiment::{CellKey, CellSummary};
use crate::{HarnessError, Result};

/// One CSV line. Empty fields stand for cells without a successful run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub instance: String,
    pub mode: FitnessMode,
    pub alpha_cu: Option<f64>,
    pub alpha_fl: Option<f64>,
    pub mean: Option<f64>,
    pub best: Option<f64>,
    pub worst: Option<f64>,
    pub success_rate: f64,
}

impl From<&CellSummary> for CsvRow {
    fn from(s: &CellSummary) -> Self {
        CsvRow {
            instance: s.key.instance.clone(),
            mode: s.key.mode,
            alpha_cu: s.key.alpha_cu,
            alpha_fl: s.key.alpha_fl,
            mean: s.mean,
            best: s.best,
            worst: s.worst,
            success_rate: s.success_rate,
        }
    }
}

pub fn csv_string(summaries: &[CellSummary]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for s in summaries {
        w.serialize(CsvRow::from(s))
            .map_err(|e| HarnessError::Spec(format!("cannot write CSV: {e}")))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| HarnessError::Spec(format!("cannot write CSV: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

pub fn write_csv(summaries: &[CellSummary], path: &Path) -> Result<()> {
    fs::write(path, csv_string(summaries)?).map_err(|e| HarnessError::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| HarnessError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    r.deserialize()
        .collect::<std::result::Result<Vec<CsvRow>, _>>()
        .map_err(|e| HarnessError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
}

fn column_label(key: &CellKey) -> String {
    let a = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    match key.mode {
        FitnessMode::Deterministic => "Deterministic".to_string(),
        FitnessMode::ChanceCu => format!("Cu a={}", a(key.alpha_cu)),
        FitnessMode::ChanceFl => format!("Fl a={}", a(key.alpha_fl)),
        FitnessMode::ChanceBoth => format!("Cu {} / Fl {}", a(key.alpha_cu), a(key.alpha_fl)),
    }
}

fn number(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.2}"))
        .unwrap_or_else(|| "-".to_string())
}

fn render_block(out: &mut String, title: &str, cells: &[&CellSummary]) {
    if cells.is_empty() {
        return;
    }
    let mut header = vec![String::new()];
    header.extend(cells.iter().map(|c| column_label(&c.key)));
    let rows: Vec<Vec<String>> = vec![
        std::iter::once("Mean".to_string())
            .chain(cells.iter().map(|c| number(c.mean)))
            .collect(),
        std::iter::once("Best".to_string())
            .chain(cells.iter().map(|c| number(c.best)))
            .collect(),
        std::iter::once("Worst".to_string())
            .chain(cells.iter().map(|c| number(c.worst)))
            .collect(),
        std::iter::once("Success rate".to_string())
            .chain(
                cells
                    .iter()
                    .map(|c| format!("{:.0}%", 100.0 * c.success_rate)),
            )
            .collect(),
    ];
    let widths: Vec<usize> = (0..header.len())
        .map(|i| {
            rows.iter()
                .chain([&header])
                .map(|r| r[i].len())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |r: &[String]| {
        let cols: Vec<String> = r
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (s, &w))| {
                if i == 0 {
                    format!("{s:<w$}")
                } else {
                    format!("{s:>w$}")
                }
            })
            .collect();
        cols.join(" | ").trim_end().to_string() + "\n"
    };
    out.push_str(title);
    out.push('\n');
    out.push_str(&line(&header));
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    out.push_str(&rule.join("-+-"));
    out.push('\n');
    for r in &rows {
        out.push_str(&line(r));
    }
    out.push('\n');
}

/// Per instance: one table for the deterministic and single-constraint
/// cells, one for the combined cells.
pub fn render_table(summaries: &[CellSummary]) -> String {
    let mut instances: Vec<&str> = Vec::new();
    for s in summaries {
        if !instances.contains(&s.key.instance.as_str()) {
            instances.push(&s.key.instance);
        }
    }
    let mut out = String::new();
    for name in instances {
        let of = |both: bool| -> Vec<&CellSummary> {
            summaries
                .iter()
                .filter(|s| {
                    s.key.instance == name && (s.key.mode == FitnessMode::ChanceBoth) == both
                })
                .collect()
        };
        render_block(&mut out, &format!("{name}: single constraints"), &of(false));
        render_block(
            &mut out,
            &format!("{name}: combined constraints"),
            &of(true),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(
        mode: FitnessMode,
        alpha_cu: Option<f64>,
        alpha_fl: Option<f64>,
        mean: Option<f64>,
    ) -> CellSummary {
        CellSummary {
            key: CellKey {
                instance: "inst".into(),
                mode,
                alpha_cu,
                alpha_fl,
            },
            runs: 4,
            successes: if mean.is_some() { 2 } else { 0 },
            mean,
            best: mean.map(|m| m + 1.0),
            worst: mean.map(|m| m - 1.0),
            success_rate: if mean.is_some() { 0.5 } else { 0.0 },
        }
    }

    #[test]
    fn csv_round_trip_with_empty_fields() {
        let cells = vec![
            cell(FitnessMode::Deterministic, None, None, Some(1.5e8)),
            cell(FitnessMode::ChanceBoth, Some(0.999), Some(0.9), None),
        ];
        let text = csv_string(&cells).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "instance,mode,alpha_cu,alpha_fl,mean,best,worst,success_rate"
        );
        assert!(text.contains("inst,both,0.999,0.9,,,,0.0"), "{text}");
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        fs::write(&path, &text).unwrap();
        let rows = read_csv(&path).unwrap();
        assert_eq!(rows, cells.iter().map(CsvRow::from).collect::<Vec<_>>());
    }

    #[test]
    fn table_layout() {
        let cells = vec![
            cell(FitnessMode::Deterministic, None, None, Some(100.0)),
            cell(FitnessMode::ChanceCu, Some(0.9), None, None),
            cell(FitnessMode::ChanceBoth, Some(0.9), Some(0.99), Some(50.0)),
        ];
        let t = render_table(&cells);
        assert!(t.contains("inst: single constraints"));
        assert!(t.contains("inst: combined constraints"));
        assert!(t.contains("Cu a=0.9"));
        assert!(t.contains("Cu 0.9 / Fl 0.99"));
        let mean_line = t.lines().find(|l| l.starts_with("Mean")).unwrap();
        assert!(
            mean_line.contains("100.00") && mean_line.contains('-'),
            "{mean_line}"
        );
        assert!(t.contains("50%"));
    }
}
