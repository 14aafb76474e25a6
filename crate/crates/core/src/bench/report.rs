use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{welch_t_test, TrialReport};
use crate::data::Setting;
use crate::error::{Error, Result};
use crate::model::ModelKind;
use crate::train::mean_std;

/// All final trials of one (dataset, setting, model) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub dataset: String,
    pub setting: Setting,
    pub model: ModelKind,
    pub trials: Vec<TrialReport>,
}

impl CellRecord {
    pub fn accuracies(&self) -> Vec<f64> {
        self.trials.iter().map(|t| t.test_acc).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub dataset: String,
    pub setting: Setting,
    pub model: ModelKind,
    pub trials: usize,
    pub mean: f64,
    /// Sample standard deviation over the same trials as `mean`.
    pub std: f64,
    pub counterpart: Option<ModelKind>,
    /// Welch test against the counterpart's trials in the same run.
    pub p_value: Option<f64>,
    pub beats_counterpart: Option<bool>,
}

impl SummaryRow {
    pub fn significant(&self) -> bool {
        self.p_value.is_some_and(|p| p < 0.05)
    }
}

pub fn summarize(cells: &[CellRecord]) -> Result<Vec<SummaryRow>> {
    let mut rows = Vec::with_capacity(cells.len());
    for cell in cells {
        if cell.trials.is_empty() {
            return Err(Error::Contract(format!(
                "{}/{}/{} has no trials",
                cell.dataset, cell.setting, cell.model
            )));
        }
        let acc = cell.accuracies();
        let (mean, std) = mean_std(&acc);
        let counterpart = cell.model.counterpart();
        let other = counterpart.and_then(|m| {
            cells
                .iter()
                .find(|c| c.model == m && c.dataset == cell.dataset && c.setting == cell.setting)
        });
        let (p_value, beats) = match other {
            Some(o) => {
                let oa = o.accuracies();
                let p = if acc.len() >= 2 && oa.len() >= 2 {
                    Some(welch_t_test(&acc, &oa)?)
                } else {
                    None
                };
                (p, Some(mean > mean_std(&oa).0))
            }
            None => (None, None),
        };
        rows.push(SummaryRow {
            dataset: cell.dataset.clone(),
            setting: cell.setting,
            model: cell.model,
            trials: acc.len(),
            mean,
            std,
            counterpart,
            p_value,
            beats_counterpart: beats,
        });
    }
    Ok(rows)
}

pub const SUMMARY_CSV: &str = "summary.csv";
pub const SUMMARY_MD: &str = "summary.md";

/// Writes `summary.csv` and `summary.md` into `dir`.
///
/// The markdown has one table per setting, models as rows and datasets as
/// columns. The best mean of a column is bold, a generative model whose mean
/// exceeds its discriminative counterpart's is underlined, and `*` marks
/// p < 0.05 against that counterpart.
pub fn emit_report(rows: &[SummaryRow], dir: impl AsRef<Path>, protocol: &str) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut csv = String::from("dataset,setting,model,trials,mean,std,counterpart,p_value,beats_counterpart\n");
    for r in rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            r.dataset,
            r.setting,
            r.model,
            r.trials,
            r.mean,
            r.std,
            r.counterpart.map(|m| m.name()).unwrap_or(""),
            r.p_value.map(|p| p.to_string()).unwrap_or_default(),
            r.beats_counterpart.map(|b| b.to_string()).unwrap_or_default()
        );
    }
    let path = dir.join(SUMMARY_CSV);
    std::fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;

    let mut md = format!("# Node classification accuracy\n\n{protocol}\n\n");
    let mut datasets: Vec<&str> = Vec::new();
    for r in rows {
        if !datasets.contains(&r.dataset.as_str()) {
            datasets.push(&r.dataset);
        }
    }
    if rows.is_empty() {
        md += "| Model |\n|---|\n";
    }
    for setting in Setting::ALL {
        let here: Vec<&SummaryRow> = rows.iter().filter(|r| r.setting == setting).collect();
        if here.is_empty() {
            continue;
        }
        let _ = write!(md, "## {setting}\n\n| Model |");
        for d in &datasets {
            let _ = write!(md, " {d} |");
        }
        md += "\n|---|";
        md += &"---|".repeat(datasets.len());
        md += "\n";
        let best: Vec<f64> = datasets
            .iter()
            .map(|d| {
                here.iter()
                    .filter(|r| r.dataset == *d)
                    .map(|r| r.mean)
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        for model in ModelKind::ALL {
            if !here.iter().any(|r| r.model == model) {
                continue;
            }
            let _ = write!(md, "| {model} |");
            for (d, best) in datasets.iter().zip(&best) {
                let Some(r) = here.iter().find(|r| r.model == model && r.dataset == *d) else {
                    log::warn!("no result for {model} on {d} ({setting})");
                    md += " |";
                    continue;
                };
                let mut cell = format!("{:.3} ± {:.3}", r.mean, r.std);
                if r.mean == *best {
                    cell = format!("**{cell}**");
                }
                if r.beats_counterpart == Some(true) {
                    cell = format!("<u>{cell}</u>");
                }
                if r.significant() {
                    cell += "*";
                }
                let _ = write!(md, " {cell} |");
            }
            md += "\n";
        }
        md += "\n";
    }
    let path = dir.join(SUMMARY_MD);
    std::fs::write(&path, md).map_err(|e| Error::io(&path, e))
}
