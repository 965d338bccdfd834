//! Report files.
//!
//! `report.tsv` has one row per (step, task, scope, metric):
//!
//! ```text
//! step  task  setting  scope  metric  value
//! ```
//!
//! * `step`: 1-based position of the task whose training just finished.
//! * `task`: the task being scored.
//! * `setting`: the transfer approaches of the run (`ntm`, `lntm+tr`, `lntm-all`, ...).
//! * `scope`: `own` (the new model on its own task), `forgetting` (an earlier
//!   task scored with the new model's shared words), `zero_shot` (the
//!   previous model on the new task), `data_augment` (one model trained on
//!   every collection so far) or `train` (training statistics).
//! * `metric`: `ppl`, `coh`, `P@<fraction>` or `P@<k>` for retrieval, and for
//!   `train` rows `r_time` (mean seconds per epoch), `epochs`, `best_epoch`,
//!   `distilled` and `ppl_future`.
//! * `value`: shortest decimal that parses back to the same `f64`.
//!
//! `summary.json` holds the same numbers grouped by step.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const REPORT_HEADER: &str = "step\ttask\tsetting\tscope\tmetric\tvalue";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub step: usize,
    pub task: String,
    pub setting: String,
    pub scope: String,
    pub metric: String,
    pub value: f64,
}

impl ReportRow {
    pub fn tsv(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            self.step, self.task, self.setting, self.scope, self.metric, self.value
        )
    }

    /// Whether the value depends on wall-clock time.
    pub fn is_timing(&self) -> bool {
        self.metric == "r_time"
    }
}

pub fn render_tsv(rows: &[ReportRow]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.tsv());
        out.push('\n');
    }
    out
}

pub fn parse_tsv(text: &str) -> Result<Vec<ReportRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(REPORT_HEADER) {
        return Err(Error::Format("report does not start with the expected header".into()));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let f: Vec<&str> = l.split('\t').collect();
            let bad = || Error::Format(format!("report line {}: malformed row", i + 2));
            if f.len() != 6 {
                return Err(bad());
            }
            Ok(ReportRow {
                step: f[0].parse().map_err(|_| bad())?,
                task: f[1].to_string(),
                setting: f[2].to_string(),
                scope: f[3].to_string(),
                metric: f[4].to_string(),
                value: f[5].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct StepSummary<'a> {
    step: usize,
    task: &'a str,
    /// scope -> task -> metric -> value
    scores: BTreeMap<&'a str, BTreeMap<&'a str, BTreeMap<&'a str, f64>>>,
}

pub fn render_summary(name: &str, setting: &str, rows: &[ReportRow], trained: &[String]) -> Result<String> {
    let steps = trained
        .iter()
        .enumerate()
        .map(|(i, task)| {
            let mut scores: BTreeMap<&str, BTreeMap<&str, BTreeMap<&str, f64>>> = BTreeMap::new();
            for r in rows.iter().filter(|r| r.step == i + 1) {
                scores
                    .entry(&r.scope)
                    .or_default()
                    .entry(&r.task)
                    .or_default()
                    .insert(&r.metric, r.value);
            }
            StepSummary { step: i + 1, task, scores }
        })
        .collect::<Vec<_>>();
    let doc = serde_json::json!({
        "name": name,
        "setting": setting,
        "tasks": trained,
        "steps": steps,
    });
    Ok(serde_json::to_string_pretty(&doc)?)
}

/// Write `contents` to `path` through a temporary file and rename.
pub(crate) fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tsv_round_trips_values_exactly() {
        let rows = vec![
            ReportRow { step: 1, task: "a".into(), setting: "ntm".into(), scope: "own".into(), metric: "ppl".into(), value: 1.0 / 3.0 },
            ReportRow { step: 2, task: "a".into(), setting: "ntm".into(), scope: "forgetting".into(), metric: "P@0.02".into(), value: 0.1 + 0.2 },
        ];
        assert_eq!(parse_tsv(&render_tsv(&rows)).unwrap(), rows);
        assert!(parse_tsv("x\n").is_err());
        assert!(parse_tsv(&format!("{REPORT_HEADER}\n1\ta\n")).is_err());
    }
}
