//! On-disk run artifacts: the per-iteration history CSV, the migration
//! event log, and the summary report built from the history.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use promptevo_core::engine::IterationRecord;
use promptevo_core::islands::MigrationReport;
use promptevo_core::metrics::{format_multiplier, run_stats, RunStats};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub iteration: u64,
    pub island: usize,
    pub prompt_id: String,
    /// Empty when the iteration failed.
    pub cracked_rate: Option<String>,
    pub archive_best: String,
}

impl HistoryRow {
    pub fn from_record(r: &IterationRecord) -> Self {
        Self {
            iteration: r.iteration,
            island: r.island_id,
            prompt_id: r.prompt_id.clone(),
            cracked_rate: r.fitness.map(fraction),
            archive_best: fraction(r.archive_best_global),
        }
    }
}

pub fn fraction(v: f64) -> String {
    format!("{v:.6}")
}

pub fn write_history(path: &Path, records: &[IterationRecord]) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
    for r in records {
        w.serialize(HistoryRow::from_record(r))?;
    }
    w.flush()
}

#[derive(Debug, thiserror::Error)]
pub enum HistoryError {
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}: {field} {value:?} is not a fraction")]
    BadFraction { row: usize, field: &'static str, value: String },
    #[error("history has no evaluated iterations after iteration 0")]
    Empty,
}

/// One parsed history row with numeric fields decoded.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedRow {
    pub iteration: u64,
    pub island: usize,
    pub cracked_rate: Option<f64>,
}

pub fn read_history(path: &Path) -> Result<Vec<ParsedRow>, HistoryError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (i, row) in r.deserialize::<HistoryRow>().enumerate() {
        let row = row?;
        let parse = |field: &'static str, s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| (0.0..=1.0).contains(v))
                .ok_or_else(|| HistoryError::BadFraction { row: i + 1, field, value: s.to_string() })
        };
        parse("archive_best", &row.archive_best)?;
        let cracked_rate = match row.cracked_rate.as_deref().map(str::trim) {
            None | Some("") => None,
            Some(s) => Some(parse("cracked_rate", s)?),
        };
        out.push(ParsedRow { iteration: row.iteration, island: row.island, cracked_rate });
    }
    Ok(out)
}

pub fn write_events(path: &Path, reports: &[MigrationReport]) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
    w.write_record(["iteration", "from_island", "to_island", "source_prompt_id", "copy_prompt_id", "fitness", "outcome"])?;
    for report in reports {
        for t in &report.transfers {
            w.write_record([
                report.iteration.to_string(),
                t.from_island.to_string(),
                t.to_island.to_string(),
                t.source_prompt_id.clone(),
                t.copy_prompt_id.clone(),
                fraction(t.fitness),
                t.outcome.as_str().to_string(),
            ])?;
        }
    }
    w.flush()
}

/// Baseline taken from the iteration-0 row, when present.
pub fn baseline_of(rows: &[ParsedRow]) -> Option<f64> {
    rows.iter().find(|r| r.iteration == 0).and_then(|r| r.cracked_rate)
}

fn stats_line(out: &mut String, label: &str, s: &RunStats) {
    let sd = s.sd.map_or_else(|| "--".to_string(), |v| format!("{:.4}", v * 100.0));
    let delta = s.delta_vs_baseline.map_or_else(|| "--".to_string(), format_multiplier);
    let _ = writeln!(
        out,
        "{label:<10} {:>5} {:>9.4} {:>8} {:>9.4} {:>9.4} {:>8}",
        s.n,
        s.mean * 100.0,
        sd,
        s.min * 100.0,
        s.best * 100.0,
        delta
    );
}

/// Table of pooled and per-island statistics over evaluated iterations
/// after iteration 0. Rates are printed in percent.
pub fn render_report(rows: &[ParsedRow], baseline: Option<f64>) -> Result<String, HistoryError> {
    let evaluated: Vec<&ParsedRow> = rows.iter().filter(|r| r.iteration > 0 && r.cracked_rate.is_some()).collect();
    if evaluated.is_empty() {
        return Err(HistoryError::Empty);
    }
    let series = |pred: &dyn Fn(&ParsedRow) -> bool| -> Vec<f64> {
        evaluated.iter().filter(|r| pred(r)).filter_map(|r| r.cracked_rate).collect()
    };
    let mut out = String::new();
    let _ = writeln!(out, "{:<10} {:>5} {:>9} {:>8} {:>9} {:>9} {:>8}", "scope", "n", "mean%", "sd%", "min%", "best%", "delta");
    let pooled = run_stats(&series(&|_| true), baseline).expect("non-empty series");
    stats_line(&mut out, "all", &pooled);
    let mut islands: Vec<usize> = evaluated.iter().map(|r| r.island).collect();
    islands.sort_unstable();
    islands.dedup();
    for k in islands {
        let s = run_stats(&series(&|r| r.island == k), baseline).expect("island has rows");
        stats_line(&mut out, &format!("island {k}"), &s);
    }
    let failed = rows.iter().filter(|r| r.iteration > 0 && r.cracked_rate.is_none()).count();
    if failed > 0 {
        let _ = writeln!(out, "failed iterations: {failed}");
    }
    Ok(out)
}
