use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::SplitMode;
use crate::error::{Error, Result};

/// Metrics of one model on one game.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameRow {
    pub model: String,
    pub game: String,
    pub steps: usize,
    pub loss: f64,
    pub accuracy: f64,
    pub econ_value: f64,
}

/// Step-weighted means over a model's games.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub model: String,
    pub games: usize,
    pub steps: usize,
    pub loss: f64,
    pub accuracy: f64,
    pub econ_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellError {
    pub model: String,
    pub split: String,
    pub message: String,
}

/// Train/test separation check over every evaluated cell.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LeakageAudit {
    pub cells: usize,
    pub violations: Vec<String>,
}

impl LeakageAudit {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub protocol: SplitMode,
    pub k: usize,
    pub rows: Vec<GameRow>,
    pub aggregates: Vec<AggregateRow>,
    pub errors: Vec<CellError>,
    pub audit: LeakageAudit,
}

impl EvalReport {
    pub fn succeeded(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn row(&self, model: &str, game: &str) -> Option<&GameRow> {
        self.rows.iter().find(|r| r.model == model && r.game == game)
    }

    pub fn aggregate(&self, model: &str) -> Option<&AggregateRow> {
        self.aggregates.iter().find(|r| r.model == model)
    }
}

/// `Σ metric·steps / Σ steps` per model, models in order of first
/// appearance.
pub fn aggregate_rows(rows: &[GameRow]) -> Vec<AggregateRow> {
    let mut out: Vec<AggregateRow> = Vec::new();
    for r in rows {
        let w = r.steps as f64;
        match out.iter_mut().find(|a| a.model == r.model) {
            Some(a) => {
                a.games += 1;
                a.steps += r.steps;
                a.loss += r.loss * w;
                a.accuracy += r.accuracy * w;
                a.econ_value += r.econ_value * w;
            }
            None => out.push(AggregateRow {
                model: r.model.clone(),
                games: 1,
                steps: r.steps,
                loss: r.loss * w,
                accuracy: r.accuracy * w,
                econ_value: r.econ_value * w,
            }),
        }
    }
    for a in &mut out {
        let w = a.steps as f64;
        a.loss /= w;
        a.accuracy /= w;
        a.econ_value /= w;
    }
    out
}

/// Headline numbers from the human-subject experiments, carried as reference
/// values only; synthetic corpora are not expected to reproduce them.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReferenceValues {
    pub cnn_loss: f64,
    pub cnn_accuracy: f64,
    pub cnn_econ_value: f64,
    pub best_static_econ_value: f64,
    pub cnn_gs_loss: f64,
    pub cnn_gs_accuracy: f64,
    pub cnn_gs_econ_value: f64,
}

pub const HUMAN_REFERENCE: ReferenceValues = ReferenceValues {
    cnn_loss: 0.42,
    cnn_accuracy: 79.5,
    cnn_econ_value: 87.5,
    best_static_econ_value: 78.3,
    cnn_gs_loss: 0.448,
    cnn_gs_accuracy: 77.6,
    cnn_gs_econ_value: 87.4,
};

fn fmt_f(v: f64) -> String {
    format!("{v}")
}

pub fn write_per_game_csv(rows: &[GameRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["model", "game", "steps", "loss", "accuracy", "econ_value"])?;
    for r in rows {
        w.write_record([r.model.clone(), r.game.clone(), r.steps.to_string(), fmt_f(r.loss), fmt_f(r.accuracy), fmt_f(r.econ_value)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_aggregate_csv(rows: &[AggregateRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["model", "games", "steps", "loss", "accuracy", "econ_value"])?;
    for r in rows {
        w.write_record([r.model.clone(), r.games.to_string(), r.steps.to_string(), fmt_f(r.loss), fmt_f(r.accuracy), fmt_f(r.econ_value)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_per_game_csv(path: &Path) -> Result<Vec<GameRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

pub fn read_aggregate_csv(path: &Path) -> Result<Vec<AggregateRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

pub const PER_GAME_CSV: &str = "per_game.csv";
pub const AGGREGATE_CSV: &str = "aggregate.csv";
pub const MANIFEST_JSON: &str = "manifest.json";

/// Writes `per_game.csv`, `aggregate.csv` and `manifest.json` into `dir`.
/// `config` is echoed into the manifest verbatim.
pub fn emit_report(report: &EvalReport, config: &impl Serialize, seed: u64, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_per_game_csv(&report.rows, &dir.join(PER_GAME_CSV))?;
    write_aggregate_csv(&report.aggregates, &dir.join(AGGREGATE_CSV))?;
    let mut labels = BTreeMap::new();
    labels.insert("best_static_test_empirical", "action frequencies of the test game itself; an oracle benchmark, not a fitted model");
    labels.insert("best_static_train", "action frequencies of the training data");
    labels.insert("oracle", "certain forecast of the realized action; harness self-test");
    let manifest = serde_json::json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "protocol": report.protocol,
        "k": report.k,
        "seed": seed,
        "config": config,
        "labels": labels,
        "human_reference": HUMAN_REFERENCE,
        "errors": report.errors,
        "leakage_audit": report.audit,
    });
    std::fs::write(dir.join(MANIFEST_JSON), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(())
}

/// One line of the history-length sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub mode: String,
    pub model: String,
    pub steps: usize,
    pub loss: f64,
    pub accuracy: f64,
    pub econ_value: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub errors: Vec<CellError>,
    pub audit: LeakageAudit,
}

impl SweepTable {
    pub fn get(&self, k: usize, mode: &str) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.k == k && r.mode == mode)
    }
}

pub const SWEEP_CSV: &str = "sweep.csv";

pub fn write_sweep_csv(table: &SweepTable, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["k", "mode", "model", "steps", "loss", "accuracy", "econ_value"])?;
    for r in &table.rows {
        w.write_record([
            r.k.to_string(),
            r.mode.clone(),
            r.model.clone(),
            r.steps.to_string(),
            fmt_f(r.loss),
            fmt_f(r.accuracy),
            fmt_f(r.econ_value),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Recomputes aggregates from a per-game CSV and compares them with the
/// emitted aggregate CSV.
pub fn verify_aggregates(dir: &Path, tol: f64) -> Result<Vec<AggregateRow>> {
    let recomputed = aggregate_rows(&read_per_game_csv(&dir.join(PER_GAME_CSV))?);
    let emitted = read_aggregate_csv(&dir.join(AGGREGATE_CSV))?;
    if recomputed.len() != emitted.len() {
        return Err(Error::Validation(format!("{} models in per-game CSV, {} in aggregate CSV", recomputed.len(), emitted.len())));
    }
    for (a, b) in recomputed.iter().zip(&emitted) {
        let close = |x: f64, y: f64| (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0);
        if a.model != b.model || a.steps != b.steps || !close(a.loss, b.loss) || !close(a.accuracy, b.accuracy) || !close(a.econ_value, b.econ_value) {
            return Err(Error::Validation(format!("aggregate mismatch for {}: {a:?} vs {b:?}", a.model)));
        }
    }
    Ok(recomputed)
}
