//! Curve CSV and summary JSON output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cellspace::ArchEncoding;
use crate::error::{Error, Result};
use crate::evolution::SearchConfig;
use crate::harness::experiment::{ExperimentConfig, ExperimentResult, SummaryRow};

pub const CURVES_FILE: &str = "curves.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CURVES_HEADER: &str = "label,run_id,cycle,best_so_far,simulated_time_s";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: usize,
    pub final_arch: ArchEncoding,
    pub final_val_acc: f64,
    pub final_test_acc: f64,
    pub simulated_time_s: f64,
    pub cycles_executed: usize,
    pub proxy_evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub label: String,
    pub search: SearchConfig,
    pub summary: SummaryRow,
    pub runs: Vec<RunSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub best_arch: ArchEncoding,
    pub best_val_acc: f64,
    pub points: Vec<PointSummary>,
}

impl SummaryFile {
    pub fn from_result(result: &ExperimentResult) -> Self {
        let points = result
            .points
            .iter()
            .map(|p| PointSummary {
                label: p.label.clone(),
                search: p.search.clone(),
                summary: p.summary.clone(),
                runs: p
                    .runs
                    .iter()
                    .map(|r| RunSummary {
                        run_id: r.run_id,
                        final_arch: r.trajectory.best.arch,
                        final_val_acc: r.trajectory.final_fitness(),
                        final_test_acc: r.trajectory.final_test_acc(),
                        simulated_time_s: r.trajectory.simulated_time_s(),
                        cycles_executed: r.trajectory.cycles_executed,
                        proxy_evaluations: r.trajectory.proxy_evaluations,
                    })
                    .collect(),
            })
            .collect();
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: result.config.clone(),
            best_arch: result.best_arch,
            best_val_acc: result.best_val,
            points,
        }
    }
}

/// One row per (run, curve point): the initial population then each cycle.
pub fn curves_csv(result: &ExperimentResult) -> String {
    let mut out = String::from(CURVES_HEADER);
    out.push('\n');
    for p in &result.points {
        for r in &p.runs {
            for (cycle, best, time) in r.trajectory.curve() {
                writeln!(out, "{},{},{cycle},{best},{time}", p.label, r.run_id).expect("string write");
            }
        }
    }
    out
}

pub fn summary_json(result: &ExperimentResult) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&SummaryFile::from_result(result))?;
    s.push('\n');
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Emitted {
    pub curves: PathBuf,
    pub summary: PathBuf,
}

/// Write both files into `dir`, creating it if needed.
pub fn emit_results(result: &ExperimentResult, dir: impl AsRef<Path>) -> Result<Emitted> {
    let dir = dir.as_ref();
    if result.points.iter().all(|p| p.runs.is_empty()) {
        return Err(Error::Config("no runs to emit".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let curves = dir.join(CURVES_FILE);
    let summary = dir.join(SUMMARY_FILE);
    fs::write(&curves, curves_csv(result)).map_err(|e| Error::io(&curves, e))?;
    fs::write(&summary, summary_json(result)?).map_err(|e| Error::io(&summary, e))?;
    Ok(Emitted { curves, summary })
}

pub fn load_summary(path: impl AsRef<Path>) -> Result<SummaryFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
