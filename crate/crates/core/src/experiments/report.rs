//! Report files: one CSV per experiment plus a JSON summary next to it.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{CvReport, NoiseReport, TotalFlipsReport};
use crate::error::{Result, XlabelError};

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| XlabelError::Csv(e.to_string()))
}

fn write_row(w: &mut csv::Writer<fs::File>, row: &[String]) -> Result<()> {
    w.write_record(row).map_err(|e| XlabelError::Csv(e.to_string()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| XlabelError::invalid(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

/// Writes `totalflips_<task>.csv` and `totalflips_<task>.json`.
pub fn write_totalflips(dir: &Path, report: &TotalFlipsReport) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("totalflips_{}.csv", report.task));
    let mut w = csv_writer(&csv_path)?;
    write_row(&mut w, &["repetition".into(), "total_flips".into(), "degenerate_steps".into()])?;
    for (i, (f, d)) in report.total_flips.iter().zip(&report.degenerate_steps).enumerate() {
        write_row(&mut w, &[i.to_string(), f.to_string(), d.to_string()])?;
    }
    w.flush()?;
    let json_path = dir.join(format!("totalflips_{}.json", report.task));
    write_json(&json_path, report)?;
    Ok(vec![csv_path, json_path])
}

/// Writes `cv_<task>.csv` (one row per model and fold) and `cv_<task>.json`.
pub fn write_cv(dir: &Path, reports: &[CvReport]) -> Result<Vec<PathBuf>> {
    let Some(first) = reports.first() else {
        return Ok(Vec::new());
    };
    fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("cv_{}.csv", first.task));
    let mut w = csv_writer(&csv_path)?;
    write_row(
        &mut w,
        &["model", "fold", "f1", "accuracy", "precision", "recall", "tp", "fp", "tn", "fn", "degenerate"]
            .map(String::from),
    )?;
    for r in reports {
        for f in &r.folds {
            let m = f.metrics.unwrap_or_default();
            let c = f.confusion;
            write_row(
                &mut w,
                &[
                    r.model.clone(),
                    f.fold.to_string(),
                    format!("{:.6}", m.f1),
                    format!("{:.6}", m.accuracy),
                    format!("{:.6}", m.precision),
                    format!("{:.6}", m.recall),
                    c.tp.to_string(),
                    c.fp.to_string(),
                    c.tn.to_string(),
                    c.fn_.to_string(),
                    f.degenerate.to_string(),
                ],
            )?;
        }
    }
    w.flush()?;
    let json_path = dir.join(format!("cv_{}.json", first.task));
    write_json(&json_path, &reports)?;
    Ok(vec![csv_path, json_path])
}

/// Writes `noise_<task>.csv` (one row per model, level and repeat) and
/// `noise_<task>.json`.
pub fn write_noise(dir: &Path, reports: &[NoiseReport]) -> Result<Vec<PathBuf>> {
    let Some(first) = reports.first() else {
        return Ok(Vec::new());
    };
    fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("noise_{}.csv", first.task));
    let mut w = csv_writer(&csv_path)?;
    write_row(&mut w, &["model", "level", "repeat", "flipped", "accuracy"].map(String::from))?;
    for r in reports {
        for l in r.levels.iter().filter(|l| !l.skipped) {
            for (i, a) in l.accuracies.iter().enumerate() {
                write_row(
                    &mut w,
                    &[
                        r.model.clone(),
                        format!("{:.2}", l.level),
                        i.to_string(),
                        l.flipped.to_string(),
                        format!("{a:.6}"),
                    ],
                )?;
            }
        }
    }
    w.flush()?;
    let json_path = dir.join(format!("noise_{}.json", first.task));
    write_json(&json_path, &reports)?;
    Ok(vec![csv_path, json_path])
}
