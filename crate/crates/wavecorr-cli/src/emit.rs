//! Plot-data emission: tidy long-format CSV series derived from a run's
//! manifest inventory.

use std::path::{Path, PathBuf};

use wavecorr::io::{fmt_f64, CsvWriter};

use crate::errors::{CliError, Result};
use crate::manifest::RunManifest;

/// Series names accepted by `emit`.
pub const SERIES: [&str; 3] = ["scaling", "reconstruction-slice", "probe-ratios"];

fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::StageFailure {
        stage: "emit",
        message: format!("read {path:?}: {e}"),
    })?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::StageFailure {
            stage: "emit",
            message: format!("{path:?} is empty"),
        })?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    Ok((header, rows))
}

fn column(header: &[String], name: &str) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::StageFailure {
            stage: "emit",
            message: format!("column {name:?} missing"),
        })
}

/// Emits one tidy series (k, quantity, value, stderr) next to the manifest.
pub fn emit_series(manifest_path: &Path, series: &str, out_dir: Option<&Path>) -> Result<PathBuf> {
    let manifest = RunManifest::load(manifest_path)?;
    let base_dir = manifest_path.parent().unwrap_or(Path::new("."));
    let out_dir = out_dir.unwrap_or(base_dir);
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::StageFailure {
        stage: "emit",
        message: format!("create {out_dir:?}: {e}"),
    })?;
    let out_path = out_dir.join(format!("series-{series}.csv"));
    match series {
        "scaling" => {
            let record = manifest
                .find("sup_statistic.csv")
                .ok_or_else(|| CliError::SeriesMissing(series.to_string()))?;
            let (header, rows) = read_csv(&base_dir.join(&record.path))?;
            let k_col = column(&header, "k")?;
            let m_col = column(&header, "m_stat")?;
            let mut w = CsvWriter::create(&out_path, "k,quantity,value,stderr")
                .map_err(CliError::stage("emit"))?;
            for row in rows {
                w.row(&[
                    row[k_col].clone(),
                    "m_stat".into(),
                    row[m_col].clone(),
                    fmt_f64(0.0),
                ])
                .map_err(CliError::stage("emit"))?;
            }
        }
        "reconstruction-slice" => {
            // Slice along the first axis through the box center, planted and
            // reconstructed strengths side by side.
            let rec_record = manifest
                .files
                .iter()
                .find(|f| f.path.starts_with("reconstruction-k") && f.path.ends_with(".json"))
                .ok_or_else(|| CliError::SeriesMissing(series.to_string()))?;
            let rec_base = base_dir.join(rec_record.path.trim_end_matches(".json"));
            let planted = wavecorr::io::load_strength(&base_dir.join("strength"))
                .map_err(CliError::stage("emit"))?;
            let sidecar_text = std::fs::read_to_string(rec_base.with_extension("json"))
                .map_err(|e| CliError::StageFailure {
                    stage: "emit",
                    message: e.to_string(),
                })?;
            let sidecar: wavecorr::io::FieldSidecar = serde_json::from_str(&sidecar_text)
                .map_err(|e| CliError::StageFailure {
                    stage: "emit",
                    message: e.to_string(),
                })?;
            let payload = std::fs::read(rec_base.with_extension("f64")).map_err(|e| {
                CliError::StageFailure {
                    stage: "emit",
                    message: e.to_string(),
                }
            })?;
            let values: Vec<f64> = payload
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            let grid = planted.grid;
            let k = sidecar.k.unwrap_or(0.0);
            let truth = planted.scalar_values().ok();
            let n = grid.points_per_axis();
            let mut w = CsvWriter::create(&out_path, "k,quantity,value,stderr")
                .map_err(CliError::stage("emit"))?;
            // Fix all trailing indices at N/2 and walk the first axis.
            for i in 0..n {
                let mut ix = [n / 2; 3];
                ix[0] = i;
                let idx = grid.ravel(&ix);
                let x = grid.axis_coord(i);
                w.row(&[
                    fmt_f64(k),
                    format!("sigma_rec@x={x:.6}"),
                    fmt_f64(values[idx]),
                    fmt_f64(0.0),
                ])
                .map_err(CliError::stage("emit"))?;
                if let Some(t) = truth {
                    w.row(&[
                        fmt_f64(k),
                        format!("sigma@x={x:.6}"),
                        fmt_f64(t[idx]),
                        fmt_f64(0.0),
                    ])
                    .map_err(CliError::stage("emit"))?;
                }
            }
        }
        "probe-ratios" => {
            let record = manifest
                .find("probe.csv")
                .ok_or_else(|| CliError::SeriesMissing(series.to_string()))?;
            let (header, rows) = read_csv(&base_dir.join(&record.path))?;
            let k_col = column(&header, "k")?;
            let ratio_col = column(&header, "ratio")?;
            let mut w = CsvWriter::create(&out_path, "k,quantity,value,stderr")
                .map_err(CliError::stage("emit"))?;
            for row in rows {
                w.row(&[
                    row[k_col].clone(),
                    "stability_ratio".into(),
                    row[ratio_col].clone(),
                    fmt_f64(0.0),
                ])
                .map_err(CliError::stage("emit"))?;
            }
        }
        other => return Err(CliError::SeriesMissing(other.to_string())),
    }
    Ok(out_path)
}
