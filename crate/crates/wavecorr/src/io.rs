//! Serialization: flat little-endian f64 binaries with JSON sidecars, and
//! small CSV writers for correlation and probe tables.
//!
//! A field saved at `base` produces `base.f64` (row-major node order, one
//! value per node for scalars, d values per node for vectors, d*d row-major
//! entries per node for matrices) and `base.json` with the grid metadata.
//! Loading reproduces the payload bit-exactly.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::errors::{Error, Result};
use crate::grid::SpatialGrid;
use crate::linalg::SymMat;
use crate::params::{SourceSpec, StrengthField, StrengthValues};
use crate::sampler::{FieldRealization, FieldValues};

pub const CONTAINER_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSidecar {
    pub schema_version: u32,
    /// "strength-scalar" | "strength-matrix" | "realization-scalar"
    /// | "realization-vector" | "reconstruction"
    pub kind: String,
    pub d: usize,
    pub points_per_axis: usize,
    pub box_half_width: f64,
    /// Values per node in the binary payload.
    pub components: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
}

fn write_f64_le(path: &Path, data: &[f64]) -> Result<()> {
    let mut bytes = Vec::with_capacity(data.len() * 8);
    for v in data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::InvalidInput(format!("write {path:?}: {e}")))
}

fn read_f64_le(path: &Path) -> Result<Vec<f64>> {
    let bytes =
        fs::read(path).map_err(|e| Error::InvalidInput(format!("read {path:?}: {e}")))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::InvalidInput(format!(
            "binary payload {path:?} has length {} not divisible by 8",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn sidecar_path(base: &Path) -> PathBuf {
    base.with_extension("json")
}

fn payload_path(base: &Path) -> PathBuf {
    base.with_extension("f64")
}

fn write_sidecar(base: &Path, sidecar: &FieldSidecar) -> Result<()> {
    let text = serde_json::to_string_pretty(sidecar)
        .map_err(|e| Error::InvalidInput(format!("sidecar encode: {e}")))?;
    fs::write(sidecar_path(base), text)
        .map_err(|e| Error::InvalidInput(format!("write sidecar: {e}")))
}

fn read_sidecar(base: &Path) -> Result<FieldSidecar> {
    let text = fs::read_to_string(sidecar_path(base))
        .map_err(|e| Error::InvalidInput(format!("read sidecar: {e}")))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("sidecar decode: {e}")))
}

/// Writes a strength field; `spec` supplies the (m, s) metadata when the
/// strength belongs to a source spec.
pub fn save_strength(base: &Path, field: &StrengthField, spec: Option<&SourceSpec>) -> Result<()> {
    let grid = field.grid;
    let (kind, components, data) = match &field.values {
        StrengthValues::Scalar(v) => ("strength-scalar".to_string(), 1, v.clone()),
        StrengthValues::Matrix(ms) => {
            let d = grid.dim();
            let mut data = Vec::with_capacity(ms.len() * d * d);
            for m in ms {
                for i in 0..d {
                    for j in 0..d {
                        data.push(m.a[i][j]);
                    }
                }
            }
            ("strength-matrix".to_string(), d * d, data)
        }
    };
    write_f64_le(&payload_path(base), &data)?;
    write_sidecar(
        base,
        &FieldSidecar {
            schema_version: CONTAINER_SCHEMA_VERSION,
            kind,
            d: grid.dim(),
            points_per_axis: grid.points_per_axis(),
            box_half_width: grid.half_width(),
            components,
            m: spec.map(|s| s.m),
            s: spec.map(|s| s.s),
            seed: None,
            cutoff: None,
            k: None,
        },
    )
}

pub fn load_strength(base: &Path) -> Result<StrengthField> {
    let sidecar = read_sidecar(base)?;
    let grid = SpatialGrid::new(sidecar.d, sidecar.points_per_axis, sidecar.box_half_width)?;
    let data = read_f64_le(&payload_path(base))?;
    match sidecar.kind.as_str() {
        "strength-scalar" => {
            if data.len() != grid.len() {
                return Err(Error::InvalidInput("payload length mismatch".into()));
            }
            Ok(StrengthField {
                grid,
                values: StrengthValues::Scalar(data),
            })
        }
        "strength-matrix" => {
            let d = grid.dim();
            if data.len() != grid.len() * d * d {
                return Err(Error::InvalidInput("payload length mismatch".into()));
            }
            let values = data
                .chunks_exact(d * d)
                .map(|chunk| {
                    let mut m = SymMat::zero(d);
                    for i in 0..d {
                        for j in 0..d {
                            m.a[i][j] = chunk[i * d + j];
                        }
                    }
                    m
                })
                .collect();
            Ok(StrengthField {
                grid,
                values: StrengthValues::Matrix(values),
            })
        }
        other => Err(Error::InvalidInput(format!("unexpected container kind {other}"))),
    }
}

/// Writes a realization in the same container, recording its seed and order.
pub fn save_realization(base: &Path, field: &FieldRealization) -> Result<()> {
    let grid = field.grid;
    let (kind, components, data) = match &field.values {
        FieldValues::Scalar(v) => ("realization-scalar".to_string(), 1, v.clone()),
        FieldValues::Vector(comps) => {
            let d = grid.dim();
            let mut data = Vec::with_capacity(grid.len() * d);
            for idx in 0..grid.len() {
                for comp in comps.iter() {
                    data.push(comp[idx]);
                }
            }
            ("realization-vector".to_string(), d, data)
        }
    };
    write_f64_le(&payload_path(base), &data)?;
    write_sidecar(
        base,
        &FieldSidecar {
            schema_version: CONTAINER_SCHEMA_VERSION,
            kind,
            d: grid.dim(),
            points_per_axis: grid.points_per_axis(),
            box_half_width: grid.half_width(),
            components,
            m: Some(field.m),
            s: None,
            seed: Some(field.seed),
            cutoff: None,
            k: None,
        },
    )
}

pub fn load_realization(base: &Path) -> Result<FieldRealization> {
    let sidecar = read_sidecar(base)?;
    let grid = SpatialGrid::new(sidecar.d, sidecar.points_per_axis, sidecar.box_half_width)?;
    let data = read_f64_le(&payload_path(base))?;
    let mut field = match sidecar.kind.as_str() {
        "realization-scalar" => FieldRealization::from_scalar_values(grid, data)?,
        "realization-vector" => {
            let d = grid.dim();
            if data.len() != grid.len() * d {
                return Err(Error::InvalidInput("payload length mismatch".into()));
            }
            let mut comps = vec![vec![0.0; grid.len()]; d];
            for idx in 0..grid.len() {
                for c in 0..d {
                    comps[c][idx] = data[idx * d + c];
                }
            }
            FieldRealization::from_vector_values(grid, comps)?
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "unexpected container kind {other}"
            )))
        }
    };
    field.seed = sidecar.seed.unwrap_or(0);
    field.m = sidecar.m.unwrap_or(0.0);
    Ok(field)
}

/// Writes a reconstruction (scalar field plus cutoff and wavenumber).
pub fn save_reconstruction(
    base: &Path,
    rec: &crate::reconstruction::ReconstructionResult,
) -> Result<()> {
    write_f64_le(&payload_path(base), &rec.values)?;
    write_sidecar(
        base,
        &FieldSidecar {
            schema_version: CONTAINER_SCHEMA_VERSION,
            kind: "reconstruction".to_string(),
            d: rec.grid.dim(),
            points_per_axis: rec.grid.points_per_axis(),
            box_half_width: rec.grid.half_width(),
            components: 1,
            m: None,
            s: None,
            seed: None,
            cutoff: Some(rec.cutoff),
            k: Some(rec.k),
        },
    )
}

/// Minimal CSV writer; fields are formatted with full f64 round-trip
/// precision so re-reads are exact.
pub struct CsvWriter {
    out: fs::File,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &str) -> Result<Self> {
        let mut out = fs::File::create(path)
            .map_err(|e| Error::InvalidInput(format!("create {path:?}: {e}")))?;
        writeln!(out, "{header}").map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(Self { out })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<()> {
        writeln!(self.out, "{}", fields.join(","))
            .map_err(|e| Error::InvalidInput(e.to_string()))
    }
}

/// Full-precision float formatting for CSV cells.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.17e}")
}

/// Sidecar for a far-field ensemble CSV: model, wavenumber, and the seeds
/// behind the rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarFieldManifest {
    pub schema_version: u32,
    pub model: String,
    pub k: f64,
    pub seeds: Vec<u64>,
    pub directions: usize,
}

/// Writes a far-field ensemble as CSV (direction components, Re/Im per
/// channel, one row per (realization, direction)) plus a JSON manifest.
pub fn save_farfield_ensemble(
    base: &Path,
    model: &str,
    k: f64,
    seeds: &[u64],
    rows: &[Vec<crate::farfield::FarFieldSample>],
) -> Result<()> {
    let csv_path = base.with_extension("csv");
    let mut w = CsvWriter::create(
        &csv_path,
        "realization,dir0,dir1,dir2,channel,re,im",
    )?;
    let mut directions = 0;
    for (r, samples) in rows.iter().enumerate() {
        directions = directions.max(samples.len());
        for s in samples {
            let mut emit = |channel: usize, v: num_complex::Complex64| -> Result<()> {
                w.row(&[
                    r.to_string(),
                    fmt_f64(s.direction[0]),
                    fmt_f64(s.direction[1]),
                    fmt_f64(s.direction[2]),
                    channel.to_string(),
                    fmt_f64(v.re),
                    fmt_f64(v.im),
                ])
            };
            match s.value {
                crate::farfield::FarFieldValue::Scalar(v) => emit(0, v)?,
                crate::farfield::FarFieldValue::Vector(v) => {
                    for (c, vc) in v.iter().enumerate() {
                        emit(c, *vc)?;
                    }
                }
            }
        }
    }
    let manifest = FarFieldManifest {
        schema_version: CONTAINER_SCHEMA_VERSION,
        model: model.to_string(),
        k,
        seeds: seeds.to_vec(),
        directions,
    };
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::InvalidInput(format!("manifest encode: {e}")))?;
    fs::write(sidecar_path(base), text)
        .map_err(|e| Error::InvalidInput(format!("write manifest: {e}")))?;
    Ok(())
}

/// Writes asymptotics residuals: one row per (k, radius).
pub fn save_asymptotics_csv(path: &Path, rows: &[(f64, f64, f64, f64)]) -> Result<()> {
    let mut w = CsvWriter::create(path, "k,radius,residual,u_inf_norm")?;
    for (k, radius, residual, u_inf) in rows {
        w.row(&[fmt_f64(*k), fmt_f64(*radius), fmt_f64(*residual), fmt_f64(*u_inf)])?;
    }
    Ok(())
}

/// Writes correlation records in long format, one row per matrix entry.
pub fn save_correlations_csv(
    path: &Path,
    records: &[crate::correlation::CorrelationRecord],
) -> Result<()> {
    let mut w = CsvWriter::create(
        path,
        "k,xhat0,xhat1,xhat2,yhat0,yhat1,yhat2,entry_i,entry_j,re,im,n_samples,stderr",
    )?;
    for r in records {
        let mut emit = |i: usize, j: usize, re: f64, im: f64| -> Result<()> {
            w.row(&[
                fmt_f64(r.k),
                fmt_f64(r.xhat[0]),
                fmt_f64(r.xhat[1]),
                fmt_f64(r.xhat[2]),
                fmt_f64(r.yhat[0]),
                fmt_f64(r.yhat[1]),
                fmt_f64(r.yhat[2]),
                i.to_string(),
                j.to_string(),
                fmt_f64(re),
                fmt_f64(im),
                r.n_samples.to_string(),
                fmt_f64(r.stderr),
            ])
        };
        match &r.value {
            crate::correlation::CorrValue::Scalar(z) => emit(0, 0, z.re, z.im)?,
            crate::correlation::CorrValue::Matrix(m) => {
                for i in 0..m.d {
                    for j in 0..m.d {
                        emit(i, j, m.a[i][j].re, m.a[i][j].im)?;
                    }
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::gaussian_bump_strength;

    #[test]
    fn strength_container_roundtrip_is_bit_exact() {
        let dir = std::env::temp_dir().join("wavecorr-io-test");
        fs::create_dir_all(&dir).unwrap();
        let base = dir.join("sigma");
        let grid = SpatialGrid::standard(2, 32).unwrap();
        let field = gaussian_bump_strength(grid, [0.12, -0.3, 0.0], 0.11, 1.7).unwrap();
        let spec = SourceSpec { m: 1.5, s: 3, strength: field.clone() };
        save_strength(&base, &field, Some(&spec)).unwrap();
        let back = load_strength(&base).unwrap();
        assert_eq!(back.grid, field.grid);
        let a = field.scalar_values().unwrap();
        let b = back.scalar_values().unwrap();
        assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn farfield_ensemble_csv_and_manifest() {
        use crate::farfield::{poly_farfield, direction_grid};
        use crate::sampler::FieldRealization;
        let dir = std::env::temp_dir().join("wavecorr-io-test");
        fs::create_dir_all(&dir).unwrap();
        let base = dir.join("farfield");
        let grid = SpatialGrid::standard(2, 16).unwrap();
        let values: Vec<f64> = (0..grid.len()).map(|i| (i % 7) as f64 * 0.1).collect();
        let f = FieldRealization::from_scalar_values(grid, values).unwrap();
        let dirs = direction_grid(2, 4);
        let rows = vec![poly_farfield(&f, 4.0, 1, &dirs).unwrap()];
        save_farfield_ensemble(&base, "polyharmonic", 4.0, &[0], &rows).unwrap();
        let csv = fs::read_to_string(base.with_extension("csv")).unwrap();
        assert_eq!(csv.lines().count(), 1 + 4);
        let manifest: FarFieldManifest =
            serde_json::from_str(&fs::read_to_string(base.with_extension("json")).unwrap())
                .unwrap();
        assert_eq!(manifest.k, 4.0);
        assert_eq!(manifest.directions, 4);
        assert_eq!(manifest.seeds, vec![0]);
    }

    #[test]
    fn realization_container_roundtrip() {
        let dir = std::env::temp_dir().join("wavecorr-io-test");
        fs::create_dir_all(&dir).unwrap();
        let base = dir.join("realization");
        let grid = SpatialGrid::standard(3, 8).unwrap();
        let comps: Vec<Vec<f64>> = (0..3)
            .map(|c| (0..grid.len()).map(|i| (c * i) as f64 * 0.25 - 1.0).collect())
            .collect();
        let mut f = FieldRealization::from_vector_values(grid, comps).unwrap();
        f.seed = 42;
        f.m = 2.5;
        save_realization(&base, &f).unwrap();
        let back = load_realization(&base).unwrap();
        assert_eq!(back.seed, 42);
        assert_eq!(back.m, 2.5);
        assert_eq!(back.vector_values().unwrap(), f.vector_values().unwrap());
    }
}
