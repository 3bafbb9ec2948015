//! Experiment configuration: a single TOML file, versioned by
//! `schema_version`, parsed into a validated plan.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wavecorr::linalg::SymMat;
use wavecorr::params::{validate_source, CheckedSourceSpec, SourceSpec, StrengthField};
use wavecorr::{gaussian_bump_strength, matrix_bump_strength, SpatialGrid, WaveModel};

use crate::errors::{CliError, Result};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub output_dir: PathBuf,
    pub model: ModelConfig,
    pub source: SourceConfig,
    pub grid: GridConfig,
    pub run: RunConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// "polyharmonic" | "electromagnetic" | "elastic"
    pub kind: String,
    #[serde(default)]
    pub d: Option<usize>,
    /// Polyharmonic order.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    /// Covariance order exponent of the principal symbol.
    pub m: f64,
    /// Smoothness index used by the stability probes.
    pub s: u32,
    #[serde(default)]
    pub gaussian_bump: Option<BumpConfig>,
    /// Path to a strength container (`.json` sidecar base) to load instead
    /// of generating a bump.
    #[serde(default)]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BumpConfig {
    pub center: [f64; 3],
    pub width: f64,
    /// Scalar amplitude (polyharmonic).
    #[serde(default)]
    pub amplitude: Option<f64>,
    /// Symmetric coefficient matrix rows (electromagnetic / elastic).
    #[serde(default)]
    pub coeff: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub points_per_axis: usize,
    #[serde(default = "default_half_width")]
    pub half_width: f64,
}

fn default_half_width() -> f64 {
    2.0
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub ks: Vec<f64>,
    #[serde(default = "default_directions")]
    pub directions: usize,
    /// "analytic" | "monte-carlo"
    pub pathway: String,
    #[serde(default)]
    pub realizations: Option<usize>,
    #[serde(default)]
    pub base_seed: Option<u64>,
    /// "two-k" | "k-p" | "theory" | a fixed radius.
    #[serde(default = "default_cutoff")]
    pub cutoff: toml::Value,
    #[serde(default = "default_true")]
    pub reconstruct: bool,
    /// Electromagnetic Monte Carlo only: project sampled sources onto
    /// divergence-free fields. Changes the recovery target (the projected
    /// symbol is no longer the planted matrix), so it is off by default.
    #[serde(default)]
    pub leray: bool,
    /// Persist the raw far-field ensemble per wavenumber (Monte Carlo
    /// pathway). Off by default; ensembles can be large.
    #[serde(default)]
    pub save_farfields: bool,
    /// Radii at which to tabulate far-field asymptotics residuals of the
    /// planted strength used as a deterministic source (polyharmonic only;
    /// the near-field solver exists for that model alone).
    #[serde(default)]
    pub asymptotics_radii: Vec<f64>,
}

fn default_directions() -> usize {
    64
}

fn default_cutoff() -> toml::Value {
    toml::Value::String("two-k".into())
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CutoffPolicy {
    TwoK,
    KP,
    Theory,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathwayConfig {
    Analytic,
    MonteCarlo,
}

/// A parsed and admissibility-checked experiment.
pub struct ExperimentPlan {
    pub config: ExperimentConfig,
    pub model: WaveModel,
    pub spec: CheckedSourceSpec,
    pub pathway: PathwayConfig,
    pub cutoff: CutoffPolicy,
    pub realizations: usize,
    pub base_seed: u64,
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::ConfigInvalid(format!("cannot read {path:?}: {e}")))?;
    let config: ExperimentConfig = toml::from_str(&text)
        .map_err(|e| CliError::ConfigInvalid(format!("TOML parse error: {e}")))?;
    if config.schema_version != CONFIG_SCHEMA_VERSION {
        return Err(CliError::ConfigInvalid(format!(
            "schema_version {} unsupported (expected {CONFIG_SCHEMA_VERSION})",
            config.schema_version
        )));
    }
    Ok(config)
}

fn build_model(mc: &ModelConfig) -> Result<WaveModel> {
    match mc.kind.as_str() {
        "polyharmonic" => {
            let d = mc
                .d
                .ok_or_else(|| CliError::ConfigInvalid("polyharmonic model needs d".into()))?;
            let n = mc
                .n
                .ok_or_else(|| CliError::ConfigInvalid("polyharmonic model needs n".into()))?;
            WaveModel::polyharmonic(d, n).map_err(CliError::from_core)
        }
        "electromagnetic" => Ok(WaveModel::electromagnetic()),
        "elastic" => {
            let d = mc
                .d
                .ok_or_else(|| CliError::ConfigInvalid("elastic model needs d".into()))?;
            let lambda = mc
                .lambda
                .ok_or_else(|| CliError::ConfigInvalid("elastic model needs lambda".into()))?;
            let mu = mc
                .mu
                .ok_or_else(|| CliError::ConfigInvalid("elastic model needs mu".into()))?;
            WaveModel::elastic(d, lambda, mu).map_err(CliError::from_core)
        }
        other => Err(CliError::ConfigInvalid(format!("unknown model kind {other:?}"))),
    }
}

fn build_strength(
    config: &ExperimentConfig,
    model: &WaveModel,
    grid: SpatialGrid,
    config_dir: &Path,
) -> Result<StrengthField> {
    if let Some(path) = &config.source.file {
        let full = if path.is_absolute() {
            path.clone()
        } else {
            config_dir.join(path)
        };
        return wavecorr::io::load_strength(&full).map_err(CliError::from_core);
    }
    let bump = config.source.gaussian_bump.as_ref().ok_or_else(|| {
        CliError::ConfigInvalid("source needs either gaussian_bump or file".into())
    })?;
    if model.wants_matrix_strength() {
        let rows = bump.coeff.as_ref().ok_or_else(|| {
            CliError::ConfigInvalid("matrix models need source.gaussian_bump.coeff".into())
        })?;
        let d = model.dim();
        if rows.len() != d || rows.iter().any(|r| r.len() != d) {
            return Err(CliError::ConfigInvalid(format!(
                "coeff must be a {d}x{d} matrix"
            )));
        }
        let mut coeff = SymMat::zero(d);
        for i in 0..d {
            for j in 0..d {
                coeff.a[i][j] = rows[i][j];
            }
        }
        matrix_bump_strength(grid, bump.center, bump.width, coeff).map_err(CliError::from_core)
    } else {
        let amp = bump.amplitude.ok_or_else(|| {
            CliError::ConfigInvalid("scalar models need source.gaussian_bump.amplitude".into())
        })?;
        gaussian_bump_strength(grid, bump.center, bump.width, amp).map_err(CliError::from_core)
    }
}

pub fn build_plan(config: ExperimentConfig, config_dir: &Path) -> Result<ExperimentPlan> {
    let model = build_model(&config.model)?;
    let grid = SpatialGrid::new(
        model.dim(),
        config.grid.points_per_axis,
        config.grid.half_width,
    )
    .map_err(CliError::from_core)?;
    let strength = build_strength(&config, &model, grid, config_dir)?;
    let spec = validate_source(
        model,
        SourceSpec {
            m: config.source.m,
            s: config.source.s,
            strength,
        },
    )
    .map_err(CliError::from_core)?;
    let pathway = match config.run.pathway.as_str() {
        "analytic" => PathwayConfig::Analytic,
        "monte-carlo" => PathwayConfig::MonteCarlo,
        other => {
            return Err(CliError::ConfigInvalid(format!(
                "unknown pathway {other:?} (use \"analytic\" or \"monte-carlo\")"
            )))
        }
    };
    let cutoff = match &config.run.cutoff {
        toml::Value::String(s) => match s.as_str() {
            "two-k" => CutoffPolicy::TwoK,
            "k-p" => CutoffPolicy::KP,
            "theory" => CutoffPolicy::Theory,
            other => {
                return Err(CliError::ConfigInvalid(format!(
                    "unknown cutoff policy {other:?}"
                )))
            }
        },
        toml::Value::Float(f) if *f > 0.0 => CutoffPolicy::Fixed(*f),
        toml::Value::Integer(i) if *i > 0 => CutoffPolicy::Fixed(*i as f64),
        other => {
            return Err(CliError::ConfigInvalid(format!(
                "cutoff must be a policy string or a positive radius, got {other:?}"
            )))
        }
    };
    if config.run.ks.is_empty() || config.run.ks.iter().any(|&k| !(k > 1.0)) {
        return Err(CliError::ConfigInvalid(
            "run.ks must be non-empty with every k > 1".into(),
        ));
    }
    if config.run.directions < 4 {
        return Err(CliError::ConfigInvalid("run.directions must be >= 4".into()));
    }
    if !config.run.asymptotics_radii.is_empty() {
        if !matches!(model, WaveModel::Polyharmonic { .. }) {
            return Err(CliError::ConfigInvalid(
                "run.asymptotics_radii requires the polyharmonic model".into(),
            ));
        }
        if config.run.asymptotics_radii.iter().any(|&r| r < 10.0) {
            return Err(CliError::ConfigInvalid(
                "run.asymptotics_radii must all be >= 10".into(),
            ));
        }
    }
    let (realizations, base_seed) = match pathway {
        PathwayConfig::Analytic => (0, 0),
        PathwayConfig::MonteCarlo => {
            let r = config.run.realizations.ok_or_else(|| {
                CliError::ConfigInvalid("monte-carlo pathway needs run.realizations".into())
            })?;
            if r < 2 {
                return Err(CliError::ConfigInvalid("run.realizations must be >= 2".into()));
            }
            let seed = config.run.base_seed.ok_or_else(|| {
                CliError::ConfigInvalid("monte-carlo pathway needs run.base_seed".into())
            })?;
            (r, seed)
        }
    };
    Ok(ExperimentPlan {
        config,
        model,
        spec,
        pathway,
        cutoff,
        realizations,
        base_seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_through_toml() {
        let text = r#"
schema_version = 1
output_dir = "out"

[model]
kind = "polyharmonic"
d = 2
n = 1

[source]
m = 2.0
s = 3

[source.gaussian_bump]
center = [0.0, 0.1, 0.0]
width = 0.12
amplitude = 1.5

[grid]
points_per_axis = 32
half_width = 2.0

[run]
ks = [8.0, 16.0]
directions = 16
pathway = "analytic"
cutoff = "two-k"
reconstruct = true
leray = false
"#;
        let parsed: ExperimentConfig = toml::from_str(text).unwrap();
        let serialized = toml::to_string(&parsed).unwrap();
        let reparsed: ExperimentConfig = toml::from_str(&serialized).unwrap();
        assert_eq!(parsed, reparsed);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"
schema_version = 1
output_dir = "out"
surprise = 1

[model]
kind = "polyharmonic"
d = 2
n = 1

[source]
m = 2.0
s = 3

[grid]
points_per_axis = 32

[run]
ks = [8.0]
pathway = "analytic"
"#;
        assert!(toml::from_str::<ExperimentConfig>(text).is_err());
    }
}
