//! Batch experiment runner for the wavecorr laboratory.
//!
//! Verbs:
//!   wavecorr validate <config.toml>
//!   wavecorr run <config.toml>
//!   wavecorr emit <manifest.json> --series <scaling|reconstruction-slice|probe-ratios> [--out <dir>]
//!
//! Exit codes: 0 success, 1 usage, 2 invalid config, 3 stage failure,
//! 4 missing series.

mod config;
mod emit;
mod errors;
mod manifest;
mod pipeline;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use errors::{CliError, Result};

fn usage() -> CliError {
    CliError::Usage(format!(
        "wavecorr <validate|run> <config.toml> | wavecorr emit <manifest.json> --series <{}> [--out <dir>]",
        emit::SERIES.join("|")
    ))
}

fn cmd_validate(path: &Path) -> Result<()> {
    let config = config::load_config(path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let plan = config::build_plan(config, dir)?;
    println!(
        "config ok: {} model, d = {}, m = {}, {} wavenumbers, pathway {}",
        plan.config.model.kind,
        plan.model.dim(),
        plan.spec.m(),
        plan.config.run.ks.len(),
        plan.config.run.pathway,
    );
    Ok(())
}

fn cmd_run(path: &Path) -> Result<()> {
    let config = config::load_config(path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let plan = config::build_plan(config, dir)?;
    let out = pipeline::run(&plan, path)?;
    println!(
        "run complete: {} files, manifest {}",
        out.manifest.files.len(),
        out.manifest_path.display()
    );
    for stage in &out.manifest.stages {
        println!("  stage {:<24} {:>8} ms", stage.name, stage.wall_ms);
    }
    Ok(())
}

fn cmd_emit(manifest: &Path, series: &str, out_dir: Option<&Path>) -> Result<()> {
    let path = emit::emit_series(manifest, series, out_dir)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn dispatch(args: &[String]) -> Result<()> {
    match args.first().map(String::as_str) {
        Some("validate") => {
            let path = args.get(1).ok_or_else(usage)?;
            cmd_validate(Path::new(path))
        }
        Some("run") => {
            let path = args.get(1).ok_or_else(usage)?;
            cmd_run(Path::new(path))
        }
        Some("emit") => {
            let manifest = args.get(1).ok_or_else(usage)?;
            let mut series = None;
            let mut out_dir: Option<PathBuf> = None;
            let mut i = 2;
            while i < args.len() {
                match args[i].as_str() {
                    "--series" => {
                        series = Some(args.get(i + 1).ok_or_else(usage)?.clone());
                        i += 2;
                    }
                    "--out" => {
                        out_dir = Some(PathBuf::from(args.get(i + 1).ok_or_else(usage)?));
                        i += 2;
                    }
                    _ => return Err(usage()),
                }
            }
            let series = series.ok_or_else(usage)?;
            cmd_emit(Path::new(manifest), &series, out_dir.as_deref())
        }
        _ => Err(usage()),
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match dispatch(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
