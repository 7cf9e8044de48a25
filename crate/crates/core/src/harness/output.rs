use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{build_tag, FigureOutput, PatternResult, SweepResult};
use crate::config::SystemConfig;
use crate::error::Result;

/// Sidecar written once per run next to its CSV files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub run: String,
    pub build: String,
    pub seed: u64,
    pub config: SystemConfig,
    pub sweeps: Vec<SweepResult>,
    pub pattern_files: Vec<String>,
}

fn file_name(id: &str, seed: u64, ext: &str) -> String {
    format!("{id}_{seed}.{ext}")
}

/// Writes `x,mean,std_error,n_trials` rows to `<sweep_id>_<seed>.csv`.
pub fn write_sweep_csv(dir: &Path, sweep: &SweepResult) -> Result<PathBuf> {
    let mut text = String::from("x,mean,std_error,n_trials\n");
    for p in &sweep.points {
        writeln!(text, "{},{},{},{}", p.x, p.mean, p.std_error, p.trial_count)
            .expect("string write");
    }
    let path = dir.join(file_name(&sweep.sweep_id, sweep.metadata.seed, "csv"));
    fs::write(&path, text)?;
    Ok(path)
}

/// Writes `theta_deg,power,power_db` rows to `<pattern_id>_<seed>.csv`.
pub fn write_pattern_csv(dir: &Path, pattern: &PatternResult, seed: u64) -> Result<PathBuf> {
    let mut text = String::from("theta_deg,power,power_db\n");
    for s in &pattern.samples {
        writeln!(
            text,
            "{:.4},{},{}",
            s.theta_rad.to_degrees(),
            s.power,
            s.power_db
        )
        .expect("string write");
    }
    let path = dir.join(file_name(&pattern.pattern_id, seed, "csv"));
    fs::write(&path, text)?;
    Ok(path)
}

pub fn write_run_metadata(dir: &Path, meta: &RunMetadata) -> Result<PathBuf> {
    let path = dir.join(file_name(&meta.run, meta.seed, "json"));
    let text = serde_json::to_string_pretty(meta).expect("metadata is serializable");
    fs::write(&path, text + "\n")?;
    Ok(path)
}

/// Writes every sweep and pattern of a run plus its metadata sidecar into
/// `dir` (created if missing). Returns the written paths.
pub fn write_run(
    dir: &Path,
    run: &str,
    cfg: &SystemConfig,
    output: &FigureOutput,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for s in &output.rates {
        paths.push(write_sweep_csv(dir, s)?);
    }
    let mut pattern_files = Vec::new();
    for p in &output.patterns {
        let path = write_pattern_csv(dir, p, cfg.base_seed)?;
        pattern_files.push(
            path.file_name()
                .expect("file")
                .to_string_lossy()
                .into_owned(),
        );
        paths.push(path);
    }
    let meta = RunMetadata {
        run: run.to_string(),
        build: build_tag(),
        seed: cfg.base_seed,
        config: cfg.clone(),
        sweeps: output.rates.clone(),
        pattern_files,
    };
    paths.push(write_run_metadata(dir, &meta)?);
    Ok(paths)
}
