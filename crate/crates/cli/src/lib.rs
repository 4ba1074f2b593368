//! Config-driven experiments over the skwave simulation core.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod output;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

pub use config::{ConfigError, Experiment, ExperimentConfig, SCHEMA, SEED_ENV};
pub use experiments::{run_experiment, Check, Record, Report, RunError};
pub use output::{build_fingerprint, Manifest};

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    AssertionFailed = 1,
    ConfigError = 2,
    SimulationFailed = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// What `run` or `rerun` produced.
#[derive(Debug)]
pub struct Outcome {
    pub status: ExitStatus,
    pub report: Option<Report>,
    pub output_dir: Option<PathBuf>,
    /// Human-readable lines for stdout (checks, notices) and stderr (failures).
    pub messages: Vec<String>,
    pub errors: Vec<String>,
}

impl Outcome {
    fn failed(status: ExitStatus, error: impl fmt::Display) -> Self {
        Outcome {
            status,
            report: None,
            output_dir: None,
            messages: Vec::new(),
            errors: vec![error.to_string()],
        }
    }
}

/// Runs `cfg` on a pool of `cfg.workers` threads and writes outputs to
/// `cfg.output`. Nothing is written unless the experiment completes.
pub fn execute(cfg: &ExperimentConfig) -> Outcome {
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build() {
        Ok(p) => p,
        Err(e) => return Outcome::failed(ExitStatus::SimulationFailed, e),
    };
    let report = match pool.install(|| run_experiment(cfg)) {
        Ok(r) => r,
        Err(e @ RunError::Config(_)) => return Outcome::failed(ExitStatus::ConfigError, e),
        Err(e) => return Outcome::failed(ExitStatus::SimulationFailed, e),
    };
    let dir = PathBuf::from(&cfg.output);
    if let Err(e) = output::write_outputs(&dir, cfg, &report) {
        return Outcome::failed(
            ExitStatus::ConfigError,
            format!("cannot write outputs to {}: {e}", dir.display()),
        );
    }
    let mut messages: Vec<String> = report.notices.iter().map(|n| format!("notice: {n}")).collect();
    for c in &report.checks {
        messages.push(format!("[{}] {}: {}", c.status(), c.name, c.detail));
    }
    let errors: Vec<String> = report
        .failures()
        .map(|c| format!("assertion failed: {}: {}", c.name, c.detail))
        .collect();
    Outcome {
        status: if errors.is_empty() {
            ExitStatus::Success
        } else {
            ExitStatus::AssertionFailed
        },
        report: Some(report),
        output_dir: Some(dir),
        messages,
        errors,
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))
}

/// `skwave run <config>`; `seed_env` is the value of [`SEED_ENV`].
pub fn run_file(path: &Path, seed_env: Option<&str>) -> Outcome {
    match read(path).and_then(|text| ExperimentConfig::parse(&text, seed_env)) {
        Ok(cfg) => execute(&cfg),
        Err(e) => Outcome::failed(ExitStatus::ConfigError, e),
    }
}

/// `skwave rerun <manifest>`: reruns the recorded configuration and checks
/// the results against the recorded hash. With a different build the
/// comparison falls back to a relative tolerance of `1e-9`.
pub fn rerun_manifest(path: &Path, out: Option<&Path>, workers: Option<usize>) -> Outcome {
    let manifest: Manifest = match read(path).and_then(|t| {
        toml::from_str(&t).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }) {
        Ok(m) => m,
        Err(e) => return Outcome::failed(ExitStatus::ConfigError, e),
    };
    let base = path.parent().unwrap_or(Path::new("."));
    let mut cfg = manifest.config.clone();
    if let Some(w) = workers {
        cfg.workers = w;
    }
    cfg.output = match out {
        Some(o) => o.display().to_string(),
        None => base.join("rerun").display().to_string(),
    };
    // same validation as a fresh run
    let cfg = match ExperimentConfig::parse(&cfg.to_toml(), None) {
        Ok(c) => c,
        Err(e) => return Outcome::failed(ExitStatus::ConfigError, e),
    };
    let mut outcome = execute(&cfg);
    let Some(dir) = outcome.output_dir.clone() else {
        return outcome;
    };
    let fresh = match fs::read_to_string(dir.join(output::RESULTS_FILE)) {
        Ok(s) => s,
        Err(e) => return Outcome::failed(ExitStatus::SimulationFailed, e),
    };
    let same_build = manifest.run.fingerprint == build_fingerprint();
    let verdict = if same_build {
        if output::sha256_hex(fresh.as_bytes()) == manifest.run.results_sha256 {
            Ok("results file reproduced byte for byte".to_string())
        } else {
            Err("results file hash differs from the manifest".to_string())
        }
    } else {
        outcome.messages.push(format!(
            "warning: manifest built by `{}`, this is `{}`; comparing to relative tolerance 1e-9",
            manifest.run.fingerprint,
            build_fingerprint()
        ));
        match fs::read_to_string(base.join(&manifest.run.results)) {
            Ok(old) => output::compare_results(&old, &fresh, 1e-9)
                .map(|_| "results reproduced within 1e-9".to_string())
                .map_err(|e| format!("results differ: {e}")),
            Err(e) => Err(format!("cannot read the original results for comparison: {e}")),
        }
    };
    match verdict {
        Ok(m) => outcome.messages.push(m),
        Err(e) => {
            outcome.errors.push(format!("reproduction failed: {e}"));
            outcome.status = ExitStatus::AssertionFailed;
        }
    }
    outcome
}

pub fn list_experiments() -> String {
    Experiment::ALL
        .iter()
        .map(|e| format!("{:<20} {}\n", e.name(), e.description()))
        .collect()
}
