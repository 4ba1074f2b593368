//! Results file, CSV summary and run manifest.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::experiments::{Record, Report};

pub const RESULTS_FILE: &str = "results.txt";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const MANIFEST_FILE: &str = "manifest.toml";

/// Identifies the build that produced a run.
pub fn build_fingerprint() -> String {
    format!(
        "skwave-cli {} {} {}-{}",
        env!("CARGO_PKG_VERSION"),
        if cfg!(debug_assertions) { "debug" } else { "release" },
        std::env::consts::ARCH,
        std::env::consts::OS
    )
}

/// `experiment,params,statistic,value,stderr,n,seed`, numbers with 17
/// significant digits.
pub fn format_record(r: &Record) -> String {
    format!(
        "{},{},{},{:.16e},{:.16e},{},{}",
        r.experiment,
        r.params_string(),
        r.statistic,
        r.value,
        r.stderr,
        r.n,
        r.seed.map_or_else(|| "-".to_string(), |s| s.to_string())
    )
}

pub fn results_text(report: &Report) -> String {
    let mut out = String::new();
    for r in &report.records {
        out.push_str(&format_record(r));
        out.push('\n');
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn summary_csv(report: &Report) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["kind", "name", "params", "value", "stderr", "n", "status", "detail"])?;
    for r in &report.records {
        w.write_record([
            "statistic",
            &r.statistic,
            &r.params_string(),
            &format!("{:.6e}", r.value),
            &format!("{:.2e}", r.stderr),
            &r.n.to_string(),
            "",
            "",
        ])?;
    }
    for c in &report.checks {
        w.write_record(["assertion", &c.name, "", "", "", "", c.status(), &c.detail])?;
    }
    for n in &report.notices {
        w.write_record(["notice", "", "", "", "", "", "", n])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("utf-8 csv"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunInfo {
    pub fingerprint: String,
    pub seed: u64,
    pub workers: usize,
    pub results: String,
    pub results_sha256: String,
    pub summary: String,
    pub records: usize,
    pub assertions_passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub run: RunInfo,
    pub config: ExperimentConfig,
}

impl Manifest {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("serialisable manifest")
    }
}

/// Writes the three artefacts into `dir` and returns the manifest.
pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, report: &Report) -> io::Result<Manifest> {
    fs::create_dir_all(dir)?;
    let results = results_text(report);
    let summary = summary_csv(report).map_err(io::Error::other)?;
    fs::write(dir.join(RESULTS_FILE), &results)?;
    fs::write(dir.join(SUMMARY_FILE), summary)?;
    let manifest = Manifest {
        run: RunInfo {
            fingerprint: build_fingerprint(),
            seed: cfg.seed,
            workers: cfg.workers,
            results: RESULTS_FILE.into(),
            results_sha256: sha256_hex(results.as_bytes()),
            summary: SUMMARY_FILE.into(),
            records: report.records.len(),
            assertions_passed: report.all_passed(),
        },
        config: cfg.clone(),
    };
    fs::write(dir.join(MANIFEST_FILE), manifest.to_toml())?;
    Ok(manifest)
}

/// Compares two results files field by field, numbers to relative `tol`.
/// Returns the first differing line.
pub fn compare_results(a: &str, b: &str, tol: f64) -> Result<(), String> {
    let la: Vec<&str> = a.lines().collect();
    let lb: Vec<&str> = b.lines().collect();
    if la.len() != lb.len() {
        return Err(format!("{} records vs {}", la.len(), lb.len()));
    }
    for (i, (x, y)) in la.iter().zip(&lb).enumerate() {
        let fx: Vec<&str> = x.split(',').collect();
        let fy: Vec<&str> = y.split(',').collect();
        let same = fx.len() == fy.len()
            && fx.iter().zip(&fy).all(|(p, q)| {
                p == q
                    || match (p.parse::<f64>(), q.parse::<f64>()) {
                        (Ok(u), Ok(v)) => (u - v).abs() <= tol * u.abs().max(v.abs()),
                        _ => false,
                    }
            });
        if !same {
            return Err(format!("line {}: `{x}` vs `{y}`", i + 1));
        }
    }
    Ok(())
}
