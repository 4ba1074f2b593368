use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use skwave_cli::output::{sha256_hex, MANIFEST_FILE, RESULTS_FILE, SUMMARY_FILE};
use skwave_cli::Manifest;

fn skwave(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_skwave"));
    cmd.args(args).env_remove("SKWAVE_SEED");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("skwave runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> (PathBuf, PathBuf) {
    let out = dir.join(format!("{name}-out"));
    let path = dir.join(format!("{name}.toml"));
    fs::write(&path, format!("output = \"{}\"\n{body}", out.display())).unwrap();
    (path, out)
}

fn results(dir: &Path) -> String {
    fs::read_to_string(dir.join(RESULTS_FILE)).unwrap()
}

fn edit_seed(manifest: &Path, seed: u64) -> PathBuf {
    let mut m: Manifest = toml::from_str(&fs::read_to_string(manifest).unwrap()).unwrap();
    m.config.seed = seed;
    let edited = manifest.with_file_name("edited.toml");
    fs::write(&edited, m.to_toml()).unwrap();
    edited
}

#[test]
fn negative_dt_is_a_config_error_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, out) = write_config(dir.path(), "bad", "experiment = \"coupling\"\n[sim]\ndt = -0.001\n");
    let o = skwave(&["run", cfg.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("dt"));
    assert!(!out.exists());
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, out) = write_config(dir.path(), "typo", "experiment = \"verify-bounds\"\n[sweep]\nmu_gird = [0.1]\n");
    let o = skwave(&["run", cfg.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn verify_semigroup_defaults_pass_and_list_every_check() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, out) = write_config(dir.path(), "vs", "experiment = \"verify-semigroup\"\n");
    let o = skwave(&["run", cfg.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(out.join(SUMMARY_FILE)).unwrap();
    for check in [
        "mode_bound:overdamped_position",
        "mode_bound:underdamped_velocity",
        "mode_bound:energy",
        "mode_bound:undamped_position",
        "operator_norm:forcing_response",
        "operator_norm:velocity_low_modes",
        "operator_norm:shifted_phase_space",
    ] {
        let line = summary
            .lines()
            .find(|l| l.starts_with(&format!("assertion,{check},")))
            .unwrap_or_else(|| panic!("{check} missing from summary"));
        assert!(line.contains(",pass,") && line.contains("min slack"), "{line}");
    }
    let manifest: Manifest = toml::from_str(&fs::read_to_string(out.join(MANIFEST_FILE)).unwrap()).unwrap();
    assert_eq!(manifest.run.results_sha256, sha256_hex(results(&out).as_bytes()));
    assert_eq!(manifest.config.operator.modes, 512);
}

#[test]
fn single_mass_sweep_skips_trends_with_a_notice() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, out) = write_config(
        dir.path(),
        "sk1",
        "experiment = \"sk-sweep\"\nsamples = 4\n[operator]\nmodes = 8\n[coefficients]\nmollify = 8\n\
         [sim]\ngrid = 32\ndt = 1e-3\nhorizon = 0.1\nrecord_every = 10\n\
         [sweep]\nmu_grid = [0.1]\ndistance_threshold = 10.0\n",
    );
    let o = skwave(&["run", cfg.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("notice: mu_grid holds a single mass"));
    assert!(stdout.contains("[skipped] sk:distance_trend"));
    let summary = fs::read_to_string(out.join(SUMMARY_FILE)).unwrap();
    assert!(summary.contains("assertion,sk:energy_gap_trend,,,,,skipped,"));
}

#[test]
fn failed_assertion_exits_one_and_names_the_check() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, out) = write_config(
        dir.path(),
        "strict",
        "experiment = \"convolution-scaling\"\nsamples = 8\n[operator]\nmodes = 16\n\
         [sweep]\nlambda_grid = [1.0, 2.0]\nslope_threshold = -100.0\n",
    );
    let o = skwave(&["run", cfg.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("scaling:slope"));
    assert!(out.join(RESULTS_FILE).exists());
}

#[test]
fn rerun_reproduces_the_results_hash() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, out) = write_config(
        dir.path(),
        "cp",
        "experiment = \"coupling\"\nseed = 3\nsamples = 12\n[sweep]\nn_grid = [16, 64]\n",
    );
    let first = skwave(&["run", cfg.to_str().unwrap()], &[]);
    let code = first.status.code();
    let manifest = out.join(MANIFEST_FILE);
    let again = dir.path().join("again");
    let o = skwave(
        &["rerun", manifest.to_str().unwrap(), "--out", again.to_str().unwrap(), "--workers", "2"],
        &[],
    );
    assert_eq!(o.status.code(), code, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("reproduced byte for byte"));
    assert_eq!(results(&out), results(&again));
}

#[test]
fn edited_seed_changes_only_stochastic_results() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, out) = write_config(
        dir.path(),
        "sc",
        "experiment = \"self-convergence\"\nseed = 1\nsamples = 6\n[operator]\nmodes = 8\n[sim]\ngrid = 32\n",
    );
    skwave(&["run", cfg.to_str().unwrap()], &[]);
    let edited = edit_seed(&out.join(MANIFEST_FILE), 2);
    let rerun = dir.path().join("sc-rerun");
    let o = skwave(&["rerun", edited.to_str().unwrap(), "--out", rerun.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("hash differs"));
    assert_ne!(results(&out), results(&rerun));

    let (cfg, out) = write_config(
        dir.path(),
        "vs",
        "experiment = \"verify-semigroup\"\nseed = 1\n[operator]\nmodes = 32\n",
    );
    skwave(&["run", cfg.to_str().unwrap()], &[]);
    let edited = edit_seed(&out.join(MANIFEST_FILE), 2);
    let rerun = dir.path().join("vs-rerun");
    let o = skwave(&["rerun", edited.to_str().unwrap(), "--out", rerun.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(results(&out), results(&rerun));
}

#[test]
fn verify_bounds_ignores_the_seed_and_env_seed_applies() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, out) = write_config(dir.path(), "vb", "experiment = \"verify-bounds\"\n[operator]\nmodes = 32\n");
    assert_eq!(skwave(&["run", cfg.to_str().unwrap()], &[]).status.code(), Some(0));
    let a = results(&out);
    assert_eq!(
        skwave(&["run", cfg.to_str().unwrap()], &[("SKWAVE_SEED", "99")]).status.code(),
        Some(0)
    );
    assert_eq!(a, results(&out));
    let manifest: Manifest = toml::from_str(&fs::read_to_string(out.join(MANIFEST_FILE)).unwrap()).unwrap();
    assert_eq!(manifest.config.seed, 99);
    assert_eq!(manifest.run.seed, 99);
}

#[test]
fn list_and_schema() {
    let o = skwave(&["list-experiments"], &[]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    for name in ["verify-semigroup", "verify-bounds", "sk-sweep", "coupling", "convolution-scaling", "self-convergence"] {
        assert!(text.contains(name));
    }
    let o = skwave(&["print-schema"], &[]);
    assert!(o.status.success());
    let schema = String::from_utf8_lossy(&o.stdout);
    assert!(skwave_cli::ExperimentConfig::parse(&schema, None).is_ok());
}
