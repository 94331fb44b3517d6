use std::fs;

use tempfile::TempDir;

use equipart::experiments::{
    compute, emit_outputs, run_scenario, run_sweep, series_csv, sha256_hex, verify_checksums, RunManifest, RunStatus,
    ScenarioConfig, MANIFEST_FILE, SERIES_FILE, SUMMARY_FILE,
};
use equipart::{Trajectory, TrajectoryMeta};

const AVERAGED: &str = r#"
schema_version = 1
id = "avg"
kind = "averaged"

[spectrum]
count = 3

[initial]
family = "finite_modes"
modes = [1, 3]
amplitudes = [1.0, 0.3]

[averaged]
s_end = 40.0

[[criteria]]
name = "R near 8/5"
metric = "final.R"
min = 1.599
max = 1.601
"#;

const FULL: &str = r#"
schema_version = 1
id = "full"
kind = "full"
seed = 3

[spectrum]
count = 2
generator = { kind = "explicit", lambdas = [1.0, 2.0] }

[initial]
family = "finite_modes"
modes = [1, 2]
amplitudes = [0.9, 0.5]

[integrator]
rel_tol = 1e-9
abs_tol = 1e-11
t_end = 100.0
sampler = { kind = "dyadic" }
"#;

#[test]
fn config_round_trips_through_toml_and_manifest() {
    let cfg = ScenarioConfig::from_toml(FULL).unwrap();
    let again = ScenarioConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
    assert_eq!(cfg, again);

    let tmp = TempDir::new().unwrap();
    let m = run_scenario(&cfg, tmp.path()).unwrap();
    let loaded = RunManifest::load(&tmp.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(loaded.config, cfg);
    assert_eq!(loaded.files, m.files);
    assert_eq!(m.status, RunStatus::Passed);
}

#[test]
fn averaged_run_reaches_two_mode_profile() {
    let cfg = ScenarioConfig::from_toml(AVERAGED).unwrap();
    let c = compute(&cfg).unwrap();
    let rho = &c.trajectory.unwrap().averaged_states().unwrap().last().unwrap().rho.clone();
    let a = 2.0 / 5f64.sqrt();
    assert!((rho[0] - a).abs() < 1e-3 && rho[1] == 0.0 && (rho[2] - a).abs() < 1e-3, "{rho:?}");
}

#[test]
fn compute_is_deterministic() {
    let cfg = ScenarioConfig::from_toml(FULL).unwrap();
    let a = compute(&cfg).unwrap();
    let b = compute(&cfg).unwrap();
    assert_eq!(a.metrics.values, b.metrics.values);
    let ta = a.trajectory.unwrap();
    let tb = b.trajectory.unwrap();
    assert_eq!(series_csv(&ta, true).unwrap(), series_csv(&tb, true).unwrap());
}

#[test]
fn manifest_checksums_match_files() {
    let cfg = ScenarioConfig::from_toml(AVERAGED).unwrap();
    let tmp = TempDir::new().unwrap();
    let m = run_scenario(&cfg, tmp.path()).unwrap();
    let names: Vec<&str> = m.files.iter().map(|f| f.name.as_str()).collect();
    assert_eq!(names, [SERIES_FILE, SUMMARY_FILE]);
    for f in &m.files {
        let bytes = fs::read(tmp.path().join(&f.name)).unwrap();
        assert_eq!(f.bytes, bytes.len() as u64);
        assert_eq!(f.sha256, sha256_hex(&bytes));
    }
    assert!(verify_checksums(tmp.path(), &m.files).unwrap());
    fs::write(tmp.path().join(SERIES_FILE), "t\n").unwrap();
    assert!(!verify_checksums(tmp.path(), &m.files).unwrap());
}

#[test]
fn sha256_of_known_input() {
    assert_eq!(
        sha256_hex(b"abc"),
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    );
}

#[test]
fn failing_criterion_is_recorded() {
    let text = AVERAGED.replace("min = 1.599", "min = 1.7").replace("max = 1.601", "max = 1.8");
    let cfg = ScenarioConfig::from_toml(&text).unwrap();
    let tmp = TempDir::new().unwrap();
    let m = run_scenario(&cfg, tmp.path()).unwrap();
    assert_eq!(m.status, RunStatus::CriteriaFailed);
    assert_eq!(m.status.exit_code(), 1);
    assert!(!m.criteria[0].pass);
}

#[test]
fn sweep_runs_every_point() {
    let text = format!("{AVERAGED}\n[sweep]\nparameter = \"count\"\nvalues = [3, 5]\n");
    let cfg = ScenarioConfig::from_toml(&text).unwrap();
    let tmp = TempDir::new().unwrap();
    let results = run_sweep(&cfg, tmp.path()).unwrap();
    assert_eq!(results.len(), 2);
    for r in results {
        let m = r.unwrap();
        assert!(tmp.path().join(&m.id).join(MANIFEST_FILE).is_file());
    }
}

#[test]
fn emit_outputs_rejects_empty_trajectory_without_writing() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("out");
    let err = emit_outputs(&Trajectory::new(TrajectoryMeta::default()), &dir);
    assert!(err.is_err());
    assert!(!dir.exists());
}

#[test]
fn emit_outputs_writes_series_and_summary() {
    let cfg = ScenarioConfig::from_toml(FULL).unwrap();
    let traj = compute(&cfg).unwrap().trajectory.unwrap();
    let tmp = TempDir::new().unwrap();
    let paths = emit_outputs(&traj, tmp.path()).unwrap();
    assert_eq!(paths.len(), 2);
    let csv = fs::read_to_string(&paths[0]).unwrap();
    assert_eq!(csv.lines().next(), Some("t,E,tE,e_1,e_2"));
    assert_eq!(csv.lines().count(), traj.len() + 1);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(&paths[1]).unwrap()).unwrap();
    assert_eq!(summary["kind"], "full");
}

#[test]
fn unwritable_directory_fails_before_compute() {
    let tmp = TempDir::new().unwrap();
    let blocker = tmp.path().join("f");
    fs::write(&blocker, "x").unwrap();
    let cfg = ScenarioConfig::from_toml(FULL).unwrap();
    assert!(run_scenario(&cfg, &blocker.join("sub")).is_err());
}
