//! Scenario runner: configuration, execution, summary metrics and
//! persistence of series, summaries and manifests.

mod config;
mod metrics;
mod output;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

pub use config::{
    AveragedRunConfig, CriterionSpec, DiagnosticsConfig, GradientConfig, HarnessConfig, InitialData,
    OscillatoryConfig, ScenarioConfig, ScenarioKind, SpectrumConfig, SweepConfig, SCHEMA_VERSION,
};
pub use metrics::{averaged_metrics, full_metrics, Metrics};
pub use output::{
    prepare_dir, series_csv, sha256_hex, verify_checksums, FileEntry, MANIFEST_FILE, SERIES_FILE, SUMMARY_FILE,
};

use crate::error::{Error, Result};
use crate::par;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub name: String,
    pub metric: String,
    pub value: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub pass: bool,
}

impl CriterionResult {
    pub fn evaluate(spec: &CriterionSpec, metrics: &BTreeMap<String, f64>) -> Self {
        let value = metrics.get(&spec.metric).copied();
        let pass = value.is_some_and(|v| {
            !v.is_nan() && spec.min.is_none_or(|m| v >= m) && spec.max.is_none_or(|m| v <= m)
        });
        Self {
            name: spec.name.clone(),
            metric: spec.metric.clone(),
            value,
            min: spec.min,
            max: spec.max,
            pass,
        }
    }
}

/// Deterministic result of a run (no wall-clock data).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub id: String,
    pub kind: String,
    pub metrics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub criteria: Vec<CriterionResult>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Passed,
    CriteriaFailed,
    Error,
}

impl RunStatus {
    /// 0 = all criteria pass, 1 = criterion failure, 2 = execution error.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunStatus::Passed => 0,
            RunStatus::CriteriaFailed => 1,
            RunStatus::Error => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionStatus {
    pub name: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub id: String,
    pub config: ScenarioConfig,
    pub code_version: String,
    /// Seconds since the Unix epoch.
    pub started_at: f64,
    pub finished_at: f64,
    pub status: RunStatus,
    pub criteria: Vec<CriterionStatus>,
    pub files: Vec<FileEntry>,
    pub failure: Option<String>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Result of the computational part of a scenario.
pub struct Computed {
    pub trajectory: Option<Trajectory>,
    pub metrics: Metrics,
    pub failure: Option<String>,
}

/// Runs the solver(s) and diagnostics of a scenario without touching disk.
pub fn compute(cfg: &ScenarioConfig) -> Result<Computed> {
    cfg.validate()?;
    match cfg.kind {
        ScenarioKind::Full => {
            let spec = cfg.build_spectrum()?;
            let init = cfg.full_initial(&spec)?;
            let icfg = cfg.integrator.as_ref().expect("validated");
            match crate::full::integrate_full(&init, &spec, icfg) {
                Ok(mut traj) => {
                    traj.meta.scenario = cfg.id.clone();
                    let metrics = full_metrics(&traj, cfg)?;
                    Ok(Computed {
                        trajectory: Some(traj),
                        metrics,
                        failure: None,
                    })
                }
                Err(Error::IntegrationFailure { at, reason, partial }) => {
                    let mut traj = *partial;
                    traj.meta.scenario = cfg.id.clone();
                    Ok(Computed {
                        trajectory: Some(traj),
                        metrics: Metrics::default(),
                        failure: Some(format!("integration failure at t = {at}: {reason}")),
                    })
                }
                Err(e) => Err(e),
            }
        }
        ScenarioKind::Averaged => {
            let init = cfg.averaged_initial()?;
            let a = cfg.averaged.as_ref().expect("validated");
            let opts = crate::averaged::AveragedOptions {
                tol: a.tol,
                sample_spacing: a.sample_spacing,
                ..Default::default()
            };
            match crate::averaged::integrate_averaged_with(&init, a.s_end, &opts) {
                Ok(mut traj) => {
                    traj.meta.scenario = cfg.id.clone();
                    let metrics = averaged_metrics(&traj)?;
                    Ok(Computed {
                        trajectory: Some(traj),
                        metrics,
                        failure: None,
                    })
                }
                Err(Error::IntegrationFailure { at, reason, partial }) => Ok(Computed {
                    trajectory: Some(*partial),
                    metrics: Metrics::default(),
                    failure: Some(format!("integration failure at s = {at}: {reason}")),
                }),
                Err(e) => Err(e),
            }
        }
        ScenarioKind::Gradient => Ok(Computed {
            trajectory: None,
            metrics: metrics::gradient_metrics(cfg),
            failure: None,
        }),
        ScenarioKind::Oscillatory => Ok(Computed {
            trajectory: None,
            metrics: metrics::oscillatory_metrics(cfg)?,
            failure: None,
        }),
        ScenarioKind::Harness => Ok(Computed {
            trajectory: None,
            metrics: metrics::harness_metrics(cfg)?,
            failure: None,
        }),
    }
}

/// Runs a scenario and writes `series.csv` (for trajectory scenarios),
/// `summary.json` and `manifest.json` into `dir`.
///
/// The directory is checked for writability before anything is computed.
/// Solver failures are recorded in the manifest together with the partial
/// series; other errors are returned.
pub fn run_scenario(cfg: &ScenarioConfig, dir: &Path) -> Result<RunManifest> {
    cfg.validate()?;
    prepare_dir(dir)?;
    let started_at = now();
    let computed = compute(cfg)?;
    let mut files = Vec::new();
    if let Some(traj) = computed.trajectory.as_ref().filter(|t| !t.is_empty()) {
        let csv = series_csv(traj, cfg.diagnostics.polar_columns)?;
        files.push(output::write_atomic(dir, SERIES_FILE, csv.as_bytes())?);
    }
    let criteria: Vec<CriterionResult> = cfg
        .criteria
        .iter()
        .map(|c| CriterionResult::evaluate(c, &computed.metrics.values))
        .collect();
    let summary = Summary {
        id: cfg.id.clone(),
        kind: cfg.kind.name().into(),
        metrics: computed.metrics.values,
        notes: computed.metrics.notes,
        criteria: criteria.clone(),
        failure: computed.failure.clone(),
    };
    files.push(output::write_atomic(dir, SUMMARY_FILE, output::to_json(&summary)?.as_bytes())?);
    let status = if computed.failure.is_some() {
        RunStatus::Error
    } else if criteria.iter().all(|c| c.pass) {
        RunStatus::Passed
    } else {
        RunStatus::CriteriaFailed
    };
    let manifest = RunManifest {
        id: cfg.id.clone(),
        config: cfg.clone(),
        code_version: env!("CARGO_PKG_VERSION").into(),
        started_at,
        finished_at: now(),
        status,
        criteria: criteria
            .iter()
            .map(|c| CriterionStatus {
                name: c.name.clone(),
                pass: c.pass,
            })
            .collect(),
        files,
        failure: computed.failure,
    };
    output::write_atomic(dir, MANIFEST_FILE, output::to_json(&manifest)?.as_bytes())?;
    Ok(manifest)
}

/// Writes `series.csv` and a trajectory-only `summary.json` into `dir`.
pub fn emit_outputs(traj: &Trajectory, dir: &Path) -> Result<Vec<PathBuf>> {
    if traj.is_empty() {
        return Err(Error::invalid("trajectory is empty"));
    }
    let metrics = if traj.is_modal() {
        metrics::trajectory_metrics(traj, &DiagnosticsConfig::default())?
    } else {
        averaged_metrics(traj)?
    };
    let csv = series_csv(traj, false)?;
    prepare_dir(dir)?;
    let summary = Summary {
        id: traj.meta.scenario.clone(),
        kind: if traj.is_modal() { "full" } else { "averaged" }.into(),
        metrics: metrics.values,
        notes: metrics.notes,
        criteria: Vec::new(),
        failure: None,
    };
    let json = output::to_json(&summary)?;
    let mut files = vec![output::write_atomic(dir, SERIES_FILE, csv.as_bytes())?];
    match output::write_atomic(dir, SUMMARY_FILE, json.as_bytes()) {
        Ok(f) => files.push(f),
        Err(e) => {
            let _ = std::fs::remove_file(dir.join(SERIES_FILE));
            return Err(e);
        }
    }
    Ok(output::paths(dir, &files))
}

/// Expands the `[sweep]` grid of `cfg` into one config per value.
pub fn expand_sweep(cfg: &ScenarioConfig) -> Result<Vec<ScenarioConfig>> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config(format!("scenario {:?} has no [sweep] section", cfg.id)))?;
    if sweep.values.is_empty() {
        return Err(Error::Config("sweep has no values".into()));
    }
    sweep
        .values
        .iter()
        .map(|&v| cfg.with_parameter(&sweep.parameter, v))
        .collect()
}

/// Runs every grid point into `dir/<point id>` on the worker pool.
pub fn run_sweep(cfg: &ScenarioConfig, dir: &Path) -> Result<Vec<Result<RunManifest>>> {
    let points = expand_sweep(cfg)?;
    prepare_dir(dir)?;
    Ok(par::map(&points, |p| run_scenario(p, &dir.join(&p.id))))
}

/// One row of an aggregated report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub id: String,
    pub path: String,
    pub status: RunStatus,
    pub criteria: Vec<CriterionStatus>,
    pub checksums_ok: bool,
}

/// Collects every `manifest.json` below `root` (sorted by path).
pub fn collect_manifests(root: &Path) -> Result<Vec<ReportRow>> {
    let mut found = Vec::new();
    for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| Error::io(root, e.into()))?;
        if entry.file_type().is_file() && entry.file_name() == MANIFEST_FILE {
            found.push(entry.into_path());
        }
    }
    found
        .into_iter()
        .map(|path| {
            let m = RunManifest::load(&path)?;
            let dir = path.parent().unwrap_or(root);
            Ok(ReportRow {
                id: m.id.clone(),
                path: dir.display().to_string(),
                status: m.status,
                checksums_ok: verify_checksums(dir, &m.files).unwrap_or(false),
                criteria: m.criteria,
            })
        })
        .collect()
}
