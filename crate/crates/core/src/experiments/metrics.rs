use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{DiagnosticsConfig, InitialData, ScenarioConfig};
use crate::averaged::{gradient_check, verify_averaged_identities};
use crate::diagnostics::{
    band, equipartition_index, phase_drift, profile_error, quotient_series, reference_index, rescaled_energy_series,
    trailing_start, ProfileSpec,
};
use crate::error::{Error, Result};
use crate::full::{
    coefficient_envelope, energy_violations, fit_decay, fit_rescaled_bounds, integrate_full, verify_energy_identity,
    verify_polar_reduction, Sampler,
};
use crate::oscillatory::{
    bernoulli_harness, osc_bound_sweep, prop_r_harness, random_osc_cases, time_average, AverageKind, ScalarHarnessSpec,
    Signal,
};
use crate::spectral::to_polar;
use crate::trajectory::Trajectory;

/// Named scalar results plus free-form notes on skipped diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metrics {
    pub values: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl Metrics {
    fn set(&mut self, key: &str, v: f64) {
        self.values.insert(key.to_string(), v);
    }

    fn set_band(&mut self, key: &str, b: Option<(f64, f64)>) {
        if let Some((lo, hi)) = b {
            self.set(&format!("{key}.trailing_min"), lo);
            self.set(&format!("{key}.trailing_max"), hi);
        }
    }

    fn note(&mut self, msg: String) {
        self.notes.push(msg);
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Diagnostics that need only the trajectory.
pub(crate) fn trajectory_metrics(traj: &Trajectory, diag: &DiagnosticsConfig) -> Result<Metrics> {
    let mut m = Metrics::default();
    let spec = traj
        .spectrum()
        .ok_or_else(|| Error::invalid("full-system trajectory without spectrum"))?
        .clone();
    let rescaled = rescaled_energy_series(traj);
    m.set_band("rescaled", rescaled.trailing);
    let Some(ts) = trailing_start(traj) else {
        return Ok(m);
    };
    m.set("trailing_start", ts);
    m.set("t_end", *traj.times().last().expect("nonempty"));

    match verify_energy_identity(traj) {
        Ok(r) => m.set("energy_identity", r),
        Err(e) => m.note(format!("energy identity skipped: {e}")),
    }
    m.set("energy.increases", energy_violations(traj, traj.meta.rel_tol).len() as f64);
    match fit_decay(traj) {
        Ok(f) => {
            m.set("decay.m1", f.m1);
            m.set("decay.m2", f.m2);
            m.set("decay.slope", f.slope);
        }
        Err(e) => m.note(format!("decay fit skipped: {e}")),
    }
    if let Ok((lo, hi)) = fit_rescaled_bounds(traj) {
        m.set("polar_energy.min", lo);
        m.set("polar_energy.max", hi);
    }
    match coefficient_envelope(traj) {
        Ok((slope, m5)) => {
            m.set("g.envelope_slope", slope);
            m.set("g.m5", m5);
        }
        Err(e) => m.note(format!("coefficient envelope skipped: {e}")),
    }

    let support = traj.meta.support.clone();
    if support.is_empty() {
        m.set("modal.trailing_max", 0.0);
        return Ok(m);
    }
    let times = traj.times();
    let d = traj.diagnostics();
    let initial_max = support
        .indices()
        .iter()
        .map(|&k| (1.0 + times[0]) * d[0].modal[k])
        .fold(0.0, f64::max);
    let trailing_max = times
        .iter()
        .zip(d)
        .filter(|(t, _)| **t >= ts)
        .flat_map(|(t, dd)| dd.modal.iter().map(move |e| (1.0 + t) * e))
        .fold(0.0, f64::max);
    m.set("modal.initial_max", initial_max);
    m.set("modal.trailing_max", trailing_max);
    if initial_max > 0.0 {
        m.set("modal.trailing_max_rel", trailing_max / initial_max);
    }

    let eq = equipartition_index(traj, &support)?;
    m.set_band("equipartition", band(eq.iter().filter(|p| p.0 >= ts).map(|p| p.1)));
    if let Some((lo, _)) = band(eq.iter().map(|p| p.1)) {
        m.set("equipartition.min", lo);
    }

    if support.len() >= 2 {
        let h = reference_index(traj, diag.reference_time)?;
        m.set("quotient.reference_mode", (h + 1) as f64);
        let mut values = Vec::new();
        for &k in support.indices().iter().filter(|&&k| k != h) {
            let q = quotient_series(traj, h, k)?;
            values.extend(q.iter().filter(|p| p.0 >= ts).map(|p| p.1));
        }
        m.set_band("quotient", band(values));
    }

    if diag.phase_drift {
        let mut worst: f64 = 0.0;
        let mut decreasing = true;
        let mut thetas = Vec::new();
        let mut ok = true;
        for &k in support.indices() {
            match phase_drift(traj, k, 0.0) {
                Ok(p) => {
                    worst = worst.max(p.final_variation());
                    decreasing &= p.decreasing();
                    thetas.push(p.theta_inf);
                }
                Err(e) => {
                    m.note(format!("phase drift of mode {} skipped: {e}", k + 1));
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            m.set("phase_drift.final_variation", worst);
            m.set("phase_drift.decreasing", flag(decreasing));
            if diag.profile {
                let profile = ProfileSpec::limit(&spec, &support, &thetas)?;
                let err = profile_error(traj, &profile)?;
                if let Some((_, hi)) = band(err.iter().filter(|p| p.0 >= ts).map(|p| p.1)) {
                    m.set("profile_error.trailing_max", hi);
                }
            }
        }
    }
    Ok(m)
}

/// Metrics of a full run, including reruns requested by the diagnostics
/// section (halved spacing) and the component ratio for proportional data.
pub fn full_metrics(traj: &Trajectory, cfg: &ScenarioConfig) -> Result<Metrics> {
    let mut m = trajectory_metrics(traj, &cfg.diagnostics)?;
    let spec = traj.spectrum().expect("full trajectory").clone();

    if let Some(InitialData::ProportionalPair { c, .. }) = &cfg.initial {
        let mut dev: f64 = 0.0;
        for s in traj.modal_states()? {
            let p = to_polar(s, &spec)?;
            if p.rho[0] > 0.0 {
                dev = dev.max((p.rho[1] / p.rho[0] - c).abs());
            }
        }
        m.set("pair.ratio_deviation", dev);
    }

    if cfg.diagnostics.reduction {
        let r = verify_polar_reduction(traj, &spec)?;
        m.set("reduction.sup_rho", r.sup_rho_residual);
        m.set("reduction.sup_theta", r.sup_theta_residual);
        m.set("reduction.m5", r.m5);
        m.set("reduction.m7", r.m7);
        if cfg.diagnostics.halving {
            let icfg = cfg.integrator.as_ref().expect("validated");
            match icfg.sampler {
                Sampler::LogSpaced { count } => {
                    let mut fine = icfg.clone();
                    fine.sampler = Sampler::LogSpaced { count: 2 * count - 1 };
                    let init = cfg.full_initial(&spec)?;
                    let t2 = integrate_full(&init, &spec, &fine)?;
                    let r2 = verify_polar_reduction(&t2, &spec)?;
                    let ratio = (r.sup_rho_residual / r2.sup_rho_residual)
                        .min(r.sup_theta_residual / r2.sup_theta_residual);
                    m.set("reduction.halving_ratio", ratio);
                }
                Sampler::Dyadic => m.note("halving check needs a log_spaced sampler".into()),
            }
        }
    }
    Ok(m)
}

pub fn averaged_metrics(traj: &Trajectory) -> Result<Metrics> {
    let mut m = Metrics::default();
    let states = traj.averaged_states()?;
    let last = *states.last().ok_or_else(|| Error::invalid("trajectory is empty"))?;
    let support = traj.meta.support.clone();
    m.set("s_end", last.s);
    m.set("final.R", last.rescaled_energy());
    m.set("final.max_rho", last.rho.iter().copied().fold(0.0, f64::max));
    if let Some(s) = traj.meta.stats.stopped_early_at {
        m.set("stopped_early_at", s);
    }
    if !support.is_empty() {
        let j = support.len() as f64;
        let a = 2.0 / (2.0 * j + 1.0).sqrt();
        let dev = support
            .indices()
            .iter()
            .map(|&k| (last.rho[k] - a).abs())
            .fold(0.0, f64::max);
        m.set("final.profile_deviation", dev);
        m.set("final.R_deviation", (last.rescaled_energy() - 4.0 * j / (2.0 * j + 1.0)).abs());
        m.set(
            "final.min_rho",
            support.indices().iter().map(|&k| last.rho[k]).fold(f64::INFINITY, f64::min),
        );
    }
    m.set_band("rescaled", rescaled_energy_series(traj).trailing);
    if states.len() >= 3 {
        let r = verify_averaged_identities(traj)?;
        m.set("identity.energy_residual", r.energy_residual);
        if let Some(q) = r.quotient_residual {
            m.set("identity.quotient_residual", q);
        }
        if let Some(n) = r.notice {
            m.note(n);
        }
    }
    Ok(m)
}

pub(crate) fn gradient_metrics(cfg: &ScenarioConfig) -> Metrics {
    let g = cfg.gradient.clone().unwrap_or(super::config::GradientConfig {
        states: 100,
        modes: 8,
    });
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let states: Vec<Vec<f64>> = (0..g.states)
        .map(|_| (0..g.modes).map(|_| rng.random_range(0.01..2.0)).collect())
        .collect();
    let r = gradient_check(&states);
    let mut m = Metrics::default();
    m.set("gradient.states", r.states as f64);
    m.set("gradient.max_rel_error", r.max_rel_error);
    m.set("gradient.rhs_mismatches", r.rhs_mismatches as f64);
    m
}

pub(crate) fn oscillatory_metrics(cfg: &ScenarioConfig) -> Result<Metrics> {
    let o = cfg.oscillatory.clone().unwrap_or(super::config::OscillatoryConfig {
        per_alpha: 50,
        horizon: 50.0,
    });
    let mut m = Metrics::default();
    let sweep = osc_bound_sweep(&random_osc_cases(cfg.seed, o.per_alpha))?;
    m.set("osc.cases", sweep.cases as f64);
    m.set("osc.violations", sweep.violations.len() as f64);
    m.set("osc.max_ratio", sweep.max_ratio);
    let kinds = [
        ("sin2", AverageKind::Sin2 { lambda: 1.0 }),
        ("sin4", AverageKind::Sin4 { lambda: 2.0 }),
        ("sin2sin2", AverageKind::Sin2Sin2 { lambda: 2.0, mu: 1.0 }),
        ("sin2sin2_equal", AverageKind::Sin2Sin2 { lambda: 1.0, mu: 1.0 }),
    ];
    for (name, kind) in kinds {
        let v = time_average(kind, o.horizon)?;
        m.set(&format!("avg.{name}"), v);
        m.set(&format!("avg.{name}_error"), (v - kind.limit()).abs());
    }
    // distance of the equal-frequency case from the independent value 1/4
    let eq = m.values["avg.sin2sin2_equal"];
    m.set("avg.sin2sin2_equal_gap", eq - 0.25);
    Ok(m)
}

pub(crate) fn harness_metrics(cfg: &ScenarioConfig) -> Result<Metrics> {
    let h = cfg.harness.clone().unwrap_or(super::config::HarnessConfig {
        prop_r_t_end: 40.0,
        bernoulli_t_end: 30.0,
    });
    let mut m = Metrics::default();

    let spec = ScalarHarnessSpec {
        z0: 1.0,
        z_inf: 2.0,
        psi1: Signal::chirp(1.0, 1.0),
        psi2: Signal::Exp { amp: 1.0, rate: 1.0 },
        ..Default::default()
    };
    let r = prop_r_harness(&spec, h.prop_r_t_end)?;
    let err = r
        .schedules
        .iter()
        .map(|s| (s.final_value - spec.z_inf).abs())
        .fold(0.0, f64::max);
    m.set("prop_r.max_error", err);
    m.set("prop_r.schedules", r.schedules.len() as f64);
    m.set("prop_r.converged", flag(r.converged));
    m.set("prop_r.hypothesis_violations", r.violations.len() as f64);
    for v in r.violations {
        m.note(format!("prop_r: {v}"));
    }

    let auto = ScalarHarnessSpec {
        z0: 3.0,
        ..Default::default()
    };
    let b = bernoulli_harness(&auto, h.bernoulli_t_end)?;
    m.set("bernoulli.final_error", (b.final_value - 1.0).abs());

    let thr = ScalarHarnessSpec {
        z0: 1.0,
        beta: Signal::chirp(1.0, 1.0),
        start: crate::oscillatory::Start::Threshold,
        ..Default::default()
    };
    let b = bernoulli_harness(&thr, h.bernoulli_t_end)?;
    m.set("bernoulli.t0", b.t0_threshold);
    m.set("bernoulli.sup_after_t0", b.sup_after_t0);
    m.set("bernoulli.implication", flag(b.implication_holds));
    m.set("bernoulli.hypothesis_violations", b.violations.len() as f64);
    for v in b.violations {
        m.note(format!("bernoulli: {v}"));
    }
    Ok(m)
}
