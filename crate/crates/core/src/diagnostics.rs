//! Post-processing of trajectories: rescaled energy, quotients,
//! equipartition, phase drift and distance to the limit profile.
//!
//! Time windows are expressed in `1+t` for full-system runs and in `s` for
//! averaged runs, where the flow time `s` plays the role of `log(1+t)`.

use std::f64::consts::{FRAC_PI_2, LN_10, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::full::unwrap_phase;
use crate::spectral::{to_polar, ModeSet, Spectrum};
use crate::trajectory::{Sample, Trajectory};

/// `(min, max)` of a set of values; `None` when empty.
pub fn band(values: impl IntoIterator<Item = f64>) -> Option<(f64, f64)> {
    let mut it = values.into_iter();
    let first = it.next()?;
    Some(it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v))))
}

/// Start of the trailing window: the last decade of `1+t`.
///
/// For averaged runs the axis is `s` and the decade is `ln 10` wide. If the
/// run is shorter than that, the second half is used.
pub fn trailing_start(traj: &Trajectory) -> Option<f64> {
    let first = traj.samples().first()?.time();
    let last = traj.samples().last()?.time();
    let start = if traj.is_modal() {
        (1.0 + last) / 10.0 - 1.0
    } else {
        last - LN_10
    };
    Some(if start > first { start } else { first + 0.5 * (last - first) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaledEnergySeries {
    /// `(t, (1+t)E)` for modal runs, `(s, R)` for averaged runs.
    pub points: Vec<(f64, f64)>,
    pub trailing_start: Option<f64>,
    /// `(min, max)` over the trailing window.
    pub trailing: Option<(f64, f64)>,
}

pub fn rescaled_energy_series(traj: &Trajectory) -> RescaledEnergySeries {
    let points: Vec<(f64, f64)> = traj
        .samples()
        .iter()
        .zip(traj.diagnostics())
        .map(|(s, d)| (s.time(), d.rescaled))
        .collect();
    let start = trailing_start(traj);
    let trailing = start.and_then(|t0| band(points.iter().filter(|p| p.0 >= t0).map(|p| p.1)));
    RescaledEnergySeries {
        points,
        trailing_start: start,
        trailing,
    }
}

/// Amplitudes `ρ_k` per sample (polar amplitudes of `√(1+t)u` for modal runs).
fn amplitudes(traj: &Trajectory) -> Result<Vec<Vec<f64>>> {
    traj.samples()
        .iter()
        .map(|s| match s {
            Sample::Modal(m) => {
                let spec = traj
                    .spectrum()
                    .ok_or_else(|| Error::invalid("trajectory has no spectrum"))?;
                Ok(to_polar(m, spec)?.rho)
            }
            Sample::Averaged(a) => Ok(a.rho.clone()),
        })
        .collect()
}

fn check_in_support(traj: &Trajectory, k: usize) -> Result<()> {
    if traj.meta.support.contains(k) {
        Ok(())
    } else {
        Err(Error::invalid(format!("mode {} is not in the support", k + 1)))
    }
}

/// `(t, ρ_k/ρ_h)` per sample.
pub fn quotient_series(traj: &Trajectory, h: usize, k: usize) -> Result<Vec<(f64, f64)>> {
    check_in_support(traj, h)?;
    check_in_support(traj, k)?;
    let rho = amplitudes(traj)?;
    Ok(traj
        .samples()
        .iter()
        .zip(&rho)
        .map(|(s, r)| (s.time(), if h == k { 1.0 } else { r[k] / r[h] }))
        .collect())
}

/// Support index with the largest amplitude at the first sample with time `≥ t0`
/// (the last sample if none); lowest index on ties.
pub fn reference_index(traj: &Trajectory, t0: f64) -> Result<usize> {
    let support = traj.meta.support.indices();
    if support.is_empty() {
        return Err(Error::degenerate("support is empty"));
    }
    let times = traj.times();
    let i = times.iter().position(|&t| t >= t0).unwrap_or(times.len().saturating_sub(1));
    let sample = traj
        .samples()
        .get(i)
        .ok_or_else(|| Error::invalid("empty trajectory"))?;
    let rho = match sample {
        Sample::Modal(m) => to_polar(
            m,
            traj.spectrum()
                .ok_or_else(|| Error::invalid("trajectory has no spectrum"))?,
        )?
        .rho,
        Sample::Averaged(a) => a.rho.clone(),
    };
    Ok(crate::averaged::reference_mode(&rho, &traj.meta.support))
}

/// Averaging window for the equipartition index: one period `2π/λ` of the
/// slowest mode of `J` for modal runs, none for averaged runs.
pub fn equipartition_window(traj: &Trajectory, j: &ModeSet) -> f64 {
    match traj.spectrum() {
        Some(spec) if traj.is_modal() => {
            let slowest = j
                .indices()
                .iter()
                .map(|&k| spec.lambdas()[k])
                .fold(f64::INFINITY, f64::min);
            TAU / slowest
        }
        _ => 0.0,
    }
}

/// `(t, max_k ē_k / min_k ē_k)` over `k ∈ J`, where `ē_k` is `(1+t)e_k`
/// averaged over the window ending at `t`.
pub fn equipartition_index(traj: &Trajectory, j: &ModeSet) -> Result<Vec<(f64, f64)>> {
    equipartition_index_shifted(traj, j, 0)
}

/// Same as [`equipartition_index`] with the first `shift` samples of every
/// window dropped.
pub fn equipartition_index_shifted(traj: &Trajectory, j: &ModeSet, shift: usize) -> Result<Vec<(f64, f64)>> {
    if j.is_empty() {
        return Err(Error::invalid("mode set J is empty"));
    }
    for &k in j.indices() {
        check_in_support(traj, k)?;
    }
    let times = traj.times();
    let diag = traj.diagnostics();
    let scale = |i: usize| if traj.is_modal() { 1.0 + times[i] } else { 1.0 };
    let width = equipartition_window(traj, j);
    let mut out = Vec::with_capacity(times.len());
    let mut lo = 0;
    for i in 0..times.len() {
        while times[lo] < times[i] - width {
            lo += 1;
        }
        let start = (lo + shift).min(i);
        let mut hi_val: f64 = f64::NEG_INFINITY;
        let mut lo_val: f64 = f64::INFINITY;
        for &k in j.indices() {
            let value = if start == i {
                scale(i) * diag[i].modal[k]
            } else {
                let mut acc = 0.0;
                for m in start..i {
                    let dt = times[m + 1] - times[m];
                    acc += 0.5 * dt * (scale(m) * diag[m].modal[k] + scale(m + 1) * diag[m + 1].modal[k]);
                }
                acc / (times[i] - times[start])
            };
            hi_val = hi_val.max(value);
            lo_val = lo_val.min(value);
        }
        let ratio = if hi_val == lo_val { 1.0 } else { hi_val / lo_val };
        out.push((times[i], ratio));
    }
    Ok(out)
}

/// Total variation of the slow phase on one dyadic window of `1+t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftWindow {
    pub t_start: f64,
    pub t_end: f64,
    pub variation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDriftSeries {
    pub mode: usize,
    pub times: Vec<f64>,
    /// Unwrapped `θ_k(t) + λ_k t`.
    pub drift: Vec<f64>,
    /// Dyadic windows `[(1+T)/2^{m+1} − 1, (1+T)/2^m − 1]`, oldest first.
    pub windows: Vec<DriftWindow>,
    /// Median of the drift over the final window.
    pub theta_inf: f64,
}

impl PhaseDriftSeries {
    pub fn final_variation(&self) -> f64 {
        self.windows.last().map_or(f64::NAN, |w| w.variation)
    }

    /// Whether the variation does not grow over the last three windows.
    pub fn decreasing(&self) -> bool {
        let v: Vec<f64> = self.windows.iter().rev().take(3).map(|w| w.variation).collect();
        v.len() >= 2 && v.windows(2).all(|p| p[0] <= p[1])
    }
}

/// Largest admissible change of the slow phase between neighbouring samples.
pub const MAX_DRIFT_STEP: f64 = FRAC_PI_2;

pub fn phase_drift(traj: &Trajectory, k: usize, t0: f64) -> Result<PhaseDriftSeries> {
    let spec = traj
        .spectrum()
        .ok_or_else(|| Error::invalid("phase drift needs a full-system trajectory"))?;
    check_in_support(traj, k)?;
    let lambda = spec.lambdas()[k];
    let mut times = Vec::new();
    let mut raw = Vec::new();
    for m in traj.modal_states()? {
        if m.t < t0 {
            continue;
        }
        let p = to_polar(m, spec)?;
        times.push(m.t);
        raw.push(p.theta[k] + lambda * m.t);
    }
    if times.len() < 2 {
        return Err(Error::invalid("phase drift needs at least 2 samples after t0"));
    }
    let drift = unwrap_phase(&raw);
    for i in 1..drift.len() {
        if (drift[i] - drift[i - 1]).abs() > MAX_DRIFT_STEP {
            return Err(Error::NeedsDenserSampling {
                t0: times[i - 1],
                t1: times[i],
            });
        }
    }

    let t_end = times[times.len() - 1];
    let mut windows = Vec::new();
    let mut hi = t_end;
    loop {
        let lo = (1.0 + hi) / 2.0 - 1.0;
        if lo < times[0] {
            break;
        }
        let idx: Vec<usize> = (0..times.len()).filter(|&i| times[i] >= lo && times[i] <= hi).collect();
        let variation = idx.windows(2).map(|p| (drift[p[1]] - drift[p[0]]).abs()).sum();
        windows.push(DriftWindow {
            t_start: lo,
            t_end: hi,
            variation,
        });
        hi = lo;
    }
    windows.reverse();

    let tail_start = windows.last().map_or(times[0], |w| w.t_start);
    let mut tail: Vec<f64> = times
        .iter()
        .zip(&drift)
        .filter(|(t, _)| **t >= tail_start)
        .map(|(_, d)| *d)
        .collect();
    tail.sort_by(f64::total_cmp);
    let n = tail.len();
    let theta_inf = if n % 2 == 1 {
        tail[n / 2]
    } else {
        0.5 * (tail[n / 2 - 1] + tail[n / 2])
    };
    Ok(PhaseDriftSeries {
        mode: k,
        times,
        drift,
        windows,
        theta_inf,
    })
}

/// The limit profile `v_∞,k(t) = a_k cos(λ_k t + φ_k)`, a free solution of
/// `v'' + Av = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub modes: Vec<usize>,
    /// Displacement amplitudes `a_k`.
    pub amplitudes: Vec<f64>,
    pub phases: Vec<f64>,
}

impl ProfileSpec {
    /// Equipartition amplitudes `2/√(2j+1)·(1/λ_k)` on `support`, `j = |support|`,
    /// with phases `−θ_{k,∞}`.
    pub fn limit(spec: &Spectrum, support: &ModeSet, theta_inf: &[f64]) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::degenerate("support is empty"));
        }
        if theta_inf.len() != support.len() {
            return Err(Error::invalid("one limit phase per mode is required"));
        }
        if support.indices().iter().any(|&k| k >= spec.len()) {
            return Err(Error::invalid("support exceeds the spectrum"));
        }
        let a = 2.0 / (2.0 * support.len() as f64 + 1.0).sqrt();
        Ok(Self {
            modes: support.indices().to_vec(),
            amplitudes: support.indices().iter().map(|&k| a / spec.lambdas()[k]).collect(),
            phases: theta_inf.iter().map(|t| -t).collect(),
        })
    }

    /// Limit profile with phases estimated by [`phase_drift`] from `t = 0`.
    pub fn fitted(traj: &Trajectory) -> Result<Self> {
        let spec = traj
            .spectrum()
            .ok_or_else(|| Error::invalid("profile fit needs a full-system trajectory"))?;
        let phases = traj
            .meta
            .support
            .indices()
            .iter()
            .map(|&k| phase_drift(traj, k, 0.0).map(|d| d.theta_inf))
            .collect::<Result<Vec<_>>>()?;
        Self::limit(spec, &traj.meta.support, &phases)
    }

    /// `(v_∞,k(t), v'_∞,k(t))`.
    pub fn eval(&self, spec: &Spectrum, slot: usize, t: f64) -> (f64, f64) {
        let l = spec.lambdas()[self.modes[slot]];
        let (s, c) = (l * t + self.phases[slot]).sin_cos();
        (self.amplitudes[slot] * c, -self.amplitudes[slot] * l * s)
    }
}

/// `(t, |√t·u' − v'_∞|² + |√t·u − v_∞|²)` per sample.
pub fn profile_error(traj: &Trajectory, profile: &ProfileSpec) -> Result<Vec<(f64, f64)>> {
    let spec = traj
        .spectrum()
        .ok_or_else(|| Error::invalid("profile error needs a full-system trajectory"))?;
    if profile.modes != traj.meta.support.indices()
        || profile.amplitudes.len() != profile.modes.len()
        || profile.phases.len() != profile.modes.len()
    {
        return Err(Error::invalid("profile support does not match the trajectory support"));
    }
    let states = traj.modal_states()?;
    Ok(states
        .iter()
        .map(|m| {
            let root = m.t.sqrt();
            let err = profile
                .modes
                .iter()
                .enumerate()
                .map(|(slot, &k)| {
                    let (v, dv) = profile.eval(spec, slot, m.t);
                    (root * m.du[k] - dv).powi(2) + (root * m.u[k] - v).powi(2)
                })
                .sum();
            (m.t, err)
        })
        .collect())
}
