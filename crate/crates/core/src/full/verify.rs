//! Checks run along computed full-system trajectories.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oscillatory::probe::least_squares_slope;
use crate::spectral::{to_polar, ModalState, Spectrum};
use crate::sum;
use crate::trajectory::Trajectory;

/// `max |ΔE/Δt + (|u'_n|⁴ + |u'_{n+1}|⁴)| / E(0)` over adjacent samples.
pub fn verify_energy_identity(traj: &Trajectory) -> Result<f64> {
    let states = traj.modal_states()?;
    if states.len() < 2 {
        return Err(Error::invalid("energy identity needs at least 2 samples"));
    }
    let diag = traj.diagnostics();
    let e0 = diag[0].energy;
    if e0 == 0.0 {
        return Ok(diag.iter().map(|d| d.energy).fold(0.0, f64::max));
    }
    let quartic: Vec<f64> = states.iter().map(|s| s.velocity_norm_sq().powi(2)).collect();
    let mut worst: f64 = 0.0;
    for i in 0..states.len() - 1 {
        let dt = states[i + 1].t - states[i].t;
        let de = (diag[i + 1].energy - diag[i].energy) / dt;
        worst = worst.max((de + quartic[i] + quartic[i + 1]).abs());
    }
    Ok(worst / e0)
}

/// Indices `n` with `E(t_{n+1}) > E(t_n)·(1 + 10·rel_tol)`.
pub fn energy_violations(traj: &Trajectory, rel_tol: f64) -> Vec<usize> {
    let d = traj.diagnostics();
    (0..d.len().saturating_sub(1))
        .filter(|&i| d[i + 1].energy > d[i].energy * (1.0 + 10.0 * rel_tol))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// `min (1+t)E(t)` over the samples.
    pub m1: f64,
    /// `max (1+t)E(t)`.
    pub m2: f64,
    /// Least-squares slope of `log E` against `log(1+t)` over the last decade.
    pub slope: f64,
}

pub fn fit_decay(traj: &Trajectory) -> Result<DecayFit> {
    let states = traj.modal_states()?;
    if states.len() < 3 {
        return Err(Error::invalid("decay fit needs at least 3 samples"));
    }
    let diag = traj.diagnostics();
    if diag.iter().all(|d| d.energy == 0.0) {
        return Err(Error::degenerate("trajectory is identically zero"));
    }
    let t_first = states[0].t;
    let t_last = states[states.len() - 1].t;
    if (1.0 + t_last).log10() - (1.0 + t_first).log10() < 2.0 {
        return Err(Error::invalid("decay fit needs samples spanning two decades of 1+t"));
    }
    let m1 = diag.iter().map(|d| d.rescaled).fold(f64::INFINITY, f64::min);
    let m2 = diag.iter().map(|d| d.rescaled).fold(f64::NEG_INFINITY, f64::max);
    let cut = (1.0 + t_last) / 10.0;
    let pts: Vec<(f64, f64)> = states
        .iter()
        .zip(diag)
        .filter(|(s, d)| 1.0 + s.t >= cut && d.energy > 0.0)
        .map(|(s, d)| (s.t.ln_1p(), d.energy.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::invalid("too few samples in the last decade"));
    }
    Ok(DecayFit {
        m1,
        m2,
        slope: least_squares_slope(&pts),
    })
}

/// `(M₃, M₄)`: min and max of `|v'|² + |A^{1/2}v|² = Σρ_k²` over the samples.
pub fn fit_rescaled_bounds(traj: &Trajectory) -> Result<(f64, f64)> {
    let spec = traj
        .spectrum()
        .ok_or_else(|| Error::invalid("trajectory has no spectrum"))?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in traj.modal_states()? {
        let r = to_polar(s, spec)?.rescaled_energy();
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok((lo, hi))
}

/// Finite-difference residuals of the amplitude/phase equations in log-time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionResidualReport {
    /// Modes included (the support).
    pub modes: Vec<usize>,
    /// Original times of the interior samples.
    pub times: Vec<f64>,
    /// Per-sample max over modes of the amplitude-equation residual.
    pub rho_residual: Vec<f64>,
    /// Per-sample max over modes of the phase-equation residual.
    pub theta_residual: Vec<f64>,
    pub sup_rho_residual: f64,
    pub sup_theta_residual: f64,
    /// `max (1+t)²(|g₁| + |g₂|)`.
    pub m5: f64,
    /// `max_k e^s(|Γ_{1,k}| + |Γ_{2,k}|)`.
    pub m7: f64,
    /// Slope of `log max(|g₁|+|g₂|)` against `log(1+t)` over windows of the last decade.
    pub g_envelope_slope: f64,
}

/// Coefficients of the rescaled equation at one sample.
struct Coefficients {
    g1: f64,
    g2: f64,
}

fn coefficients(state: &ModalState) -> Coefficients {
    let tp = 1.0 + state.t;
    let root = tp.sqrt();
    let v: Vec<f64> = state.u.iter().map(|u| root * u).collect();
    let dv: Vec<f64> = state
        .u
        .iter()
        .zip(&state.du)
        .map(|(u, du)| u / (2.0 * root) + root * du)
        .collect();
    let vv = sum::ordered_map(&v, |x| x * x);
    let dvdv = sum::ordered_map(&dv, |x| x * x);
    let vdv = sum::compensated(v.iter().zip(&dv).map(|(a, b)| a * b));
    let g1 = -0.75 / tp.powi(2) + 0.5 * dvdv / tp.powi(2) - 0.5 * vdv / tp.powi(3) + 0.125 * vv / tp.powi(4);
    let g2 = vdv / tp.powi(2) - 0.25 * vv / tp.powi(3);
    Coefficients { g1, g2 }
}

pub fn verify_polar_reduction(traj: &Trajectory, spec: &Spectrum) -> Result<ReductionResidualReport> {
    let states = traj.modal_states()?;
    let modes = traj.meta.support.indices().to_vec();
    if modes.is_empty() {
        return Err(Error::degenerate("support is empty"));
    }
    if states.len() < 3 {
        return Err(Error::invalid("need at least 3 samples"));
    }
    let polar = states
        .iter()
        .map(|s| to_polar(s, spec))
        .collect::<Result<Vec<_>>>()?;
    let coef: Vec<Coefficients> = states.iter().map(|s| coefficients(s)).collect();
    let lam = spec.lambdas();
    let s: Vec<f64> = polar.iter().map(|p| p.s).collect();

    // unwrapped slow phase d_k = θ_k + λ_k e^s
    let mut drift: Vec<Vec<f64>> = Vec::with_capacity(modes.len());
    for &k in &modes {
        let raw: Vec<f64> = polar
            .iter()
            .map(|p| p.theta[k] + lam[k] * p.s.exp())
            .collect();
        drift.push(unwrap(&raw));
    }

    let mut rho_residual = Vec::with_capacity(states.len() - 2);
    let mut theta_residual = Vec::with_capacity(states.len() - 2);
    let mut times = Vec::with_capacity(states.len() - 2);
    let mut m7: f64 = 0.0;
    for i in 1..states.len() - 1 {
        let p = &polar[i];
        let es = p.s.exp();
        let sum_sin = sum::compensated(
            p.rho
                .iter()
                .zip(&p.theta)
                .map(|(r, th)| (r * th.sin()).powi(2)),
        );
        let ds = s[i + 1] - s[i - 1];
        let (mut wr, mut wt) = (0.0f64, 0.0f64);
        for (j, &k) in modes.iter().enumerate() {
            let (r, th) = (p.rho[k], p.theta[k]);
            let (sn, cs) = th.sin_cos();
            let gamma = coef[i].g1 * cs / lam[k] + coef[i].g2 * sn;
            let big1 = es * gamma * sn;
            let big2 = es * gamma * cs;
            m7 = m7.max(es * (big1.abs() + big2.abs()));
            let rhs_r = -(sum_sin - 1.0) * r * sn * sn + big1 * r;
            let rhs_t = -(sum_sin - 1.0) * sn * cs + big2;
            let fd_r = (polar[i + 1].rho[k] - polar[i - 1].rho[k]) / ds;
            let fd_t = (drift[j][i + 1] - drift[j][i - 1]) / ds;
            wr = wr.max((fd_r - rhs_r).abs());
            wt = wt.max((fd_t - rhs_t).abs());
        }
        rho_residual.push(wr);
        theta_residual.push(wt);
        times.push(states[i].t);
    }

    let m5 = states
        .iter()
        .zip(&coef)
        .map(|(st, c)| (1.0 + st.t).powi(2) * (c.g1.abs() + c.g2.abs()))
        .fold(0.0, f64::max);

    Ok(ReductionResidualReport {
        modes,
        sup_rho_residual: rho_residual.iter().copied().fold(0.0, f64::max),
        sup_theta_residual: theta_residual.iter().copied().fold(0.0, f64::max),
        times,
        rho_residual,
        theta_residual,
        m5,
        m7,
        g_envelope_slope: envelope_slope(states.iter().map(|s| s.t).zip(coef.iter().map(|c| c.g1.abs() + c.g2.abs()))),
    })
}

/// `(slope, M₅)` of the envelope of `|g₁| + |g₂|` alone, without the
/// finite-difference residuals.
pub fn coefficient_envelope(traj: &Trajectory) -> Result<(f64, f64)> {
    let states = traj.modal_states()?;
    if states.len() < 2 {
        return Err(Error::invalid("need at least 2 samples"));
    }
    let mut m5: f64 = 0.0;
    let mut series = Vec::with_capacity(states.len());
    for s in &states {
        let c = coefficients(s);
        let g = c.g1.abs() + c.g2.abs();
        m5 = m5.max((1.0 + s.t).powi(2) * g);
        series.push((s.t, g));
    }
    Ok((envelope_slope(series.into_iter()), m5))
}

/// Log-log slope of windowed maxima over the last decade of `1+t`.
pub(crate) fn envelope_slope(series: impl Iterator<Item = (f64, f64)>) -> f64 {
    let pts: Vec<(f64, f64)> = series.collect();
    let Some(&(t_last, _)) = pts.last() else {
        return f64::NAN;
    };
    let top = t_last.ln_1p();
    let bottom = (top - std::f64::consts::LN_10).max(pts[0].0.ln_1p());
    let windows = 8;
    let width = (top - bottom) / windows as f64;
    let mut fit = Vec::new();
    for w in 0..windows {
        let lo = bottom + w as f64 * width;
        let hi = lo + width;
        let m = pts
            .iter()
            .filter(|(t, _)| {
                let x = t.ln_1p();
                x >= lo && (x < hi || (w == windows - 1 && x <= hi))
            })
            .map(|p| p.1)
            .fold(0.0, f64::max);
        if m > 0.0 {
            fit.push((lo + 0.5 * width, m.ln()));
        }
    }
    if fit.len() < 2 {
        return f64::NAN;
    }
    least_squares_slope(&fit)
}

/// Removes jumps larger than π between neighbours by adding multiples of 2π.
pub(crate) fn unwrap(raw: &[f64]) -> Vec<f64> {
    use std::f64::consts::{PI, TAU};
    let mut out: Vec<f64> = Vec::with_capacity(raw.len());
    let mut offset = 0.0;
    for (i, &x) in raw.iter().enumerate() {
        if i > 0 {
            let d = x + offset - out[i - 1];
            if d.abs() > PI {
                offset -= TAU * ((d / TAU).round());
            }
        }
        out.push(x + offset);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unwrap_removes_jumps() {
        let raw: Vec<f64> = (0..100).map(|i| (i as f64 * 0.3).rem_euclid(std::f64::consts::TAU)).collect();
        let u = unwrap(&raw);
        for (i, x) in u.iter().enumerate() {
            assert!((x - i as f64 * 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn envelope_slope_of_power_law() {
        let s = envelope_slope((0..2000).map(|i| {
            let t = i as f64;
            (t, (1.0 + t).powi(-2) * (1.0 + 0.5 * t.sin()))
        }));
        assert!((s + 2.0).abs() < 0.1, "{s}");
    }
}
