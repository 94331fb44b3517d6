//! Rotating-frame integrator.
//!
//! With `a_k = e^{iλ_k t}(λ_k u_k + i u'_k)` the system becomes
//!
//! ```text
//! a_k' = −(D/2)(a_k − ā_k e^{2iλ_k t}),   D = S/2 − ¼ Σ_i (a_i² e^{−2iλ_i t} + c.c.),
//! ```
//!
//! with `S = Σ|a_i|² = E`. For frozen amplitudes the right side is a finite
//! sum of exponentials in `t`, so its integral over a step is exact. Steps
//! use the exponential midpoint rule (amplitudes frozen at a half-step
//! predictor), step doubling for the error estimate and one Richardson
//! extrapolation.
//!
//! Freezing the amplitudes drops the second-order averaging terms, which
//! are of size `h·D²/ω` per step for the smallest active frequency `ω`;
//! steps are capped so that this stays below `rel_tol`.

use num_complex::Complex64;

use super::{Failure, IntegratorConfig};
use crate::oscillatory::phi1;
use crate::spectral::{ModalState, Spectrum};
use crate::sum;
use crate::trajectory::{RunStats, Sample, Trajectory};

struct Frame {
    lambdas: Vec<f64>,
}

impl Frame {
    /// `∫_{t0}^{t0+h}` of the right side with amplitudes frozen at `a`.
    fn increment(&self, a: &[Complex64], t0: f64, h: f64, out: &mut [Complex64]) {
        let n = a.len();
        let lam = &self.lambdas;
        let s = sum::compensated(a.iter().map(|z| z.norm_sqr()));
        let p: Vec<Complex64> = lam.iter().map(|l| Complex64::cis(2.0 * l * t0)).collect();
        let w: Vec<Complex64> = (0..n).map(|i| a[i] * a[i] * p[i].conj()).collect();
        let z: Vec<Complex64> = (0..n).map(|i| a[i].conj() * a[i].conj() * p[i]).collect();
        let theta: Vec<f64> = lam.iter().map(|l| 2.0 * l * h).collect();

        // ∫D = S h / 2 − ½ Σ Re(a_i² ∫e^{−2iλ_i τ})
        let int_d = 0.5 * s * h
            - 0.5
                * sum::compensated(
                    (0..n).map(|i| (w[i] * phi1(Complex64::new(0.0, -theta[i]))).re * h),
                );
        for k in 0..n {
            if a[k] == Complex64::new(0.0, 0.0) {
                out[k] = Complex64::new(0.0, 0.0);
                continue;
            }
            let mut acc = Complex64::new(0.5 * s, 0.0) * phi1(Complex64::new(0.0, theta[k]));
            let mut pair = Complex64::new(0.0, 0.0);
            for i in 0..n {
                pair += w[i] * phi1(Complex64::new(0.0, theta[k] - theta[i]))
                    + z[i] * phi1(Complex64::new(0.0, theta[k] + theta[i]));
            }
            acc -= 0.25 * pair;
            let int_de = p[k] * h * acc;
            out[k] = -0.5 * a[k] * int_d + 0.5 * a[k].conj() * int_de;
        }
    }

    /// One exponential midpoint step.
    fn step(&self, a: &[Complex64], t: f64, h: f64, buf: &mut [Complex64], out: &mut [Complex64]) {
        self.increment(a, t, 0.5 * h, buf);
        let mid: Vec<Complex64> = a.iter().zip(buf.iter()).map(|(x, d)| x + d).collect();
        self.increment(&mid, t, h, buf);
        for k in 0..a.len() {
            out[k] = a[k] + buf[k];
        }
    }
}

pub(super) fn run(
    initial: &ModalState,
    spec: &Spectrum,
    cfg: &IntegratorConfig,
    times: &[f64],
    traj: &mut Trajectory,
) -> std::result::Result<RunStats, Failure> {
    let n = spec.len();
    let active: Vec<usize> = traj.meta.support.indices().to_vec();
    let frame = Frame {
        lambdas: active.iter().map(|&k| spec.lambdas()[k]).collect(),
    };
    let m = active.len();
    let mut t = initial.t;
    let mut a: Vec<Complex64> = active
        .iter()
        .map(|&k| {
            let l = spec.lambdas()[k];
            Complex64::cis(l * t) * Complex64::new(l * initial.u[k], initial.du[k])
        })
        .collect();

    // smallest frequency present in the coupling
    let mut omega_min = frame.lambdas.iter().fold(f64::INFINITY, |m, l| m.min(2.0 * l));
    for i in 0..m {
        for j in 0..i {
            let d = 2.0 * (frame.lambdas[i] - frame.lambdas[j]).abs();
            if d > 0.0 {
                omega_min = omega_min.min(d);
            }
        }
    }
    let lambda_max = frame.lambdas.iter().fold(0.0f64, |m, l| m.max(*l));
    let resolved_step = if lambda_max > 0.0 { 0.25 / lambda_max } else { f64::INFINITY };
    let max_step = cfg.max_step.unwrap_or(f64::INFINITY);

    let mut stats = RunStats::default();
    let emit = |t: f64, a: &[Complex64], traj: &mut Trajectory| -> std::result::Result<(), String> {
        let mut u = vec![0.0; n];
        let mut du = vec![0.0; n];
        for (j, &k) in active.iter().enumerate() {
            let l = spec.lambdas()[k];
            let z = Complex64::cis(-l * t) * a[j];
            u[k] = z.re / l;
            du[k] = z.im;
        }
        traj.push(Sample::Modal(ModalState { t, u, du })).map_err(|e| e.to_string())
    };

    let mut next = 0;
    while next < times.len() && times[next] <= t {
        emit(t, &a, traj).map_err(|e| (t, e, stats))?;
        next += 1;
    }
    let mut h = resolved_step.min(max_step).min(times.get(next).map_or(1.0, |x| x - t));
    let mut y1 = vec![Complex64::new(0.0, 0.0); m];
    let mut y2 = y1.clone();
    let mut half = y1.clone();
    let mut buf = y1.clone();
    let max_steps: u64 = 200_000_000;

    while next < times.len() {
        if stats.accepted_steps + stats.rejected_steps >= max_steps {
            return Err((t, "step budget exhausted".into(), stats));
        }
        let s = sum::compensated(a.iter().map(|z| z.norm_sqr()));
        let d_mean = 0.5 * s;
        let bias_cap = if d_mean > 0.0 {
            cfg.rel_tol * omega_min / (d_mean * d_mean)
        } else {
            f64::INFINITY
        };
        let target = times[next];
        let cap = bias_cap.max(resolved_step).min(max_step);
        h = h.min(cap);
        let lands = h >= target - t;
        if lands {
            h = target - t;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err((t, format!("step size underflow (h = {h:e})"), stats));
        }

        frame.step(&a, t, h, &mut buf, &mut y1);
        frame.step(&a, t, 0.5 * h, &mut buf, &mut half);
        frame.step(&half, t + 0.5 * h, 0.5 * h, &mut buf, &mut y2);
        stats.rhs_evals += 6;

        let mut err: f64 = 0.0;
        for k in 0..m {
            let sc = cfg.abs_tol + cfg.rel_tol * a[k].norm().max(y2[k].norm());
            err = err.max((y2[k] - y1[k]).norm() / sc / 3.0);
        }
        if !err.is_finite() {
            stats.rejected_steps += 1;
            h *= 0.1;
            if h <= 1e-14 * t.abs().max(1.0) {
                return Err((t, "non-finite state".into(), stats));
            }
            continue;
        }
        if err <= 1.0 {
            stats.accepted_steps += 1;
            for k in 0..m {
                a[k] = y2[k] + (y2[k] - y1[k]) / 3.0;
            }
            t = if lands { target } else { t + h };
            while next < times.len() && times[next] <= t {
                emit(times[next], &a, traj).map_err(|e| (t, e, stats))?;
                next += 1;
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-1.0 / 3.0)).clamp(0.2, 5.0) };
            h *= fac;
        } else {
            stats.rejected_steps += 1;
            h *= (0.9 * err.powf(-1.0 / 3.0)).clamp(0.1, 0.9);
        }
    }
    Ok(stats)
}
