//! Dormand–Prince 5(4) with the standard 4th-order continuous extension.
//!
//! Shared by the full modal solver, the averaged flow and the scalar
//! harnesses. Samples are produced from the dense output, so requested
//! sample times never shorten the steps.

/// First-order system `y' = f(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]);
}

impl<F> OdeSystem for (usize, F)
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    fn dim(&self) -> usize {
        self.0
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        (self.1)(t, y, dy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5Options {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub initial_step: Option<f64>,
    pub max_steps: u64,
}

impl Default for Dopri5Options {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: f64::INFINITY,
            initial_step: None,
            max_steps: 50_000_000,
        }
    }
}

/// What the observer sees.
pub enum Event<'a> {
    /// State interpolated (or exact) at a requested sample time.
    Sample { t: f64, y: &'a [f64] },
    /// An accepted step ending at `t` with derivative `dy` there.
    Step { t: f64, y: &'a [f64], dy: &'a [f64] },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OdeStats {
    pub accepted: u64,
    pub rejected: u64,
    pub rhs_evals: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeOutcome {
    pub t: f64,
    pub y: Vec<f64>,
    pub stats: OdeStats,
    /// The observer requested a stop before the last sample time.
    pub stopped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeFailure {
    pub t: f64,
    pub reason: String,
    pub stats: OdeStats,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

struct Work {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y1: Vec<f64>,
    err: Vec<f64>,
    cont: [Vec<f64>; 5],
}

impl Work {
    fn new(n: usize) -> Self {
        let v = || vec![0.0; n];
        Self {
            k: [v(), v(), v(), v(), v(), v(), v()],
            tmp: v(),
            y1: v(),
            err: v(),
            cont: [v(), v(), v(), v(), v()],
        }
    }
}

fn scaled_norm(v: &[f64], y0: &[f64], y1: &[f64], opts: &Dopri5Options) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let s: f64 = v
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = opts.abs_tol + opts.rel_tol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (s / v.len() as f64).sqrt()
}

fn initial_step<S: OdeSystem>(sys: &S, t0: f64, y0: &[f64], f0: &[f64], opts: &Dopri5Options, evals: &mut u64) -> f64 {
    let n = y0.len();
    let sc: Vec<f64> = y0.iter().map(|y| opts.abs_tol + opts.rel_tol * y.abs()).collect();
    let rms = |v: &[f64]| -> f64 {
        if n == 0 {
            return 0.0;
        }
        (v.iter().zip(&sc).map(|(x, s)| (x / s).powi(2)).sum::<f64>() / n as f64).sqrt()
    };
    let d0 = rms(y0);
    let d1 = rms(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(opts.max_step);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + h0 * f).collect();
    let mut f1 = vec![0.0; n];
    sys.rhs(t0 + h0, &y1, &mut f1);
    *evals += 1;
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff) / h0;
    let dm = d1.max(d2);
    let h1 = if dm <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / dm).powf(0.2)
    };
    (100.0 * h0).min(h1).min(opts.max_step)
}

/// Integrates from `(t0, y0)` through the sorted `sample_times` (all `>= t0`).
///
/// The observer receives every sample and every accepted step; returning
/// [`Control::Stop`] ends the run after the current step.
pub fn integrate<S, O>(
    sys: &S,
    t0: f64,
    y0: &[f64],
    sample_times: &[f64],
    opts: &Dopri5Options,
    mut observer: O,
) -> Result<OdeOutcome, OdeFailure>
where
    S: OdeSystem,
    O: FnMut(Event<'_>) -> Control,
{
    let n = sys.dim();
    assert_eq!(n, y0.len(), "state dimension mismatch");
    let mut stats = OdeStats::default();
    let mut t = t0;
    let mut y = y0.to_vec();
    let t_end = sample_times.last().copied().unwrap_or(t0);
    let mut next_sample = 0;

    while next_sample < sample_times.len() && sample_times[next_sample] <= t0 {
        if observer(Event::Sample { t: t0, y: &y }) == Control::Stop {
            return Ok(OdeOutcome {
                t,
                y,
                stats,
                stopped: true,
            });
        }
        next_sample += 1;
    }
    if next_sample == sample_times.len() {
        return Ok(OdeOutcome {
            t,
            y,
            stats,
            stopped: false,
        });
    }

    let mut w = Work::new(n);
    sys.rhs(t, &y, &mut w.k[0]);
    stats.rhs_evals += 1;
    let mut h = match opts.initial_step {
        Some(h) => h.min(opts.max_step),
        None => initial_step(sys, t, &y, &w.k[0], opts, &mut stats.rhs_evals),
    };
    let mut last_rejected = false;

    loop {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(OdeFailure {
                t,
                reason: format!("step budget of {} exhausted", opts.max_steps),
                stats,
            });
        }
        let remaining = t_end - t;
        if h >= remaining {
            h = remaining;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(OdeFailure {
                t,
                reason: format!("step size underflow (h = {h:e})"),
                stats,
            });
        }

        stage(sys, t, h, &y, &mut w);
        stats.rhs_evals += 6;

        for i in 0..n {
            w.err[i] = h
                * (E1 * w.k[0][i] + E3 * w.k[2][i] + E4 * w.k[3][i] + E5 * w.k[4][i]
                    + E6 * w.k[5][i]
                    + E7 * w.k[6][i]);
        }
        let err = scaled_norm(&w.err, &y, &w.y1, opts);

        if !err.is_finite() || w.y1.iter().any(|v| !v.is_finite()) {
            if h <= 1e-12 * t.abs().max(1.0) {
                return Err(OdeFailure {
                    t,
                    reason: "non-finite state".into(),
                    stats,
                });
            }
            stats.rejected += 1;
            h *= 0.1;
            last_rejected = true;
            continue;
        }

        if err <= 1.0 {
            stats.accepted += 1;
            let t_new = if h == remaining { t_end } else { t + h };
            // dense output coefficients
            for i in 0..n {
                let ydiff = w.y1[i] - y[i];
                let bspl = h * w.k[0][i] - ydiff;
                w.cont[0][i] = y[i];
                w.cont[1][i] = ydiff;
                w.cont[2][i] = bspl;
                w.cont[3][i] = ydiff - h * w.k[6][i] - bspl;
                w.cont[4][i] = h
                    * (D1 * w.k[0][i] + D3 * w.k[2][i] + D4 * w.k[3][i] + D5 * w.k[4][i]
                        + D6 * w.k[5][i]
                        + D7 * w.k[6][i]);
            }
            while next_sample < sample_times.len() && sample_times[next_sample] <= t_new {
                let ts = sample_times[next_sample];
                let ctl = if ts == t_new {
                    observer(Event::Sample { t: ts, y: &w.y1 })
                } else {
                    let theta = (ts - t) / h;
                    let th1 = 1.0 - theta;
                    for i in 0..n {
                        w.tmp[i] = w.cont[0][i]
                            + theta
                                * (w.cont[1][i]
                                    + th1 * (w.cont[2][i] + theta * (w.cont[3][i] + th1 * w.cont[4][i])));
                    }
                    observer(Event::Sample { t: ts, y: &w.tmp })
                };
                next_sample += 1;
                if ctl == Control::Stop {
                    y.copy_from_slice(&w.y1);
                    return Ok(OdeOutcome {
                        t: t_new,
                        y,
                        stats,
                        stopped: true,
                    });
                }
            }
            t = t_new;
            y.copy_from_slice(&w.y1);
            let (first, rest) = w.k.split_at_mut(1);
            first[0].copy_from_slice(&rest[5]);
            let ctl = observer(Event::Step {
                t,
                y: &y,
                dy: &w.k[0],
            });
            if next_sample >= sample_times.len() {
                return Ok(OdeOutcome {
                    t,
                    y,
                    stats,
                    stopped: false,
                });
            }
            if ctl == Control::Stop {
                return Ok(OdeOutcome {
                    t,
                    y,
                    stats,
                    stopped: true,
                });
            }
            let mut fac = if err == 0.0 { 10.0 } else { 0.9 * err.powf(-0.2) };
            fac = fac.clamp(0.2, 10.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h = (h * fac).min(opts.max_step);
            last_rejected = false;
        } else {
            stats.rejected += 1;
            let fac = (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            h *= fac;
            last_rejected = true;
        }
    }
}

fn stage<S: OdeSystem>(sys: &S, t: f64, h: f64, y: &[f64], w: &mut Work) {
    let n = y.len();
    let Work { k, tmp, y1, .. } = w;
    for i in 0..n {
        tmp[i] = y[i] + h * A21 * k[0][i];
    }
    sys.rhs(t + C2 * h, tmp, &mut k[1]);
    for i in 0..n {
        tmp[i] = y[i] + h * (A31 * k[0][i] + A32 * k[1][i]);
    }
    sys.rhs(t + C3 * h, tmp, &mut k[2]);
    for i in 0..n {
        tmp[i] = y[i] + h * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
    }
    sys.rhs(t + C4 * h, tmp, &mut k[3]);
    for i in 0..n {
        tmp[i] = y[i] + h * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
    }
    sys.rhs(t + C5 * h, tmp, &mut k[4]);
    for i in 0..n {
        tmp[i] = y[i]
            + h * (A61 * k[0][i] + A62 * k[1][i] + A63 * k[2][i] + A64 * k[3][i] + A65 * k[4][i]);
    }
    sys.rhs(t + h, tmp, &mut k[5]);
    for i in 0..n {
        y1[i] = y[i]
            + h * (A71 * k[0][i] + A73 * k[2][i] + A74 * k[3][i] + A75 * k[4][i] + A76 * k[5][i]);
    }
    sys.rhs(t + h, y1, &mut k[6]);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn collect(sys: &impl OdeSystem, y0: &[f64], times: &[f64], opts: &Dopri5Options) -> Vec<(f64, Vec<f64>)> {
        let mut out = Vec::new();
        integrate(sys, 0.0, y0, times, opts, |ev| {
            if let Event::Sample { t, y } = ev {
                out.push((t, y.to_vec()));
            }
            Control::Continue
        })
        .unwrap();
        out
    }

    #[test]
    fn exponential_decay_matches_closed_form() {
        let sys = (1usize, |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = -y[0]);
        let times: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
        let opts = Dopri5Options {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            ..Default::default()
        };
        for (t, y) in collect(&sys, &[1.0], &times, &opts) {
            assert!((y[0] - (-t).exp()).abs() < 1e-11, "t={t}");
        }
    }

    #[test]
    fn harmonic_oscillator_dense_output() {
        let sys = (2usize, |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        });
        let times: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.05).collect();
        let opts = Dopri5Options {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            ..Default::default()
        };
        let out = collect(&sys, &[1.0, 0.0], &times, &opts);
        assert_eq!(out.len(), times.len());
        for (t, y) in out {
            assert!((y[0] - t.cos()).abs() < 1e-7, "t={t}");
            assert!((y[1] + t.sin()).abs() < 1e-7, "t={t}");
        }
    }

    #[test]
    fn observer_can_stop() {
        let sys = (1usize, |_t: f64, _y: &[f64], dy: &mut [f64]| dy[0] = 1.0);
        let out = integrate(&sys, 0.0, &[0.0], &[10.0], &Dopri5Options::default(), |ev| match ev {
            Event::Step { t, .. } if t > 1.0 => Control::Stop,
            _ => Control::Continue,
        })
        .unwrap();
        assert!(out.stopped);
        assert!(out.t < 10.0);
    }

    #[test]
    fn blow_up_reports_failure() {
        let sys = (1usize, |_t: f64, y: &[f64], dy: &mut [f64]| dy[0] = y[0] * y[0]);
        let res = integrate(&sys, 0.0, &[1.0], &[2.0], &Dopri5Options::default(), |_| Control::Continue);
        let fail = res.unwrap_err();
        assert!(fail.t < 1.0 + 1e-6 && fail.t > 0.9);
    }
}
