//! Scalar ODE harnesses for the energy inequality and the Bernoulli quotient equation.
//!
//! Chirp coefficients `cos(α e^t + ψ)` become unresolvable for an explicit
//! integrator after a few e-folds of `t`. Past their onset the chirp is
//! removed by a change of variables built from its tail antiderivative
//! `P(t) = −∫_t^∞ chirp`, which the oscillatory module evaluates
//! asymptotically; the transformed equations are smooth.

use serde::{Deserialize, Serialize};

use super::probe::{probe_with_resolution, SemiIntegrability};
use super::signal::{Adversary, Signal};
use crate::error::{Error, Result};
use crate::ode::{self, Control, Dopri5Options, Event};
use crate::trajectory::{Trajectory, TrajectoryMeta};

/// Where a Bernoulli run starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Start {
    At(f64),
    /// At the computed threshold `t₀`.
    Threshold,
}

/// Coefficients and constants for the scalar harnesses.
///
/// The energy-inequality harness reads `z0`, `z_inf`, `psi1`, `psi2` and
/// `adversaries`; the Bernoulli harness reads `z0`, `alpha`, `beta`,
/// `gamma`, `l0`, `l1`, `l2` and `start`.
#[derive(Debug, Clone)]
pub struct ScalarHarnessSpec {
    pub z0: f64,
    pub z_inf: f64,
    pub psi1: Signal,
    pub psi2: Signal,
    pub adversaries: Vec<Adversary>,
    pub alpha: Signal,
    pub beta: Signal,
    pub gamma: Signal,
    pub l0: f64,
    pub l1: f64,
    pub l2: f64,
    pub start: Start,
    pub rel_tol: f64,
}

impl Default for ScalarHarnessSpec {
    fn default() -> Self {
        Self {
            z0: 1.0,
            z_inf: 1.0,
            psi1: Signal::Zero,
            psi2: Signal::Zero,
            adversaries: Adversary::family(),
            alpha: Signal::Constant(1.0),
            beta: Signal::Zero,
            gamma: Signal::Zero,
            l0: 1.0,
            l1: 1.0,
            l2: 1.0,
            start: Start::At(0.0),
            rel_tol: 1e-11,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleOutcome {
    pub adversary: String,
    pub final_value: f64,
    pub min_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropRReport {
    /// Final value of the schedule that ends farthest from `z_∞`.
    pub final_value: f64,
    pub converged: bool,
    pub schedules: Vec<ScheduleOutcome>,
    /// Sampled hypothesis failures; the run is still carried out.
    pub violations: Vec<String>,
}

/// Tolerance on `|z(t_end) − z_∞|` for the energy-inequality harness.
pub const CONVERGENCE_TOL: f64 = 5e-3;

/// Integrates `z' = z − z²/z_∞ + ψ₁ + ξψ₂` for every adversary `ξ`.
pub fn prop_r_harness(spec: &ScalarHarnessSpec, t_end: f64) -> Result<PropRReport> {
    if !(t_end > 0.0) || !(spec.z_inf > 0.0) {
        return Err(Error::invalid("need t_end > 0 and z_inf > 0"));
    }
    if spec.adversaries.is_empty() {
        return Err(Error::invalid("no adversary schedules"));
    }
    let mut violations = Vec::new();
    if !(spec.z0 > 0.0) {
        violations.push(format!("z(0) = {} is not positive", spec.z0));
    }
    let tail_start = 0.75 * t_end;
    let psi2_tail = sup_abs(&spec.psi2, tail_start, t_end, 2000);
    if psi2_tail > 1e-3 {
        violations.push(format!("psi2 does not decay: sup on trailing quarter = {psi2_tail:e}"));
    }
    if let Some(class) = probe_class(&spec.psi1, t_end)? {
        if !class.is_semi_integrable() {
            violations.push(format!("psi1 probe classified as {class:?}"));
        }
    }

    let onset = spec
        .psi1
        .fast_onset()
        .into_iter()
        .chain(spec.psi2.fast_onset())
        .min_by(f64::total_cmp)
        .filter(|&o| o < t_end);
    let z_inf = spec.z_inf;
    let mut schedules = Vec::with_capacity(spec.adversaries.len());
    for adv in &spec.adversaries {
        let mut cuts = vec![0.0];
        cuts.extend(adv.switches(0.0, t_end));
        if let Some(o) = onset {
            cuts.push(o);
        }
        cuts.push(t_end);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();

        let mut z = spec.z0;
        let mut min_value = z;
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let xi = adv.eval(0.5 * (a + b));
            match onset {
                Some(o) if a >= o => {
                    // w = z − P, P' = chirp part of ψ₁ + ξψ₂
                    let tail = |t: f64| spec.psi1.chirp_tail(t) + xi * spec.psi2.chirp_tail(t);
                    let w0 = z - tail(a);
                    let f = |t: f64, w: f64| {
                        let z = w + tail(t);
                        z - z * z / z_inf + spec.psi1.eval_averaged(t, o) + xi * spec.psi2.eval_averaged(t, o)
                    };
                    let wb = solve_scalar(f, a, w0, b, spec.rel_tol, |t, w| {
                        min_value = min_value.min(w + tail(t));
                    })?;
                    z = wb + tail(b);
                }
                _ => {
                    let f = |t: f64, z: f64| z - z * z / z_inf + spec.psi1.eval(t) + xi * spec.psi2.eval(t);
                    z = solve_scalar(f, a, z, b, spec.rel_tol, |_, z| min_value = min_value.min(z))?;
                }
            }
        }
        schedules.push(ScheduleOutcome {
            adversary: adv.label(),
            final_value: z,
            min_value,
        });
    }
    let min_all = schedules.iter().map(|s| s.min_value).fold(f64::INFINITY, f64::min);
    if !(min_all > 0.0) {
        violations.push(format!("solution leaves the positive half-line (min {min_all})"));
    }
    let worst = schedules
        .iter()
        .max_by(|x, y| (x.final_value - z_inf).abs().total_cmp(&(y.final_value - z_inf).abs()))
        .expect("nonempty");
    Ok(PropRReport {
        final_value: worst.final_value,
        converged: schedules.iter().all(|s| (s.final_value - z_inf).abs() < CONVERGENCE_TOL),
        schedules: schedules.clone(),
        violations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernoulliReport {
    pub final_value: f64,
    pub t0_threshold: f64,
    /// `sup z` on `[max(start, t₀), t_end]`.
    pub sup_after_t0: f64,
    /// `z(t₀)` when the run covers `t₀`.
    pub z_at_t0: Option<f64>,
    /// `z(t₀) ≤ 1 ⇒ sup ≤ 2` on the computed run.
    pub implication_holds: bool,
    pub violations: Vec<String>,
}

/// Smallest `t₀ ≥ 0` with `L₂(1 + 9L₁ + 32L₁² + 32L₁³) e^{−t₀} < log 2`.
pub fn threshold(l1: f64, l2: f64) -> f64 {
    let k = l2 * (1.0 + 9.0 * l1 + 32.0 * l1 * l1 + 32.0 * l1.powi(3));
    if k <= 0.0 {
        return 0.0;
    }
    let t0 = (k / std::f64::consts::LN_2).ln();
    if t0 < 0.0 {
        0.0
    } else {
        t0.next_up()
    }
}

/// Integrates `z' = αz(1 − z²) + αβz³ + γz`.
///
/// Past the chirp onset the run continues in `x = z^{-2}`, which satisfies the
/// linear equation `x' = −2(α + γ)x + 2α(1 − β)`. Chirp parts of `γ` are
/// absorbed by `y = x·e^{2G}`, chirp parts of `β` by `w = y + 2αe^{2G}P`,
/// where `G`, `P` are the tail antiderivatives. The only dropped term is the
/// product of the two chirp tails, `4αγ_f e^{2G} P`.
pub fn bernoulli_harness(spec: &ScalarHarnessSpec, t_end: f64) -> Result<BernoulliReport> {
    let t0 = threshold(spec.l1, spec.l2);
    let start = match spec.start {
        Start::At(t) => t,
        Start::Threshold => t0,
    };
    if !(t_end > start) || start < 0.0 {
        return Err(Error::invalid(format!("need 0 <= start < t_end, got {start}, {t_end}")));
    }
    let violations = bernoulli_hypotheses(spec, start, t_end)?;

    let onset = [&spec.alpha, &spec.beta, &spec.gamma]
        .iter()
        .filter_map(|s| s.fast_onset())
        .min_by(f64::total_cmp)
        .filter(|&o| o < t_end);
    let mut cuts = vec![start];
    if let Some(o) = onset {
        if o > start {
            cuts.push(o);
        }
    }
    if t0 > start && t0 < t_end {
        cuts.push(t0);
    }
    cuts.push(t_end);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let (alpha, beta, gamma) = (&spec.alpha, &spec.beta, &spec.gamma);
    let watch_from = start.max(t0);
    let mut sup = f64::NEG_INFINITY;
    let mut z_at_t0 = (start == t0).then_some(spec.z0);
    let mut z = spec.z0;
    if watch_from == start {
        sup = z;
    }
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mut observe = |t: f64, z: f64| {
            if t >= watch_from {
                sup = sup.max(z);
            }
        };
        match onset {
            Some(o) if a >= o => {
                let g_tail = |t: f64| gamma.chirp_tail(t);
                let b_tail = |t: f64| beta.chirp_tail(t);
                let to_z = |t: f64, w: f64| {
                    let e = (2.0 * g_tail(t)).exp();
                    let y = w - 2.0 * alpha.eval(t) * e * b_tail(t);
                    (y / e).powf(-0.5)
                };
                let w0 = {
                    let e = (2.0 * g_tail(a)).exp();
                    z.powi(-2) * e + 2.0 * alpha.eval(a) * e * b_tail(a)
                };
                let f = |t: f64, w: f64| {
                    let al = alpha.eval(t);
                    let e = (2.0 * g_tail(t)).exp();
                    let p = b_tail(t);
                    let y = w - 2.0 * al * e * p;
                    -2.0 * (al + gamma.eval_averaged(t, o)) * y
                        + 2.0 * al * e * (1.0 - beta.eval_averaged(t, o))
                        + 2.0 * alpha.derivative(t) * e * p
                };
                let wb = solve_scalar(f, a, w0, b, spec.rel_tol, |t, w| observe(t, to_z(t, w)))?;
                z = to_z(b, wb);
            }
            _ => {
                let f = |t: f64, z: f64| {
                    let al = alpha.eval(t);
                    al * z * (1.0 - z * z) + al * beta.eval(t) * z.powi(3) + gamma.eval(t) * z
                };
                z = solve_scalar(f, a, z, b, spec.rel_tol, &mut observe)?;
            }
        }
        if b == t0 {
            z_at_t0 = Some(z);
        }
        if b >= watch_from {
            sup = sup.max(z);
        }
    }
    let implication_holds = match z_at_t0 {
        Some(z0) if z0 <= 1.0 => sup <= 2.0,
        _ => true,
    };
    Ok(BernoulliReport {
        final_value: z,
        t0_threshold: t0,
        sup_after_t0: sup,
        z_at_t0,
        implication_holds,
        violations,
    })
}

fn bernoulli_hypotheses(spec: &ScalarHarnessSpec, start: f64, t_end: f64) -> Result<Vec<String>> {
    let mut v = Vec::new();
    if !(spec.z0 > 0.0) {
        v.push(format!("z(start) = {} is not positive", spec.z0));
    }
    let n = 4000;
    let span = t_end - start;
    let mut worst_alpha = f64::INFINITY;
    let mut worst_ratio: f64 = 0.0;
    let mut bound: f64 = 0.0;
    for i in 0..=n {
        let t = start + span * i as f64 / n as f64;
        let a = spec.alpha.eval(t);
        worst_alpha = worst_alpha.min(a);
        let da = spec.alpha.derivative(t);
        if a > 0.0 {
            worst_ratio = worst_ratio.max(da.abs() / a);
        }
        bound = bound
            .max(a.abs())
            .max(da.abs())
            .max(spec.beta.eval(t).abs())
            .max(spec.gamma.eval(t).abs());
    }
    if !(worst_alpha > 0.0) {
        v.push(format!("alpha is not positive (min sampled {worst_alpha})"));
    }
    if worst_ratio > spec.l0 * (1.0 + 1e-6) {
        v.push(format!("|alpha'| / alpha reaches {worst_ratio:.4} > L0 = {}", spec.l0));
    }
    if bound > spec.l1 * (1.0 + 1e-9) {
        v.push(format!("coefficients reach {bound:.4} > L1 = {}", spec.l1));
    }
    for (name, sig) in [("beta", &spec.beta), ("gamma", &spec.gamma)] {
        if matches!(sig, Signal::Zero) {
            continue;
        }
        let (grid, s_max) = probe_grid(t_end);
        let r = probe_with_resolution(|t| sig.eval(t), &grid, s_max, 1000)?;
        if r.unit_rate_constant > spec.l2 * (1.0 + 1e-9) {
            v.push(format!(
                "partial integrals of {name} need L2 >= {:.4} > {}",
                r.unit_rate_constant, spec.l2
            ));
        }
    }
    Ok(v)
}

fn probe_grid(t_end: f64) -> (Vec<f64>, f64) {
    let s_max = t_end.min(8.0);
    let top = 0.75 * s_max;
    ((0..=12).map(|i| top * i as f64 / 12.0).collect(), s_max)
}

fn probe_class(sig: &Signal, t_end: f64) -> Result<Option<SemiIntegrability>> {
    if matches!(sig, Signal::Zero) {
        return Ok(None);
    }
    let (grid, s_max) = probe_grid(t_end);
    Ok(Some(probe_with_resolution(|t| sig.eval(t), &grid, s_max, 1000)?.class))
}

fn sup_abs(sig: &Signal, a: f64, b: f64, n: usize) -> f64 {
    (0..=n)
        .map(|i| sig.eval(a + (b - a) * i as f64 / n as f64).abs())
        .fold(0.0, f64::max)
}

/// Integrates a scalar ODE over `[a, b]`, reporting samples every 0.01 and
/// every accepted step to `observe`.
fn solve_scalar(
    f: impl Fn(f64, f64) -> f64,
    a: f64,
    z0: f64,
    b: f64,
    rel_tol: f64,
    mut observe: impl FnMut(f64, f64),
) -> Result<f64> {
    let n = ((b - a) / 0.01).ceil().max(1.0) as usize;
    let times: Vec<f64> = (1..=n)
        .map(|i| if i == n { b } else { a + (b - a) * i as f64 / n as f64 })
        .collect();
    let sys = (1usize, |t: f64, y: &[f64], dy: &mut [f64]| dy[0] = f(t, y[0]));
    let opts = Dopri5Options {
        rel_tol,
        abs_tol: rel_tol * 1e-2,
        ..Default::default()
    };
    let out = ode::integrate(&sys, a, &[z0], &times, &opts, |ev| {
        match ev {
            Event::Sample { t, y } => observe(t, y[0]),
            Event::Step { t, y, .. } => observe(t, y[0]),
        }
        Control::Continue
    })
    .map_err(|e| Error::IntegrationFailure {
        at: e.t,
        reason: e.reason,
        partial: Box::new(Trajectory::new(TrajectoryMeta::default())),
    })?;
    Ok(out.y[0])
}
