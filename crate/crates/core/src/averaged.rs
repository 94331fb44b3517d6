//! The averaged amplitude system: a gradient flow on nonnegative sequences.
//!
//! `ρ_k' = ρ_k (1/2 − ρ_k²/8 − Σρ_i²/4)` is the negative gradient of
//! `F(ρ) = −Σρ²/4 + (Σρ²)²/16 + Σρ⁴/32`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{self, Control, Dopri5Options, Event};
use crate::spectral::ModeSet;
use crate::sum;
use crate::trajectory::{RunStats, Sample, Trajectory, TrajectoryMeta};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedState {
    pub s: f64,
    pub rho: Vec<f64>,
}

impl AveragedState {
    pub fn new(s: f64, rho: Vec<f64>) -> Result<Self> {
        let st = Self { s, rho };
        st.validate()?;
        Ok(st)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s >= 0.0 && self.s.is_finite()) {
            return Err(Error::invalid(format!("flow time must be finite and >= 0, got {}", self.s)));
        }
        if let Some(k) = self.rho.iter().position(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::invalid(format!("rho[{k}] = {} is not a finite nonnegative number", self.rho[k])));
        }
        Ok(())
    }

    /// `ρ_k = 1/√N` for all `N` modes, so that `R(0) = 1`.
    pub fn equal_mass(n: usize) -> Self {
        Self {
            s: 0.0,
            rho: vec![1.0 / (n as f64).sqrt(); n],
        }
    }

    /// `ρ_k = c·(k+1)^{−p}` for `k = 0..n`.
    pub fn power_law(n: usize, c: f64, p: f64) -> Self {
        Self {
            s: 0.0,
            rho: (0..n).map(|k| c * ((k + 1) as f64).powf(-p)).collect(),
        }
    }

    /// `R = Σρ_k²`.
    pub fn rescaled_energy(&self) -> f64 {
        sum::ordered_map(&self.rho, |r| r * r)
    }

    pub fn support(&self) -> ModeSet {
        ModeSet::new((0..self.rho.len()).filter(|&k| self.rho[k] != 0.0).collect())
    }
}

/// Limit point of the flow started inside the face with support `J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryProfile {
    pub support: ModeSet,
    /// `2/√(2j+1)`; `None` for empty `J`.
    pub amplitude: Option<f64>,
    /// `4j/(2j+1)`.
    pub energy: f64,
}

impl StationaryProfile {
    /// The stationary vector with `amplitude` on `J`, zero elsewhere.
    pub fn vector(&self, n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        if let Some(a) = self.amplitude {
            for &k in self.support.indices() {
                if k < n {
                    v[k] = a;
                }
            }
        }
        v
    }
}

pub fn stationary_profile(support: &ModeSet) -> StationaryProfile {
    let j = support.len() as f64;
    StationaryProfile {
        support: support.clone(),
        amplitude: (j > 0.0).then(|| 2.0 / (2.0 * j + 1.0).sqrt()),
        energy: 4.0 * j / (2.0 * j + 1.0),
    }
}

/// `F(ρ)` with each of the three sums in ascending index order.
pub fn functional_f(rho: &[f64]) -> f64 {
    let s2 = sum::ordered_map(rho, |r| r * r);
    let s4 = sum::ordered_map(rho, |r| r.powi(4));
    -0.25 * s2 + s2 * s2 / 16.0 + s4 / 32.0
}

/// `∂F/∂ρ_k = −ρ_k/2 + ρ_k·Σρ²/4 + ρ_k³/8`.
pub fn grad_f(rho: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; rho.len()];
    grad_into(rho, &mut g);
    g
}

fn grad_into(rho: &[f64], out: &mut [f64]) {
    let s2 = sum::ordered_map(rho, |r| r * r);
    for (o, &r) in out.iter_mut().zip(rho) {
        *o = -0.5 * r + 0.25 * r * s2 + 0.125 * r * r * r;
    }
}

/// Right side of the averaged system; bitwise the negation of [`grad_f`].
pub fn rhs_averaged(rho: &[f64]) -> Vec<f64> {
    let mut d = vec![0.0; rho.len()];
    rhs_into(rho, &mut d);
    d
}

fn rhs_into(rho: &[f64], out: &mut [f64]) {
    grad_into(rho, out);
    for (o, &r) in out.iter_mut().zip(rho) {
        // inactive modes stay at +0.0
        *o = if r == 0.0 { 0.0 } else { -*o };
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragedOptions {
    pub tol: f64,
    /// Spacing of the uniform `s` grid.
    pub sample_spacing: f64,
    /// Stop once `‖ρ'‖∞` stays below this for [`STALL_STEPS`] accepted steps.
    pub stall_threshold: f64,
}

impl Default for AveragedOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            sample_spacing: 0.1,
            stall_threshold: 1e-12,
        }
    }
}

pub const STALL_STEPS: usize = 10;

/// Integrates the averaged flow on `[initial.s, s_end]` with default spacing.
pub fn integrate_averaged(initial: &AveragedState, s_end: f64, tol: f64) -> Result<Trajectory> {
    integrate_averaged_with(
        initial,
        s_end,
        &AveragedOptions {
            tol,
            ..Default::default()
        },
    )
}

pub fn integrate_averaged_with(initial: &AveragedState, s_end: f64, opts: &AveragedOptions) -> Result<Trajectory> {
    initial.validate()?;
    if !(s_end > initial.s) || !s_end.is_finite() {
        return Err(Error::invalid(format!("s_end must exceed the initial time, got {s_end}")));
    }
    if !(opts.tol > 0.0 && opts.sample_spacing > 0.0) {
        return Err(Error::invalid("tolerance and sample spacing must be positive"));
    }
    let support = initial.support();
    let meta = TrajectoryMeta {
        scenario: String::new(),
        spectrum: None,
        scheme: "dopri5-averaged".into(),
        rel_tol: opts.tol,
        abs_tol: opts.tol * 1e-2,
        support: support.clone(),
        stats: RunStats::default(),
    };
    let mut traj = Trajectory::new(meta);
    let n = initial.rho.len();
    let s0 = initial.s;
    let count = ((s_end - s0) / opts.sample_spacing).round().max(1.0) as usize;
    let times: Vec<f64> = (0..=count)
        .map(|i| if i == count { s_end } else { s0 + (s_end - s0) * i as f64 / count as f64 })
        .collect();

    let sys = (n, |_s: f64, y: &[f64], dy: &mut [f64]| rhs_into(y, dy));
    let dopri = Dopri5Options {
        rel_tol: opts.tol,
        abs_tol: opts.tol * 1e-2,
        ..Default::default()
    };
    let mut calm = 0usize;
    let mut push_err = None;
    let mut last_step: Option<(f64, Vec<f64>)> = None;
    let outcome = ode::integrate(&sys, s0, &initial.rho, &times, &dopri, |ev| match ev {
        Event::Sample { t, y } => {
            let rho = y.iter().map(|v| v.max(0.0)).collect();
            if let Err(e) = traj.push(Sample::Averaged(AveragedState { s: t, rho })) {
                push_err = Some(e);
                return Control::Stop;
            }
            Control::Continue
        }
        Event::Step { t, y, dy } => {
            let norm = dy.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            calm = if norm < opts.stall_threshold { calm + 1 } else { 0 };
            if calm >= STALL_STEPS {
                last_step = Some((t, y.to_vec()));
                Control::Stop
            } else {
                Control::Continue
            }
        }
    });
    if let Some(e) = push_err {
        return Err(e);
    }
    match outcome {
        Ok(out) => {
            traj.meta.stats = RunStats {
                accepted_steps: out.stats.accepted,
                rejected_steps: out.stats.rejected,
                rhs_evals: out.stats.rhs_evals,
                stopped_early_at: None,
            };
            if let Some((t, y)) = last_step {
                if out.stopped && t < s_end {
                    traj.meta.stats.stopped_early_at = Some(t);
                    if traj.times().last().is_none_or(|&l| t > l) {
                        let rho = y.iter().map(|v| v.max(0.0)).collect();
                        traj.push(Sample::Averaged(AveragedState { s: t, rho }))?;
                    }
                }
            }
            Ok(traj)
        }
        Err(f) => {
            traj.meta.stats = RunStats {
                accepted_steps: f.stats.accepted,
                rejected_steps: f.stats.rejected,
                rhs_evals: f.stats.rhs_evals,
                stopped_early_at: None,
            };
            Err(Error::IntegrationFailure {
                at: f.t,
                reason: f.reason,
                partial: Box::new(traj),
            })
        }
    }
}

/// Finite-difference check of the energy and quotient equations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedIdentityReport {
    /// `sup |R' − (R − R²/2 − Σρ⁴/4)|` at interior samples.
    pub energy_residual: f64,
    /// `sup |Q' − ρ_h² Q (1 − Q²)/8|` over all `k ≠ h` in the support.
    pub quotient_residual: Option<f64>,
    /// Reference mode `h` (largest initial amplitude).
    pub reference: Option<usize>,
    /// `(min, max)` of `R` over the trailing half of the run.
    pub trailing_band: (f64, f64),
    /// Whether the trailing band lies in `[4/3, 2]`.
    pub band_ok: bool,
    pub notice: Option<String>,
}

pub fn verify_averaged_identities(traj: &Trajectory) -> Result<AveragedIdentityReport> {
    let states = traj.averaged_states()?;
    if states.len() < 3 {
        return Err(Error::invalid("need at least 3 samples for central differences"));
    }
    let r: Vec<f64> = states.iter().map(|s| s.rescaled_energy()).collect();
    let s: Vec<f64> = states.iter().map(|s| s.s).collect();
    let mut energy_residual: f64 = 0.0;
    for i in 1..states.len() - 1 {
        let d = (r[i + 1] - r[i - 1]) / (s[i + 1] - s[i - 1]);
        let s4 = sum::ordered_map(&states[i].rho, |x| x.powi(4));
        let rhs = r[i] - 0.5 * r[i] * r[i] - 0.25 * s4;
        energy_residual = energy_residual.max((d - rhs).abs());
    }

    let support = states[0].support();
    let (quotient_residual, reference, notice) = if support.len() < 2 {
        (None, None, Some("fewer than two active modes: quotient check skipped".to_string()))
    } else {
        let h = reference_mode(&states[0].rho, &support);
        let mut worst: f64 = 0.0;
        for &k in support.indices().iter().filter(|&&k| k != h) {
            let q: Vec<f64> = states.iter().map(|st| st.rho[k] / st.rho[h]).collect();
            for i in 1..states.len() - 1 {
                let d = (q[i + 1] - q[i - 1]) / (s[i + 1] - s[i - 1]);
                let rh = states[i].rho[h];
                let rhs = 0.125 * rh * rh * q[i] * (1.0 - q[i] * q[i]);
                worst = worst.max((d - rhs).abs());
            }
        }
        (Some(worst), Some(h), None)
    };

    let half = s[0] + 0.5 * (s[s.len() - 1] - s[0]);
    let trailing: Vec<f64> = s.iter().zip(&r).filter(|(t, _)| **t >= half).map(|(_, v)| *v).collect();
    let lo = trailing.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = trailing.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(AveragedIdentityReport {
        energy_residual,
        quotient_residual,
        reference,
        trailing_band: (lo, hi),
        band_ok: lo >= 4.0 / 3.0 - 1e-9 && hi <= 2.0 + 1e-9,
        notice,
    })
}

/// Result of comparing the closed-form gradient with finite differences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientCheck {
    pub states: usize,
    /// `max |∂F_fd − ∂F| / max(‖∇F‖∞, 1e-12)` over states.
    pub max_rel_error: f64,
    /// Components where `rhs_averaged` differs from `−grad_f`.
    pub rhs_mismatches: usize,
}

/// Central differences of `functional_f` with step `1e-5·max(1, ρ_k)`.
pub fn gradient_check(states: &[Vec<f64>]) -> GradientCheck {
    let mut max_rel_error: f64 = 0.0;
    let mut rhs_mismatches = 0;
    for rho in states {
        let g = grad_f(rho);
        let r = rhs_averaged(rho);
        rhs_mismatches += g.iter().zip(&r).filter(|(g, r)| -**g != **r).count();
        let scale = g.iter().fold(1e-12f64, |m, v| m.max(v.abs()));
        let mut x = rho.clone();
        for k in 0..rho.len() {
            let h = 1e-5 * rho[k].abs().max(1.0);
            x[k] = rho[k] + h;
            let fp = functional_f(&x);
            x[k] = rho[k] - h;
            let fm = functional_f(&x);
            x[k] = rho[k];
            max_rel_error = max_rel_error.max(((fp - fm) / (2.0 * h) - g[k]).abs() / scale);
        }
    }
    GradientCheck {
        states: states.len(),
        max_rel_error,
        rhs_mismatches,
    }
}

/// Index in `support` with the largest amplitude (lowest index on ties).
pub fn reference_mode(rho: &[f64], support: &ModeSet) -> usize {
    let mut best = support.indices()[0];
    for &k in support.indices() {
        if rho[k] > rho[best] {
            best = k;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn functional_hand_values() {
        assert_eq!(functional_f(&[0.0, 0.0]), 0.0);
        let a = 2.0 / 3f64.sqrt();
        assert!((functional_f(&[a]) + 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(functional_f(&[1.0, 1.0]), -0.1875);
    }

    #[test]
    fn stationary_profiles() {
        let p = stationary_profile(&ModeSet::new(vec![0]));
        assert!((p.amplitude.unwrap() - 1.154_700_538_379_251_5).abs() < 1e-15);
        assert!((p.energy - 4.0 / 3.0).abs() < 1e-15);
        let p = stationary_profile(&ModeSet::new(vec![0, 3, 5]));
        assert!((p.amplitude.unwrap() - 0.755_928_946_018_454_5).abs() < 1e-15);
        assert!((p.energy - 12.0 / 7.0).abs() < 1e-15);
        let p = stationary_profile(&ModeSet::default());
        assert_eq!(p.energy, 0.0);
        assert!(p.amplitude.is_none());
        for j in 1..20 {
            let set = ModeSet::new((0..j).collect());
            let p = stationary_profile(&set);
            assert!(grad_f(&p.vector(j + 3)).iter().all(|g| g.abs() < 1e-14));
        }
    }

    #[test]
    fn rhs_is_negated_gradient() {
        let rho = [0.3, 0.0, 1.7, 2.2];
        let g = grad_f(&rho);
        let r = rhs_averaged(&rho);
        for k in 0..4 {
            if rho[k] != 0.0 {
                assert_eq!(r[k].to_bits(), (-g[k]).to_bits());
            }
        }
        assert_eq!(r[1].to_bits(), 0.0f64.to_bits());
    }

    #[test]
    fn single_mode_reaches_profile() {
        let tr = integrate_averaged(&AveragedState::new(0.0, vec![1.0, 0.0, 0.0]).unwrap(), 60.0, 1e-10).unwrap();
        let last = (*tr.averaged_states().unwrap().last().unwrap()).clone();
        assert!((last.rho[0] - 2.0 / 3f64.sqrt()).abs() < 1e-6);
        assert_eq!(last.rho[1].to_bits(), 0);
        assert_eq!(last.rho[2].to_bits(), 0);
    }

    #[test]
    fn zero_state_stays_zero() {
        let tr = integrate_averaged(&AveragedState::new(0.0, vec![0.0; 4]).unwrap(), 5.0, 1e-8).unwrap();
        for st in tr.averaged_states().unwrap() {
            assert!(st.rho.iter().all(|r| r.to_bits() == 0));
        }
    }

    #[test]
    fn quotient_below_one_increases() {
        let opts = AveragedOptions {
            tol: 1e-11,
            sample_spacing: 0.01,
            ..Default::default()
        };
        let tr = integrate_averaged_with(&AveragedState::new(0.0, vec![1.0, 0.5]).unwrap(), 20.0, &opts).unwrap();
        let q: Vec<f64> = tr.averaged_states().unwrap().iter().map(|s| s.rho[1] / s.rho[0]).collect();
        assert!(q.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        assert!(q.iter().all(|&x| x < 1.0));
        let rep = verify_averaged_identities(&tr).unwrap();
        assert!(rep.energy_residual < 1e-5, "{}", rep.energy_residual);
        assert!(rep.quotient_residual.unwrap() < 1e-5);
        assert_eq!(rep.reference, Some(0));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(AveragedState::new(0.0, vec![-1.0]).is_err());
        assert!(integrate_averaged(&AveragedState::equal_mass(2), -1.0, 1e-8).is_err());
    }
}
