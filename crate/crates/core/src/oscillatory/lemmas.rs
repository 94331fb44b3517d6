//! Randomized and trajectory-driven checks of the oscillatory-integral bounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::integral::{osc_integral, LinearPhase};
use super::probe::probe_with_resolution;
use super::signal::Signal;
use crate::error::Result;
use crate::par;

/// One evaluated case of the single-integral bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscCase {
    pub alpha: f64,
    pub slope: f64,
    pub offset: f64,
    pub t: f64,
    pub s: f64,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscSweepReport {
    pub cases: usize,
    pub violations: Vec<OscCase>,
    /// `max |value| / bound` over the sweep.
    pub max_ratio: f64,
}

pub const SWEEP_ALPHAS: [f64; 4] = [0.5, 1.0, 5.0, 20.0];

/// Random cases: `α` from [`SWEEP_ALPHAS`], `ψ(τ) = offset + slope·τ` with
/// `|slope| ≤ 5`, `t ∈ [0, 8]`, `s ∈ [t, t + 20]`.
pub fn random_osc_cases(seed: u64, per_alpha: usize) -> Vec<(f64, f64, f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(per_alpha * SWEEP_ALPHAS.len());
    for &alpha in &SWEEP_ALPHAS {
        for _ in 0..per_alpha {
            let slope = rng.random_range(-5.0..=5.0);
            let offset = rng.random_range(0.0..std::f64::consts::TAU);
            let t = rng.random_range(0.0..=8.0);
            let s = t + rng.random_range(0.0..=20.0);
            out.push((alpha, slope, offset, t, s));
        }
    }
    out
}

/// Evaluates the single-integral bound on every case.
pub fn osc_bound_sweep(cases: &[(f64, f64, f64, f64, f64)]) -> Result<OscSweepReport> {
    let evaluated: Vec<Result<OscCase>> = par::map(cases, |&(alpha, slope, offset, t, s)| {
        let psi = LinearPhase::new(offset, slope);
        let r = osc_integral(alpha, &psi, t, s, 1e-11)?;
        Ok(OscCase {
            alpha,
            slope,
            offset,
            t,
            s,
            value: r.value,
            bound: r.bound,
        })
    });
    let mut violations = Vec::new();
    let mut max_ratio: f64 = 0.0;
    for c in evaluated {
        let c = c?;
        max_ratio = max_ratio.max(c.value.abs() / c.bound);
        if c.value.abs() > c.bound {
            violations.push(c);
        }
    }
    Ok(OscSweepReport {
        cases: cases.len(),
        violations,
        max_ratio,
    })
}

/// Envelope of `|∫_t^s g·f|` against a product bound `3·L·M·e^{−t}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductBoundCheck {
    /// Envelope constant of the oscillating factor(s).
    pub l_g: f64,
    /// Bound on the smooth factor(s) and their derivatives.
    pub l_f: f64,
    /// `(t, envelope, 3·l_g·l_f·e^{−t})`.
    pub rows: Vec<(f64, f64, f64)>,
    pub violations: usize,
}

/// `g(τ) = a(λe^τ + c) = sin²(λe^τ + c) − 1/2`, whose partial integrals are
/// bounded by `3/(4λ)·e^{−t}`.
pub fn trig_correction(lambda: f64, phase: f64) -> (impl Fn(f64) -> f64 + Clone, f64) {
    (
        move |tau: f64| (lambda * tau.exp() + phase).sin().powi(2) - 0.5,
        0.75 / lambda,
    )
}

/// `max(sup|f|, sup|f'|)` on `[a, b]` by dense sampling.
pub fn smooth_bound(f: &Signal, a: f64, b: f64) -> f64 {
    let n = (((b - a) * 200.0).ceil() as usize).max(2);
    (0..=n)
        .map(|i| {
            let t = a + (b - a) * i as f64 / n as f64;
            f.eval(t).abs().max(f.derivative(t).abs())
        })
        .fold(0.0, f64::max)
}

/// Product bound `|∫_t^s g·f| ≤ 3 L₄ L₅ e^{−t}` for one oscillating factor.
pub fn product_bound_check<G: Fn(f64) -> f64>(
    g: G,
    l4: f64,
    f: &Signal,
    t_grid: &[f64],
    s_max: f64,
) -> Result<ProductBoundCheck> {
    let l5 = smooth_bound(f, t_grid[0], s_max);
    let report = probe_with_resolution(|t| g(t) * f.eval(t), t_grid, s_max, 1000)?;
    Ok(tabulate(report.envelope, l4, l5))
}

/// Series bound `|∫_t^s Σ g_k f_k| ≤ 3 L₇ L₈ e^{−t}` for a finite family.
///
/// `L₇` is the largest envelope constant among the `g_k` and `L₈` bounds
/// `Σ|f_k|` and `Σ|f_k'|`.
pub fn series_bound_check<G: Fn(f64) -> f64>(
    terms: &[(G, f64, Signal)],
    t_grid: &[f64],
    s_max: f64,
) -> Result<ProductBoundCheck> {
    let l7 = terms.iter().map(|t| t.1).fold(0.0, f64::max);
    let a = t_grid[0];
    let n = (((s_max - a) * 200.0).ceil() as usize).max(2);
    let mut l8: f64 = 0.0;
    for i in 0..=n {
        let t = a + (s_max - a) * i as f64 / n as f64;
        let sf: f64 = terms.iter().map(|x| x.2.eval(t).abs()).sum();
        let sd: f64 = terms.iter().map(|x| x.2.derivative(t).abs()).sum();
        l8 = l8.max(sf).max(sd);
    }
    let report = probe_with_resolution(
        |t| terms.iter().map(|(g, _, f)| g(t) * f.eval(t)).sum(),
        t_grid,
        s_max,
        1000,
    )?;
    Ok(tabulate(report.envelope, l7, l8))
}

fn tabulate(envelope: Vec<(f64, f64)>, lg: f64, lf: f64) -> ProductBoundCheck {
    let rows: Vec<(f64, f64, f64)> = envelope
        .into_iter()
        .map(|(t, e)| (t, e, 3.0 * lg * lf * (-t).exp()))
        .collect();
    let violations = rows.iter().filter(|r| r.1 > r.2).count();
    ProductBoundCheck {
        l_g: lg,
        l_f: lf,
        rows,
        violations,
    }
}
