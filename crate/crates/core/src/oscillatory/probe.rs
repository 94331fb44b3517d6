//! Numerical probe of semi-integrability: `sup_{s∈[t, s_max]} |∫_t^s f|` on a grid.

use serde::{Deserialize, Serialize};

use super::quad::{self, QuadOptions};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum SemiIntegrability {
    /// Envelope fits `C e^{-rate·t}` with `rate >= 0.5`.
    ExponentialDecay { rate: f64 },
    /// Partial integrals settle but not exponentially fast.
    SemiIntegrable,
    /// Partial integrals keep growing over the probed horizon.
    Divergent,
    Inconclusive,
}

impl SemiIntegrability {
    pub fn is_semi_integrable(&self) -> bool {
        matches!(
            self,
            SemiIntegrability::ExponentialDecay { .. } | SemiIntegrability::SemiIntegrable
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    /// `(t, sup_{s∈[t, s_max]} |∫_t^s f|)` for each grid point.
    pub envelope: Vec<(f64, f64)>,
    pub class: SemiIntegrability,
    /// `max_t envelope(t)·e^t`: the constant `C` in `envelope ≤ C e^{-t}`.
    pub unit_rate_constant: f64,
}

/// Resolution of the dense `s` sample, in nodes per unit time.
pub const DEFAULT_NODES_PER_UNIT: usize = 1000;

/// Builds the envelope of partial integrals of `f` over the grid.
///
/// Grid points should leave headroom before `s_max`; the envelope at
/// `t = s_max` is zero by construction.
pub fn semi_integrability_probe<F: Fn(f64) -> f64>(f: F, t_grid: &[f64], s_max: f64) -> Result<ProbeReport> {
    probe_with_resolution(f, t_grid, s_max, DEFAULT_NODES_PER_UNIT)
}

pub fn probe_with_resolution<F: Fn(f64) -> f64>(
    f: F,
    t_grid: &[f64],
    s_max: f64,
    nodes_per_unit: usize,
) -> Result<ProbeReport> {
    if t_grid.is_empty() {
        return Err(Error::invalid("probe grid is empty"));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("probe grid must be strictly increasing"));
    }
    let t_min = t_grid[0];
    if !(s_max > *t_grid.last().unwrap()) {
        return Err(Error::invalid("s_max must exceed every grid point"));
    }

    // dense nodes including every grid point
    let mut nodes: Vec<f64> = Vec::new();
    let step = 1.0 / nodes_per_unit.max(1) as f64;
    let mut cuts: Vec<f64> = t_grid.to_vec();
    cuts.push(s_max);
    nodes.push(t_min);
    for w in cuts.windows(2) {
        let n = ((w[1] - w[0]) / step).ceil().max(1.0) as usize;
        for i in 1..=n {
            nodes.push(if i == n { w[1] } else { w[0] + (w[1] - w[0]) * i as f64 / n as f64 });
        }
    }

    let opts = QuadOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-11,
        max_intervals: 400,
    };
    let mut cumulative = Vec::with_capacity(nodes.len());
    cumulative.push(0.0);
    let mut acc = 0.0;
    for w in nodes.windows(2) {
        acc += quad::integrate(&f, w[0], w[1], &opts)?.0;
        cumulative.push(acc);
    }

    // running max/min of the cumulative integral from the right
    let mut hi = vec![0.0; nodes.len()];
    let mut lo = vec![0.0; nodes.len()];
    let last = nodes.len() - 1;
    hi[last] = cumulative[last];
    lo[last] = cumulative[last];
    for i in (0..last).rev() {
        hi[i] = hi[i + 1].max(cumulative[i]);
        lo[i] = lo[i + 1].min(cumulative[i]);
    }
    let mut envelope = Vec::with_capacity(t_grid.len());
    let mut cursor = 0;
    for &t in t_grid {
        while nodes[cursor] < t {
            cursor += 1;
        }
        let base = cumulative[cursor];
        envelope.push((t, (hi[cursor] - base).abs().max((base - lo[cursor]).abs())));
    }

    let at = |x: f64| -> f64 {
        let i = nodes.partition_point(|n| *n < x).min(last);
        cumulative[i]
    };
    let span = s_max - t_min;
    let d1 = at(t_min + 0.5 * span) - at(t_min + 0.25 * span);
    let d2 = at(s_max) - at(t_min + 0.5 * span);
    let class = classify(&envelope, d1, d2);
    let unit_rate_constant = envelope
        .iter()
        .map(|(t, e)| e * t.exp())
        .fold(0.0, f64::max);
    Ok(ProbeReport {
        envelope,
        class,
        unit_rate_constant,
    })
}

fn classify(envelope: &[(f64, f64)], d1: f64, d2: f64) -> SemiIntegrability {
    let e0 = envelope[0].1;
    if d2.abs() >= 0.75 * d1.abs() && d2.abs() >= 0.1 * e0 && d2.abs() > 1e-12 {
        return SemiIntegrability::Divergent;
    }
    if envelope.len() < 2 {
        return SemiIntegrability::Inconclusive;
    }
    let pts: Vec<(f64, f64)> = envelope
        .iter()
        .filter(|(_, e)| *e > 1e-14)
        .map(|(t, e)| (*t, e.ln()))
        .collect();
    if pts.len() >= 3 {
        let slope = least_squares_slope(&pts);
        if slope <= -0.5 {
            return SemiIntegrability::ExponentialDecay { rate: -slope };
        }
    }
    let e_last = envelope.last().unwrap().1;
    if e0 > 0.0 && e_last < 0.5 * e0 {
        SemiIntegrability::SemiIntegrable
    } else if e0 == 0.0 {
        SemiIntegrability::ExponentialDecay { rate: f64::INFINITY }
    } else {
        SemiIntegrability::Inconclusive
    }
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}
