//! Integrals of `cos(α e^τ + ψ(τ))` and of plain complex exponentials.

use num_complex::Complex64;

use super::quad::{self, QuadOptions};
use crate::error::{Error, Result};
use crate::sum;

/// Slowly varying phase `ψ` with `|ψ'| ≤ L₃`.
pub trait PhaseFunction: Sync {
    fn value(&self, t: f64) -> f64;
    fn derivative(&self, t: f64) -> f64;
    /// Central difference of [`PhaseFunction::derivative`] unless overridden.
    fn second_derivative(&self, t: f64) -> f64 {
        let h = 1e-5 * t.abs().max(1.0);
        (self.derivative(t + h) - self.derivative(t - h)) / (2.0 * h)
    }
    fn lipschitz_bound(&self) -> f64;
}

/// `ψ(t) = offset + slope·t`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LinearPhase {
    pub offset: f64,
    pub slope: f64,
}

impl LinearPhase {
    pub const ZERO: LinearPhase = LinearPhase {
        offset: 0.0,
        slope: 0.0,
    };

    pub fn new(offset: f64, slope: f64) -> Self {
        Self { offset, slope }
    }
}

impl PhaseFunction for LinearPhase {
    fn value(&self, t: f64) -> f64 {
        self.offset + self.slope * t
    }

    fn derivative(&self, _t: f64) -> f64 {
        self.slope
    }

    fn second_derivative(&self, _t: f64) -> f64 {
        0.0
    }

    fn lipschitz_bound(&self) -> f64 {
        self.slope.abs()
    }
}

/// Samples `|ψ'|` on `[t, s]` and reports whether it stays within the declared bound.
pub fn check_lipschitz(psi: &dyn PhaseFunction, t: f64, s: f64, samples: usize) -> bool {
    let bound = psi.lipschitz_bound() * (1.0 + 1e-12) + 1e-15;
    let n = samples.max(2);
    (0..n).all(|i| {
        let x = t + (s - t) * i as f64 / (n - 1) as f64;
        psi.derivative(x).abs() <= bound
    })
}

/// Result of [`osc_integral`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscIntegral {
    pub value: f64,
    /// `(3 + L₃)/(α e^t)`.
    pub bound: f64,
    pub error_estimate: f64,
}

/// Phase rate `α e^τ` above which the integral is finished asymptotically.
pub(crate) const ASYMPTOTIC_RATE: f64 = 2.0e4;

/// `∫_t^s cos(α e^τ + ψ(τ)) dτ`; `s` may be `+∞`.
///
/// Below the asymptotic threshold the integral is taken in `x = e^τ` as
/// `∫ cos(αx + ψ(ln x))/x dx`, split into half-period panels of width `π/α`
/// with an adaptive Gauss–Kronrod rule on each. The remainder uses three
/// terms of repeated integration by parts; its truncation error is
/// `O((α e^τ)^-3)`.
pub fn osc_integral(alpha: f64, psi: &dyn PhaseFunction, t: f64, s: f64, tol: f64) -> Result<OscIntegral> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    if !(t >= 0.0 && s >= t && t.is_finite()) || s.is_nan() {
        return Err(Error::invalid(format!("need 0 <= t <= s, got t={t}, s={s}")));
    }
    let l3 = psi.lipschitz_bound();
    let bound = (3.0 + l3) / (alpha * t.exp());
    if s == t {
        return Ok(OscIntegral {
            value: 0.0,
            bound,
            error_estimate: 0.0,
        });
    }

    let rate = ASYMPTOTIC_RATE + 100.0 * l3;
    let tau_cut = (rate / alpha).ln().max(t);

    let mut value = 0.0;
    let mut err = 0.0;
    if t < tau_cut {
        let upper = s.min(tau_cut);
        let (v, e) = panel_sum(alpha, psi, t, upper, tol)?;
        value += v;
        err += e;
    }
    if s > tau_cut {
        let lo = t.max(tau_cut);
        value += asymptotic_tail(alpha, psi, lo, s);
        err += 20.0 / (alpha * lo.exp()).powi(3);
    }
    Ok(OscIntegral {
        value,
        bound,
        error_estimate: err,
    })
}

fn panel_sum(alpha: f64, psi: &dyn PhaseFunction, t: f64, s: f64, tol: f64) -> Result<(f64, f64)> {
    let xa = t.exp();
    let xb = s.exp();
    let width = std::f64::consts::PI / alpha;
    let panels = ((xb - xa) / width).ceil().max(1.0) as usize;
    let f = |x: f64| (alpha * x + psi.value(x.ln())).cos() / x;
    let per_panel = QuadOptions {
        abs_tol: tol / panels as f64,
        rel_tol: 0.0,
        max_intervals: 200,
    };
    let mut values = Vec::with_capacity(panels);
    let mut err = 0.0;
    for i in 0..panels {
        let a = xa + i as f64 * width;
        let b = if i + 1 == panels { xb } else { xa + (i + 1) as f64 * width };
        if b <= a {
            continue;
        }
        let (v, e) = quad::integrate(&f, a, b, &per_panel)?;
        values.push(v);
        err += e;
    }
    Ok((sum::compensated(values), err))
}

fn asymptotic_tail(alpha: f64, psi: &dyn PhaseFunction, a: f64, b: f64) -> f64 {
    boundary_terms(alpha, psi, b) - boundary_terms(alpha, psi, a)
}

/// `Re[e^{iΦ}(T₀ + T₁ + T₂)]` at `τ`, zero at `+∞`.
fn boundary_terms(alpha: f64, psi: &dyn PhaseFunction, tau: f64) -> f64 {
    let g = alpha * tau.exp();
    if !g.is_finite() || g > 1e150 {
        return 0.0;
    }
    let d1 = g + psi.derivative(tau);
    let d2 = g + psi.second_derivative(tau);
    let d3 = g;
    let phase = g + psi.value(tau);
    // T0 = -i/Φ', T1 = -Φ''/Φ'^3, T2 = -i(Φ'''/Φ'^4 - 3Φ''^2/Φ'^5)
    let re = -d2 / d1.powi(3);
    let im = -1.0 / d1 - (d3 / d1.powi(4) - 3.0 * d2 * d2 / d1.powi(5));
    let z = Complex64::from_polar(1.0, phase) * Complex64::new(re, im);
    z.re
}

/// `φ₁(z) = (e^z − 1)/z`, with the series near zero.
pub fn phi1(z: Complex64) -> Complex64 {
    if z.norm() < 1e-3 {
        // 1 + z/2 + z^2/6 + z^3/24 + z^4/120
        Complex64::new(1.0, 0.0) + z * (0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z / 120.0)))
    } else {
        (z.exp() - 1.0) / z
    }
}

/// `∫_{t0}^{t0+h} e^{iωτ} dτ`.
pub fn exp_integral(omega: f64, t0: f64, h: f64) -> Complex64 {
    Complex64::from_polar(1.0, omega * t0) * phi1(Complex64::new(0.0, omega * h)) * h
}
