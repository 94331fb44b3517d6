//! Trigonometric corrections and running time-averages of `sin²(λe^s)`-type products.

use serde::{Deserialize, Serialize};

use super::integral::{osc_integral, LinearPhase};
use crate::error::{Error, Result};

/// Deviations of the oscillating coefficients from their time-averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrigCorrections;

impl TrigCorrections {
    /// `a(θ) = sin²θ − 1/2`
    pub fn a(theta: f64) -> f64 {
        theta.sin().powi(2) - 0.5
    }

    /// `b(θ) = sin⁴θ − 3/8`
    pub fn b(theta: f64) -> f64 {
        theta.sin().powi(4) - 0.375
    }

    /// `c(θ_h, θ_k) = sin²θ_h · sin²θ_k − 1/4`
    pub fn c(theta_h: f64, theta_k: f64) -> f64 {
        theta_h.sin().powi(2) * theta_k.sin().powi(2) - 0.25
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AverageKind {
    Sin2 { lambda: f64 },
    Sin4 { lambda: f64 },
    Sin2Sin2 { lambda: f64, mu: f64 },
}

impl AverageKind {
    /// Limit of the running average as `T → ∞`.
    pub fn limit(&self) -> f64 {
        match *self {
            AverageKind::Sin2 { .. } => 0.5,
            AverageKind::Sin4 { .. } => 0.375,
            AverageKind::Sin2Sin2 { lambda, mu } if lambda == mu => 0.375,
            AverageKind::Sin2Sin2 { .. } => 0.25,
        }
    }

    /// The product itself at `s`.
    pub fn integrand(&self, s: f64) -> f64 {
        let e = s.exp();
        match *self {
            AverageKind::Sin2 { lambda } => (lambda * e).sin().powi(2),
            AverageKind::Sin4 { lambda } => (lambda * e).sin().powi(4),
            AverageKind::Sin2Sin2 { lambda, mu } => (lambda * e).sin().powi(2) * (mu * e).sin().powi(2),
        }
    }
}

/// `(1/T) ∫_0^T` of the selected product.
///
/// The product is expanded into a constant plus cosines `cos(ω e^s)` and each
/// cosine integral is evaluated with [`osc_integral`].
pub fn time_average(kind: AverageKind, horizon: f64) -> Result<f64> {
    if !(horizon >= 1.0) {
        return Err(Error::invalid(format!("horizon must be >= 1, got {horizon}")));
    }
    let tol = 1e-11;
    let osc = |omega: f64| -> Result<f64> {
        Ok(osc_integral(omega, &LinearPhase::ZERO, 0.0, horizon, tol)?.value)
    };
    let positive = |x: f64| {
        if x > 0.0 && x.is_finite() {
            Ok(())
        } else {
            Err(Error::invalid(format!("frequency must be positive, got {x}")))
        }
    };
    let integral = match kind {
        AverageKind::Sin2 { lambda } => {
            positive(lambda)?;
            0.5 * horizon - 0.5 * osc(2.0 * lambda)?
        }
        AverageKind::Sin4 { lambda } => {
            positive(lambda)?;
            0.375 * horizon - 0.5 * osc(2.0 * lambda)? + 0.125 * osc(4.0 * lambda)?
        }
        AverageKind::Sin2Sin2 { lambda, mu } => {
            positive(lambda)?;
            positive(mu)?;
            // sin²a sin²b = 1/4 − cos2a/4 − cos2b/4 + cos(2a+2b)/8 + cos(2a−2b)/8
            let diff = if lambda == mu {
                horizon
            } else {
                osc(2.0 * (lambda - mu).abs())?
            };
            0.25 * horizon - 0.25 * osc(2.0 * lambda)? - 0.25 * osc(2.0 * mu)?
                + 0.125 * osc(2.0 * (lambda + mu))?
                + 0.125 * diff
        }
    };
    Ok(integral / horizon)
}
