//! Coefficient functions of time used by the scalar harnesses.

use std::sync::Arc;

use super::integral::{osc_integral, LinearPhase, ASYMPTOTIC_RATE};

#[derive(Clone)]
pub enum Signal {
    Zero,
    Constant(f64),
    /// `amp · e^{−rate·t}`
    Exp { amp: f64, rate: f64 },
    /// `amp · cos(α e^t + offset + slope·t)`
    Chirp {
        amp: f64,
        alpha: f64,
        offset: f64,
        slope: f64,
    },
    /// `amp · cos(ω t + phase) / (1+t)^power`
    DampedCos {
        amp: f64,
        omega: f64,
        phase: f64,
        power: f64,
    },
    /// Piecewise-linear through `(t, value)` pairs, constant outside.
    Tabulated(Arc<Vec<(f64, f64)>>),
    Sum(Vec<Signal>),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for Signal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Signal::Zero => write!(f, "Zero"),
            Signal::Constant(c) => write!(f, "Constant({c})"),
            Signal::Exp { amp, rate } => write!(f, "Exp({amp}, {rate})"),
            Signal::Chirp {
                amp,
                alpha,
                offset,
                slope,
            } => write!(f, "Chirp({amp}, {alpha}, {offset}, {slope})"),
            Signal::DampedCos {
                amp,
                omega,
                phase,
                power,
            } => write!(f, "DampedCos({amp}, {omega}, {phase}, {power})"),
            Signal::Tabulated(v) => write!(f, "Tabulated({} points)", v.len()),
            Signal::Sum(v) => f.debug_tuple("Sum").field(v).finish(),
            Signal::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl Signal {
    pub fn chirp(amp: f64, alpha: f64) -> Self {
        Signal::Chirp {
            amp,
            alpha,
            offset: 0.0,
            slope: 0.0,
        }
    }

    pub fn tabulated(points: Vec<(f64, f64)>) -> Self {
        Signal::Tabulated(Arc::new(points))
    }

    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Signal::Custom(Arc::new(f))
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Signal::Zero => 0.0,
            Signal::Constant(c) => *c,
            Signal::Exp { amp, rate } => amp * (-rate * t).exp(),
            Signal::Chirp {
                amp,
                alpha,
                offset,
                slope,
            } => amp * (alpha * t.exp() + offset + slope * t).cos(),
            Signal::DampedCos {
                amp,
                omega,
                phase,
                power,
            } => amp * (omega * t + phase).cos() / (1.0 + t).powf(*power),
            Signal::Tabulated(pts) => interpolate(pts, t),
            Signal::Sum(parts) => parts.iter().map(|p| p.eval(t)).sum(),
            Signal::Custom(f) => f(t),
        }
    }

    /// Value with chirps replaced by their mean (zero) once past their onset.
    pub fn eval_averaged(&self, t: f64, onset: f64) -> f64 {
        match self {
            Signal::Chirp { .. } if t >= onset => 0.0,
            Signal::Sum(parts) => parts.iter().map(|p| p.eval_averaged(t, onset)).sum(),
            other => other.eval(t),
        }
    }

    /// Earliest time from which some chirp component oscillates fast enough
    /// for its tail antiderivative to be evaluated asymptotically.
    pub fn fast_onset(&self) -> Option<f64> {
        match self {
            Signal::Chirp { alpha, slope, .. } => {
                Some(((ASYMPTOTIC_RATE + 100.0 * slope.abs()) / alpha).ln().max(0.0) + 1e-3)
            }
            Signal::Sum(parts) => parts
                .iter()
                .filter_map(Signal::fast_onset)
                .min_by(f64::total_cmp),
            _ => None,
        }
    }

    /// `−∫_t^∞` of the chirp components (their antiderivative vanishing at infinity).
    pub fn chirp_tail(&self, t: f64) -> f64 {
        match self {
            Signal::Chirp {
                amp,
                alpha,
                offset,
                slope,
            } => {
                let psi = LinearPhase::new(*offset, *slope);
                let v = osc_integral(*alpha, &psi, t, f64::INFINITY, 1e-12)
                    .map(|r| r.value)
                    .unwrap_or(0.0);
                -amp * v
            }
            Signal::Sum(parts) => parts.iter().map(|p| p.chirp_tail(t)).sum(),
            _ => 0.0,
        }
    }

    /// Central-difference derivative.
    pub fn derivative(&self, t: f64) -> f64 {
        let h = 1e-6 * t.abs().max(1.0);
        let lo = (t - h).max(0.0);
        (self.eval(t + h) - self.eval(lo)) / (t + h - lo)
    }
}

fn interpolate(pts: &[(f64, f64)], t: f64) -> f64 {
    match pts.len() {
        0 => 0.0,
        1 => pts[0].1,
        _ => {
            if t <= pts[0].0 {
                return pts[0].1;
            }
            let last = pts[pts.len() - 1];
            if t >= last.0 {
                return last.1;
            }
            let i = pts.partition_point(|p| p.0 <= t);
            let (t0, v0) = pts[i - 1];
            let (t1, v1) = pts[i];
            v0 + (v1 - v0) * (t - t0) / (t1 - t0)
        }
    }
}

/// Piecewise-constant adversary `ξ(t) ∈ {−1, +1}` for the two-sided inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Adversary {
    Constant(f64),
    /// `+1` on the first half of each period, `−1` on the second.
    SquareWave { period: f64 },
}

impl Adversary {
    /// The standard family: constant ±1 and square waves with periods 1 and 5.
    pub fn family() -> Vec<Adversary> {
        vec![
            Adversary::Constant(1.0),
            Adversary::Constant(-1.0),
            Adversary::SquareWave { period: 1.0 },
            Adversary::SquareWave { period: 5.0 },
        ]
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Adversary::Constant(c) => c,
            Adversary::SquareWave { period } => {
                if (t / period).fract() < 0.5 {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }

    /// Switching times strictly inside `(a, b)`.
    pub fn switches(&self, a: f64, b: f64) -> Vec<f64> {
        match *self {
            Adversary::Constant(_) => Vec::new(),
            Adversary::SquareWave { period } => {
                let half = 0.5 * period;
                let mut k = (a / half).floor() as i64 + 1;
                let mut out = Vec::new();
                loop {
                    let x = k as f64 * half;
                    if x >= b {
                        break;
                    }
                    if x > a {
                        out.push(x);
                    }
                    k += 1;
                }
                out
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            Adversary::Constant(c) => format!("constant({c:+})"),
            Adversary::SquareWave { period } => format!("square_wave({period})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabulated_interpolates() {
        let s = Signal::tabulated(vec![(0.0, 1.0), (2.0, 3.0)]);
        assert_eq!(s.eval(1.0), 2.0);
        assert_eq!(s.eval(-1.0), 1.0);
        assert_eq!(s.eval(5.0), 3.0);
    }

    #[test]
    fn chirp_onset_and_tail() {
        let s = Signal::chirp(1.0, 1.0);
        let onset = s.fast_onset().unwrap();
        assert!((onset - 2.0e4f64.ln()).abs() < 1e-2);
        assert_eq!(s.eval_averaged(onset + 1.0, onset), 0.0);
        // |tail| ≤ 3 e^{-t} by the oscillatory-integral bound
        for t in [0.0, 1.0, 5.0, 10.0] {
            assert!(s.chirp_tail(t).abs() <= 3.0 * (-t).exp());
        }
    }

    #[test]
    fn square_wave_switches() {
        let a = Adversary::SquareWave { period: 1.0 };
        assert_eq!(a.switches(0.0, 2.0), vec![0.5, 1.0, 1.5]);
        assert_eq!(a.eval(0.25), 1.0);
        assert_eq!(a.eval(0.75), -1.0);
        assert!(Adversary::Constant(1.0).switches(0.0, 10.0).is_empty());
    }
}
