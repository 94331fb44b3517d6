//! Integration of the modal system `u_k'' + (Σ u'_i²) u'_k + λ_k² u_k = 0`.

mod rotating;
mod verify;

use serde::{Deserialize, Serialize};

pub use verify::{
    coefficient_envelope, energy_violations, fit_decay, fit_rescaled_bounds, verify_energy_identity, verify_polar_reduction, DecayFit,
    ReductionResidualReport,
};
pub(crate) use verify::unwrap as unwrap_phase;

use crate::error::{Error, Result};
use crate::ode::{self, Control, Dopri5Options, Event};
use crate::spectral::{state_support, ModalState, Spectrum};
use crate::sum;
use crate::trajectory::{RunStats, Sample, Trajectory, TrajectoryMeta};

/// Where samples are taken.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sampler {
    /// `count` points uniform in `log(1+t)`, including `0` and `t_end`.
    LogSpaced { count: usize },
    /// 16 points per doubling of `1+t`, plus `t_end`.
    Dyadic,
}

pub const DYADIC_PER_OCTAVE: u32 = 16;

impl Sampler {
    pub fn times(&self, t_end: f64) -> Result<Vec<f64>> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::invalid(format!("t_end must be positive, got {t_end}")));
        }
        let mut out = match *self {
            Sampler::LogSpaced { count } => {
                if count < 2 {
                    return Err(Error::invalid("log_spaced sampler needs count >= 2"));
                }
                let top = t_end.ln_1p();
                let last = count - 1;
                (0..count)
                    .map(|i| if i == last { t_end } else { (top * i as f64 / last as f64).exp_m1() })
                    .collect::<Vec<_>>()
            }
            Sampler::Dyadic => {
                let mut v = Vec::new();
                let mut j = 0u32;
                loop {
                    let t = (j as f64 / DYADIC_PER_OCTAVE as f64).exp2() - 1.0;
                    if t >= t_end {
                        break;
                    }
                    v.push(t);
                    j += 1;
                }
                v.push(t_end);
                v
            }
        };
        out.dedup();
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Dormand–Prince 5(4) on `(u, u')`.
    #[default]
    AdaptiveRk,
    /// Exponential midpoint rule on `a_k = e^{iλ_k t}(λ_k u_k + i u'_k)`.
    RotatingFrame,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::AdaptiveRk => "adaptive_rk",
            Scheme::RotatingFrame => "rotating_frame",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Upper bound on the step; `None` means unbounded.
    #[serde(default)]
    pub max_step: Option<f64>,
    pub t_end: f64,
    pub sampler: Sampler,
    #[serde(default)]
    pub scheme: Scheme,
}

impl IntegratorConfig {
    pub fn new(t_end: f64, sampler: Sampler) -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: None,
            t_end,
            sampler,
            scheme: Scheme::AdaptiveRk,
        }
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if !(v > 0.0 && v <= 1e-2) {
                return Err(Error::invalid(format!("{name} must lie in (0, 1e-2], got {v}")));
            }
        }
        if let Some(h) = self.max_step {
            if !(h > 0.0) {
                return Err(Error::invalid(format!("max_step must be positive, got {h}")));
            }
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::invalid(format!("t_end must be positive, got {}", self.t_end)));
        }
        Ok(())
    }
}

/// Integrates the full modal system from `initial` to `cfg.t_end`.
///
/// Modes whose initial data are both exactly zero are held at `+0.0`.
pub fn integrate_full(initial: &ModalState, spec: &Spectrum, cfg: &IntegratorConfig) -> Result<Trajectory> {
    initial.validate()?;
    initial.check_against(spec)?;
    cfg.validate()?;
    if cfg.t_end <= initial.t {
        return Err(Error::invalid("t_end must exceed the initial time"));
    }
    let mut times: Vec<f64> = cfg
        .sampler
        .times(cfg.t_end)?
        .into_iter()
        .filter(|&t| t > initial.t)
        .collect();
    times.insert(0, initial.t);

    let support = state_support(initial);
    let meta = TrajectoryMeta {
        scenario: String::new(),
        spectrum: Some(spec.clone()),
        scheme: cfg.scheme.name().into(),
        rel_tol: cfg.rel_tol,
        abs_tol: cfg.abs_tol,
        support,
        stats: RunStats::default(),
    };
    let mut traj = Trajectory::new(meta);
    let result = match cfg.scheme {
        Scheme::AdaptiveRk => baseline(initial, spec, cfg, &times, &mut traj),
        Scheme::RotatingFrame => rotating::run(initial, spec, cfg, &times, &mut traj),
    };
    match result {
        Ok(stats) => {
            traj.meta.stats = stats;
            Ok(traj)
        }
        Err((at, reason, stats)) => {
            traj.meta.stats = stats;
            Err(Error::IntegrationFailure {
                at,
                reason,
                partial: Box::new(traj),
            })
        }
    }
}

type Failure = (f64, String, RunStats);

fn baseline(
    initial: &ModalState,
    spec: &Spectrum,
    cfg: &IntegratorConfig,
    times: &[f64],
    traj: &mut Trajectory,
) -> std::result::Result<RunStats, Failure> {
    let n = spec.len();
    let lambdas = spec.lambdas();
    let mask = traj.meta.support.mask(n);
    let sys = (2 * n, |_t: f64, y: &[f64], dy: &mut [f64]| {
        let (u, du) = y.split_at(n);
        let damping = sum::compensated(du.iter().map(|v| v * v));
        for k in 0..n {
            if mask[k] {
                dy[k] = du[k];
                dy[n + k] = -damping * du[k] - lambdas[k] * lambdas[k] * u[k];
            } else {
                dy[k] = 0.0;
                dy[n + k] = 0.0;
            }
        }
    });
    let period = std::f64::consts::TAU / spec.max_lambda();
    let opts = Dopri5Options {
        rel_tol: cfg.rel_tol,
        abs_tol: cfg.abs_tol,
        max_step: cfg.max_step.unwrap_or(f64::INFINITY).min(0.25 * period),
        initial_step: None,
        max_steps: 500_000_000,
    };
    let mut y0 = initial.u.clone();
    y0.extend_from_slice(&initial.du);
    let mut push_err = None;
    let out = ode::integrate(&sys, initial.t, &y0, times, &opts, |ev| {
        if let Event::Sample { t, y } = ev {
            let state = ModalState {
                t,
                u: y[..n].to_vec(),
                du: y[n..].to_vec(),
            };
            if let Err(e) = traj.push(Sample::Modal(state)) {
                push_err = Some(e.to_string());
                return Control::Stop;
            }
        }
        Control::Continue
    });
    let stats = |s: ode::OdeStats| RunStats {
        accepted_steps: s.accepted,
        rejected_steps: s.rejected,
        rhs_evals: s.rhs_evals,
        stopped_early_at: None,
    };
    match out {
        Ok(o) => match push_err {
            Some(e) => Err((o.t, e, stats(o.stats))),
            None => Ok(stats(o.stats)),
        },
        Err(f) => Err((f.t, f.reason, stats(f.stats))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_spaced_endpoints() {
        let t = Sampler::LogSpaced { count: 5 }.times(15.0).unwrap();
        assert_eq!(t.len(), 5);
        assert_eq!(t[0], 0.0);
        assert_eq!(t[4], 15.0);
        assert!((t[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn dyadic_octaves() {
        let t = Sampler::Dyadic.times(3.0).unwrap();
        assert_eq!(t[0], 0.0);
        assert_eq!(t[16], 1.0);
        assert_eq!(*t.last().unwrap(), 3.0);
        assert_eq!(t.len(), 33);
    }

    #[test]
    fn config_validation() {
        let c = IntegratorConfig::new(10.0, Sampler::Dyadic);
        assert!(c.validate().is_ok());
        assert!(c.clone().with_tolerances(0.5, 1e-10).validate().is_err());
        let mut bad = c.clone();
        bad.t_end = -1.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn zero_state_is_stationary() {
        let spec = Spectrum::new(vec![1.0, 2.0]).unwrap();
        let tr = integrate_full(&ModalState::zeros(2), &spec, &IntegratorConfig::new(10.0, Sampler::Dyadic)).unwrap();
        for d in tr.diagnostics() {
            assert_eq!(d.energy, 0.0);
        }
    }
}
