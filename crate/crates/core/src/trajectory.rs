//! Sampled solutions plus their per-sample energy diagnostics.

use serde::{Deserialize, Serialize};

use crate::averaged::AveragedState;
use crate::error::{Error, Result};
use crate::spectral::{modal_energies, ModalState, ModeSet, Spectrum};
use crate::sum;

/// One recorded phase point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Sample {
    /// Full system, original time `t`.
    Modal(ModalState),
    /// Averaged flow, flow time `s`.
    Averaged(AveragedState),
}

impl Sample {
    /// `t` for modal samples, `s` for averaged ones.
    pub fn time(&self) -> f64 {
        match self {
            Sample::Modal(m) => m.t,
            Sample::Averaged(a) => a.s,
        }
    }
}

/// Energies recomputed from a sample.
///
/// For modal samples `energy` is the classical energy `E`, `rescaled` is
/// `(1+t)·E` and `modal[k]` is `u'_k² + λ_k² u_k²`. For averaged samples all
/// quantities live in rescaled units: `energy = rescaled = R = Σρ²` and
/// `modal[k] = ρ_k²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub energy: f64,
    pub rescaled: f64,
    pub modal: Vec<f64>,
}

impl Diagnostics {
    pub fn of(sample: &Sample, spectrum: Option<&Spectrum>) -> Result<Self> {
        match sample {
            Sample::Modal(m) => {
                let spec = spectrum
                    .ok_or_else(|| Error::invalid("modal samples need a spectrum"))?;
                m.check_against(spec)?;
                let modal = modal_energies(&m.u, &m.du, spec.lambdas());
                let energy = sum::ordered(&modal);
                Ok(Self {
                    energy,
                    rescaled: (1.0 + m.t) * energy,
                    modal,
                })
            }
            Sample::Averaged(a) => {
                let modal: Vec<f64> = a.rho.iter().map(|r| r * r).collect();
                let energy = sum::ordered(&modal);
                Ok(Self {
                    energy,
                    rescaled: energy,
                    modal,
                })
            }
        }
    }
}

/// Run metadata carried alongside the samples.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub scenario: String,
    pub spectrum: Option<Spectrum>,
    pub scheme: String,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub support: ModeSet,
    pub stats: RunStats,
}

/// Integrator counters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RunStats {
    pub accepted_steps: u64,
    pub rejected_steps: u64,
    pub rhs_evals: u64,
    /// Set when the run stopped before its nominal end (converged flow).
    pub stopped_early_at: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub meta: TrajectoryMeta,
    samples: Vec<Sample>,
    diagnostics: Vec<Diagnostics>,
}

impl Trajectory {
    pub fn new(meta: TrajectoryMeta) -> Self {
        Self {
            meta,
            samples: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    /// Appends a sample; times must be strictly increasing.
    pub fn push(&mut self, sample: Sample) -> Result<()> {
        if let Some(last) = self.samples.last() {
            if !(sample.time() > last.time()) {
                return Err(Error::invalid(format!(
                    "sample time {} does not follow {}",
                    sample.time(),
                    last.time()
                )));
            }
        }
        let d = Diagnostics::of(&sample, self.meta.spectrum.as_ref())?;
        self.samples.push(sample);
        self.diagnostics.push(d);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn diagnostics(&self) -> &[Diagnostics] {
        &self.diagnostics
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(Sample::time).collect()
    }

    pub fn spectrum(&self) -> Option<&Spectrum> {
        self.meta.spectrum.as_ref()
    }

    pub fn is_modal(&self) -> bool {
        matches!(self.samples.first(), Some(Sample::Modal(_)))
    }

    /// Number of modes per sample (0 for an empty trajectory).
    pub fn modes(&self) -> usize {
        match self.samples.first() {
            Some(Sample::Modal(m)) => m.len(),
            Some(Sample::Averaged(a)) => a.rho.len(),
            None => 0,
        }
    }

    /// Modal states; errors on averaged trajectories.
    pub fn modal_states(&self) -> Result<Vec<&ModalState>> {
        self.samples
            .iter()
            .map(|s| match s {
                Sample::Modal(m) => Ok(m),
                Sample::Averaged(_) => Err(Error::invalid("expected a full-system trajectory")),
            })
            .collect()
    }

    /// Averaged states; errors on modal trajectories.
    pub fn averaged_states(&self) -> Result<Vec<&AveragedState>> {
        self.samples
            .iter()
            .map(|s| match s {
                Sample::Averaged(a) => Ok(a),
                Sample::Modal(_) => Err(Error::invalid("expected an averaged-flow trajectory")),
            })
            .collect()
    }

    /// Recomputes every diagnostic row and compares bit-for-bit.
    pub fn diagnostics_consistent(&self) -> bool {
        self.samples.iter().zip(&self.diagnostics).all(|(s, d)| {
            Diagnostics::of(s, self.meta.spectrum.as_ref())
                .map(|r| r == *d)
                .unwrap_or(false)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> TrajectoryMeta {
        TrajectoryMeta {
            spectrum: Some(Spectrum::new(vec![1.0, 2.0]).unwrap()),
            ..Default::default()
        }
    }

    #[test]
    fn times_must_increase() {
        let mut tr = Trajectory::new(meta());
        tr.push(Sample::Modal(ModalState::zeros(2))).unwrap();
        assert!(tr.push(Sample::Modal(ModalState::zeros(2))).is_err());
        let mut s = ModalState::zeros(2);
        s.t = 1.0;
        tr.push(Sample::Modal(s)).unwrap();
        assert_eq!(tr.times(), vec![0.0, 1.0]);
    }

    #[test]
    fn diagnostics_recompute() {
        let mut tr = Trajectory::new(meta());
        let s = ModalState::new(3.0, vec![0.5, 0.25], vec![0.1, -0.2]).unwrap();
        tr.push(Sample::Modal(s)).unwrap();
        let d = &tr.diagnostics()[0];
        let e = 0.1 * 0.1 + 0.25 + (0.2 * 0.2 + 4.0 * 0.0625);
        assert!((d.energy - e).abs() < 1e-15);
        assert_eq!(d.rescaled, 4.0 * d.energy);
        assert!(tr.diagnostics_consistent());
    }
}
