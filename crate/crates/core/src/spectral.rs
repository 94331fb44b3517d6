//! Spectra, modal and polar phase points, and the elementary energy functionals.
//!
//! Mode indices are 0-based in the API: index `k` carries frequency
//! `lambdas[k]`, which is the (k+1)-th eigenfrequency. Output files label
//! modes 1-based.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum;

/// Eigenfrequencies of the diagonal operator `A` (so `A e_k = λ_k² e_k`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    lambdas: Vec<f64>,
    simple: bool,
    min_gap: f64,
}

/// Spectrum generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectrumKind {
    /// String of the given length with Dirichlet ends: `λ_k = kπ/ℓ`.
    DirichletString { length: f64 },
    /// `λ_k = base + (k-1)·gap`.
    Arithmetic { base: f64, gap: f64 },
    /// Pairs `base + m·gap` and `base + m·gap + cluster_eps`; needs `cluster_eps < gap`.
    Clustered { base: f64, gap: f64, cluster_eps: f64 },
    /// A given nondecreasing list; `count` must match its length.
    Explicit { lambdas: Vec<f64> },
}

impl Spectrum {
    /// Builds a spectrum from a nondecreasing list of positive frequencies.
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::invalid("spectrum needs at least one frequency"));
        }
        if let Some(bad) = lambdas.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::invalid(format!("frequency {bad} is not positive and finite")));
        }
        let mut simple = true;
        let mut min_gap = f64::INFINITY;
        for w in lambdas.windows(2) {
            let gap = w[1] - w[0];
            if gap < 0.0 {
                return Err(Error::invalid(format!(
                    "frequencies must be nondecreasing ({} > {})",
                    w[0], w[1]
                )));
            }
            if gap == 0.0 {
                simple = false;
            }
            min_gap = min_gap.min(gap);
        }
        Ok(Self {
            lambdas,
            simple,
            min_gap,
        })
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// All frequencies distinct.
    pub fn is_simple(&self) -> bool {
        self.simple
    }

    /// Smallest adjacent difference; `+inf` for a single mode.
    pub fn min_gap(&self) -> f64 {
        self.min_gap
    }

    pub fn max_lambda(&self) -> f64 {
        *self.lambdas.last().expect("spectrum is never empty")
    }
}

/// Generates `count` frequencies of the given family.
pub fn make_spectrum(kind: &SpectrumKind, count: usize) -> Result<Spectrum> {
    if count == 0 {
        return Err(Error::invalid("spectrum count must be at least 1"));
    }
    let positive = |name: &str, x: f64| {
        if x.is_finite() && x > 0.0 {
            Ok(())
        } else {
            Err(Error::invalid(format!("{name} must be positive, got {x}")))
        }
    };
    let lambdas = match kind {
        SpectrumKind::DirichletString { length } => {
            positive("length", *length)?;
            let step = std::f64::consts::PI / length;
            (1..=count).map(|k| k as f64 * step).collect()
        }
        SpectrumKind::Arithmetic { base, gap } => {
            positive("base", *base)?;
            positive("gap", *gap)?;
            (0..count).map(|k| base + k as f64 * gap).collect()
        }
        SpectrumKind::Clustered {
            base,
            gap,
            cluster_eps,
        } => {
            positive("base", *base)?;
            positive("gap", *gap)?;
            positive("cluster_eps", *cluster_eps)?;
            if cluster_eps >= gap {
                return Err(Error::invalid("cluster_eps must be smaller than gap"));
            }
            (0..count)
                .map(|k| base + (k / 2) as f64 * gap + (k % 2) as f64 * cluster_eps)
                .collect()
        }
        SpectrumKind::Explicit { lambdas } => {
            if lambdas.len() != count {
                return Err(Error::invalid(format!(
                    "explicit spectrum has {} entries, count is {count}",
                    lambdas.len()
                )));
            }
            lambdas.clone()
        }
    };
    Spectrum::new(lambdas)
}

/// Modal positions and velocities at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalState {
    pub t: f64,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
}

impl ModalState {
    pub fn new(t: f64, u: Vec<f64>, du: Vec<f64>) -> Result<Self> {
        let state = Self { t, u, du };
        state.validate()?;
        Ok(state)
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            t: 0.0,
            u: vec![0.0; n],
            du: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.u.len() != self.du.len() {
            return Err(Error::invalid(format!(
                "u has {} entries but du has {}",
                self.u.len(),
                self.du.len()
            )));
        }
        if !(self.t.is_finite() && self.t >= 0.0) {
            return Err(Error::invalid(format!("time {} must be finite and >= 0", self.t)));
        }
        if self.u.iter().chain(&self.du).any(|x| !x.is_finite()) {
            return Err(Error::invalid("state has non-finite entries"));
        }
        Ok(())
    }

    pub(crate) fn check_against(&self, spec: &Spectrum) -> Result<()> {
        if self.u.len() != spec.len() || self.du.len() != spec.len() {
            return Err(Error::invalid(format!(
                "state has {}/{} entries, spectrum has {}",
                self.u.len(),
                self.du.len(),
                spec.len()
            )));
        }
        Ok(())
    }

    /// `|u'|² = Σ u'_k²`, the damping coefficient of the equation.
    pub fn velocity_norm_sq(&self) -> f64 {
        sum::compensated(self.du.iter().map(|x| x * x))
    }
}

/// Rescaled polar representation at log-time `s = log(1+t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarState {
    pub s: f64,
    pub rho: Vec<f64>,
    pub theta: Vec<f64>,
}

impl PolarState {
    /// `R = Σ ρ_k²`, the energy of `v = √(1+t)·u`.
    pub fn rescaled_energy(&self) -> f64 {
        sum::ordered_map(&self.rho, |r| r * r)
    }

    pub fn time(&self) -> f64 {
        self.s.exp_m1()
    }
}

/// Sorted set of active mode indices (the set J).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ModeSet {
    indices: Vec<usize>,
}

impl ModeSet {
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self { indices }
    }

    pub fn all(n: usize) -> Self {
        Self {
            indices: (0..n).collect(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, k: usize) -> bool {
        self.indices.binary_search(&k).is_ok()
    }

    /// Boolean mask of length `n`.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &k in &self.indices {
            if k < n {
                m[k] = true;
            }
        }
        m
    }
}

/// Modes whose initial data are not both bit-exact zero.
pub fn support(u0: &[f64], u1: &[f64]) -> Result<ModeSet> {
    if u0.len() != u1.len() {
        return Err(Error::invalid(format!(
            "initial positions have {} entries, velocities {}",
            u0.len(),
            u1.len()
        )));
    }
    Ok(ModeSet {
        indices: u0
            .iter()
            .zip(u1)
            .enumerate()
            .filter(|(_, (a, b))| **a != 0.0 || **b != 0.0)
            .map(|(k, _)| k)
            .collect(),
    })
}

/// Support of a modal state.
pub fn state_support(state: &ModalState) -> ModeSet {
    support(&state.u, &state.du).expect("validated state has matching lengths")
}

/// Classical energy `E = Σ e_k` with `e_k = u'_k² + λ_k² u_k²`.
pub fn classical_energy(state: &ModalState, spec: &Spectrum) -> Result<(f64, Vec<f64>)> {
    state.check_against(spec)?;
    let modal = modal_energies(&state.u, &state.du, spec.lambdas());
    let total = sum::ordered(&modal);
    Ok((total, modal))
}

pub(crate) fn modal_energies(u: &[f64], du: &[f64], lambdas: &[f64]) -> Vec<f64> {
    u.iter()
        .zip(du)
        .zip(lambdas)
        .map(|((u, du), l)| du * du + l * l * u * u)
        .collect()
}

/// Polar coordinates of `v = √(1+t)·u`: `λ_k v_k = ρ_k cos θ_k`, `v'_k = ρ_k sin θ_k`.
pub fn to_polar(state: &ModalState, spec: &Spectrum) -> Result<PolarState> {
    state.check_against(spec)?;
    let root = (1.0 + state.t).sqrt();
    let (rho, theta) = state
        .u
        .iter()
        .zip(&state.du)
        .zip(spec.lambdas())
        .map(|((&u, &du), &l)| {
            let v = root * u;
            let dv = u / (2.0 * root) + root * du;
            let x = l * v;
            let r = x.hypot(dv);
            if r == 0.0 {
                (0.0, 0.0)
            } else {
                (r, dv.atan2(x))
            }
        })
        .unzip();
    Ok(PolarState {
        s: state.t.ln_1p(),
        rho,
        theta,
    })
}

/// Inverse of [`to_polar`].
pub fn from_polar(polar: &PolarState, spec: &Spectrum) -> Result<ModalState> {
    if polar.rho.len() != spec.len() || polar.theta.len() != spec.len() {
        return Err(Error::invalid("polar state length does not match spectrum"));
    }
    let t = polar.s.exp_m1();
    let root = (1.0 + t).sqrt();
    let (u, du) = polar
        .rho
        .iter()
        .zip(&polar.theta)
        .zip(spec.lambdas())
        .map(|((&r, &th), &l)| {
            if r == 0.0 {
                return (0.0, 0.0);
            }
            let v = r * th.cos() / l;
            let dv = r * th.sin();
            let u = v / root;
            (u, (dv - u / (2.0 * root)) / root)
        })
        .unzip();
    ModalState::new(t, u, du)
}
