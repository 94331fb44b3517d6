use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::averaged::AveragedState;
use crate::error::{Error, Result};
use crate::full::IntegratorConfig;
use crate::spectral::{make_spectrum, ModalState, Spectrum, SpectrumKind};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Full modal system.
    Full,
    /// Averaged gradient flow.
    Averaged,
    /// Gradient of the functional against finite differences.
    Gradient,
    /// Oscillatory-integral sweep and time averages.
    Oscillatory,
    /// Scalar energy-inequality and Bernoulli harnesses.
    Harness,
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::Full => "full",
            ScenarioKind::Averaged => "averaged",
            ScenarioKind::Gradient => "gradient",
            ScenarioKind::Oscillatory => "oscillatory",
            ScenarioKind::Harness => "harness",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub count: usize,
    /// Needed for full runs only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<SpectrumKind>,
}

/// Initial-data families. Mode numbers are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// Nonzero data on the listed modes only. For full runs `amplitudes` are
    /// displacements `u_k(0)` and `velocities` are `u'_k(0)`; for averaged runs
    /// `amplitudes` are `ρ_k(0)`.
    FiniteModes {
        modes: Vec<usize>,
        amplitudes: Vec<f64>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        velocities: Vec<f64>,
    },
    /// `ρ_k(0) = c·k^{−p}` on every mode (`u_k = ρ_k/λ_k`, `u'_k = 0` for full runs).
    PowerlawTail { c: f64, p: f64 },
    /// `ρ(0) = (a, c·a)` on the first two modes.
    ProportionalPair {
        c: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `ρ_k(0) = 1/√N` on every mode.
    EqualMass,
    Zero,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AveragedRunConfig {
    pub s_end: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_spacing")]
    pub sample_spacing: f64,
}

fn default_tol() -> f64 {
    1e-10
}

fn default_spacing() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Time at which the reference mode `h₀` is chosen.
    #[serde(default)]
    pub reference_time: f64,
    #[serde(default = "yes")]
    pub phase_drift: bool,
    #[serde(default = "yes")]
    pub profile: bool,
    /// Emit `rho_k,theta_k` columns.
    #[serde(default)]
    pub polar_columns: bool,
    /// Finite-difference residuals of the amplitude/phase equations.
    #[serde(default)]
    pub reduction: bool,
    /// Repeat the reduction check with halved log-spacing.
    #[serde(default)]
    pub halving: bool,
}

fn yes() -> bool {
    true
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            reference_time: 0.0,
            phase_drift: true,
            profile: true,
            polar_columns: false,
            reduction: false,
            halving: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradientConfig {
    #[serde(default = "default_states")]
    pub states: usize,
    #[serde(default = "default_modes")]
    pub modes: usize,
}

fn default_states() -> usize {
    100
}

fn default_modes() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscillatoryConfig {
    #[serde(default = "default_per_alpha")]
    pub per_alpha: usize,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
}

fn default_per_alpha() -> usize {
    50
}

fn default_horizon() -> f64 {
    50.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnessConfig {
    #[serde(default = "default_prop_r_end")]
    pub prop_r_t_end: f64,
    #[serde(default = "default_bernoulli_end")]
    pub bernoulli_t_end: f64,
}

fn default_prop_r_end() -> f64 {
    40.0
}

fn default_bernoulli_end() -> f64 {
    30.0
}

/// Pass iff `min ≤ value ≤ max` for the named summary metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriterionSpec {
    pub name: String,
    pub metric: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

/// A parameter grid for the `sweep` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// One of `c`, `p`, `count`, `t_end`, `s_end`, `rel_tol`, `amplitude_ratio`.
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub id: String,
    pub kind: ScenarioKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialData>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub averaged: Option<AveragedRunConfig>,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient: Option<GradientConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oscillatory: Option<OscillatoryConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub harness: Option<HarnessConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub criteria: Vec<CriterionSpec>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.id.is_empty() || !self.id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(Error::Config(format!("id {:?} must be nonempty [A-Za-z0-9_-]", self.id)));
        }
        let need = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(format!("{} scenarios need {what}", self.kind.name())))
            }
        };
        match self.kind {
            ScenarioKind::Full => {
                need(
                    self.spectrum.as_ref().is_some_and(|s| s.generator.is_some()),
                    "[spectrum] with a generator",
                )?;
                need(self.initial.is_some(), "[initial]")?;
                need(self.integrator.is_some(), "[integrator]")?;
                self.integrator.as_ref().expect("checked").validate()?;
            }
            ScenarioKind::Averaged => {
                need(self.spectrum.is_some(), "[spectrum]")?;
                need(self.initial.is_some(), "[initial]")?;
                need(self.averaged.is_some(), "[averaged]")?;
            }
            _ => {}
        }
        if let Some(c) = &self.criteria.iter().find(|c| c.min.is_none() && c.max.is_none()) {
            return Err(Error::Config(format!("criterion {:?} has neither min nor max", c.name)));
        }
        Ok(())
    }

    pub fn build_spectrum(&self) -> Result<Spectrum> {
        let sc = self
            .spectrum
            .as_ref()
            .ok_or_else(|| Error::Config("missing [spectrum]".into()))?;
        let kind = sc
            .generator
            .as_ref()
            .ok_or_else(|| Error::Config("missing spectrum generator".into()))?;
        make_spectrum(kind, sc.count)
    }

    /// Initial amplitudes `ρ_k(0)` for the averaged flow.
    pub fn averaged_initial(&self) -> Result<AveragedState> {
        let n = self.count()?;
        let rho = match self.initial_data()? {
            InitialData::FiniteModes { modes, amplitudes, .. } => scatter(n, modes, amplitudes)?,
            InitialData::PowerlawTail { c, p } => AveragedState::power_law(n, *c, *p).rho,
            InitialData::ProportionalPair { c, amplitude } => pair(n, *c, *amplitude)?,
            InitialData::EqualMass => AveragedState::equal_mass(n).rho,
            InitialData::Zero => vec![0.0; n],
        };
        AveragedState::new(0.0, rho)
    }

    /// Initial state of the full system.
    pub fn full_initial(&self, spec: &Spectrum) -> Result<ModalState> {
        let n = spec.len();
        let lam = spec.lambdas();
        let from_rho = |rho: Vec<f64>| {
            let u = rho.iter().zip(lam).map(|(r, l)| r / l).collect();
            ModalState::new(0.0, u, vec![0.0; n])
        };
        match self.initial_data()? {
            InitialData::FiniteModes {
                modes,
                amplitudes,
                velocities,
            } => {
                let u = scatter(n, modes, amplitudes)?;
                let du = if velocities.is_empty() {
                    vec![0.0; n]
                } else {
                    scatter(n, modes, velocities)?
                };
                ModalState::new(0.0, u, du)
            }
            InitialData::PowerlawTail { c, p } => from_rho(AveragedState::power_law(n, *c, *p).rho),
            InitialData::ProportionalPair { c, amplitude } => from_rho(pair(n, *c, *amplitude)?),
            InitialData::EqualMass => from_rho(AveragedState::equal_mass(n).rho),
            InitialData::Zero => Ok(ModalState::zeros(n)),
        }
    }

    fn count(&self) -> Result<usize> {
        self.spectrum
            .as_ref()
            .map(|s| s.count)
            .ok_or_else(|| Error::Config("missing [spectrum]".into()))
    }

    fn initial_data(&self) -> Result<&InitialData> {
        self.initial
            .as_ref()
            .ok_or_else(|| Error::Config("missing [initial]".into()))
    }

    /// Copy with one grid parameter replaced.
    pub fn with_parameter(&self, name: &str, value: f64) -> Result<Self> {
        let mut c = self.clone();
        let bad = || Error::Config(format!("parameter {name:?} does not apply to scenario {:?}", self.id));
        match name {
            "c" | "p" => match c.initial.as_mut() {
                Some(InitialData::PowerlawTail { c: cc, p }) => {
                    if name == "c" {
                        *cc = value
                    } else {
                        *p = value
                    }
                }
                Some(InitialData::ProportionalPair { c: cc, .. }) if name == "c" => *cc = value,
                _ => return Err(bad()),
            },
            "amplitude_ratio" => match c.initial.as_mut() {
                Some(InitialData::FiniteModes { amplitudes, .. }) if amplitudes.len() >= 2 => {
                    amplitudes[1] = amplitudes[0] * value;
                }
                _ => return Err(bad()),
            },
            "count" => {
                let s = c.spectrum.as_mut().ok_or_else(bad)?;
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::Config(format!("count must be a positive integer, got {value}")));
                }
                s.count = value as usize;
            }
            "t_end" => c.integrator.as_mut().ok_or_else(bad)?.t_end = value,
            "rel_tol" => c.integrator.as_mut().ok_or_else(bad)?.rel_tol = value,
            "s_end" => c.averaged.as_mut().ok_or_else(bad)?.s_end = value,
            _ => return Err(Error::Config(format!("unknown sweep parameter {name:?}"))),
        }
        c.id = format!("{}-{name}-{value}", self.id).replace('.', "p").replace('+', "");
        c.sweep = None;
        c.validate()?;
        Ok(c)
    }
}

fn scatter(n: usize, modes: &[usize], values: &[f64]) -> Result<Vec<f64>> {
    if modes.len() != values.len() {
        return Err(Error::Config("modes and values differ in length".into()));
    }
    let mut out = vec![0.0; n];
    for (&m, &v) in modes.iter().zip(values) {
        if m == 0 || m > n {
            return Err(Error::Config(format!("mode {m} outside 1..={n}")));
        }
        out[m - 1] = v;
    }
    Ok(out)
}

fn pair(n: usize, c: f64, a: f64) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::Config("proportional_pair needs at least two modes".into()));
    }
    let mut out = vec![0.0; n];
    out[0] = a;
    out[1] = c * a;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
schema_version = 1
id = "two_modes"
kind = "full"
seed = 3

[spectrum]
count = 2
generator = { kind = "explicit", lambdas = [1.0, 2.0] }

[initial]
family = "finite_modes"
modes = [1, 2]
amplitudes = [0.9, 0.5]

[integrator]
rel_tol = 1e-10
abs_tol = 1e-12
t_end = 100.0
sampler = { kind = "log_spaced", count = 200 }

[[criteria]]
name = "band"
metric = "rescaled.trailing_min"
min = 1.5
"#;

    #[test]
    fn round_trip() {
        let c = ScenarioConfig::from_toml(FULL).unwrap();
        let back = ScenarioConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(c, back);
        let u = c.full_initial(&c.build_spectrum().unwrap()).unwrap();
        assert_eq!(u.u, vec![0.9, 0.5]);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ScenarioConfig::from_toml(&FULL.replace("schema_version = 1", "schema_version = 9")).is_err());
        assert!(ScenarioConfig::from_toml(&FULL.replace("seed = 3", "seed = 3\nbogus = 1")).is_err());
        assert!(ScenarioConfig::from_toml(&FULL.replace("modes = [1, 2]", "modes = [1, 3]"))
            .unwrap()
            .full_initial(&Spectrum::new(vec![1.0, 2.0]).unwrap())
            .is_err());
    }

    #[test]
    fn sweep_parameter_substitution() {
        let c = ScenarioConfig::from_toml(FULL).unwrap();
        let d = c.with_parameter("amplitude_ratio", 0.5).unwrap();
        match d.initial {
            Some(InitialData::FiniteModes { amplitudes, .. }) => assert_eq!(amplitudes, vec![0.9, 0.45]),
            _ => unreachable!(),
        }
        assert_eq!(c.with_parameter("t_end", 50.0).unwrap().integrator.unwrap().t_end, 50.0);
        assert!(c.with_parameter("s_end", 1.0).is_err());
    }
}
