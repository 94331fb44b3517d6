//! Oscillatory integrals, time-averages and the scalar differential-inequality harnesses.

pub mod averages;
pub mod harness;
pub mod integral;
pub mod lemmas;
pub mod probe;
pub mod quad;
pub mod signal;

pub use averages::{time_average, AverageKind, TrigCorrections};
pub use harness::{
    bernoulli_harness, prop_r_harness, threshold, BernoulliReport, PropRReport, ScalarHarnessSpec, Start,
};
pub use lemmas::{
    osc_bound_sweep, product_bound_check, random_osc_cases, series_bound_check, smooth_bound, trig_correction, OscCase,
    OscSweepReport, ProductBoundCheck, SWEEP_ALPHAS,
};
pub use integral::{check_lipschitz, exp_integral, osc_integral, phi1, LinearPhase, OscIntegral, PhaseFunction};
pub use probe::{semi_integrability_probe, ProbeReport, SemiIntegrability};
pub use signal::{Adversary, Signal};
