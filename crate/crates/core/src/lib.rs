//! Simulation laboratory for the nonlinearly damped evolution equation
//! `u'' + |u'|² u' + Au = 0` with `A` diagonal in a known eigenbasis.
//!
//! The crate integrates the modal system and its averaged gradient flow,
//! evaluates the oscillatory integrals that control the averaging error,
//! and turns trajectories into the asymptotic quantities of interest:
//! rescaled energy, amplitude quotients, equipartition, phase drift and the
//! distance to the limiting profile.

// NaN must fail range checks, so `!(x > 0.0)` is deliberate
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// quadrature tables are kept as published
#![allow(clippy::excessive_precision)]
#![allow(clippy::needless_range_loop)]

pub mod averaged;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod full;
pub mod ode;
pub mod oscillatory;
pub mod par;
pub mod spectral;
pub mod sum;
pub mod trajectory;

pub use error::{Error, Result};
pub use spectral::{
    classical_energy, from_polar, make_spectrum, support, to_polar, ModalState, ModeSet, PolarState, Spectrum,
    SpectrumKind,
};
pub use trajectory::{Diagnostics, Sample, Trajectory, TrajectoryMeta};
