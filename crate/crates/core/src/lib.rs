//! Simulation and inverse modelling of a trapped two-level ion driven by
//! chirped picosecond pulses.
//!
//! The crate is organised bottom-up:
//!
//! - [`pulse`]: linear-chirp algebra for Gaussian pulses with group-delay dispersion.
//! - [`ode`]: adaptive Dormand–Prince integrator for the complex two-level state.
//! - [`dynamics`]: single-pulse and pulse-pair propagation, phase-averaged sweeps.
//! - [`contrast`]: spin-echo contrast, fringe visibility and the autocorrelation forward model.
//! - [`motion`]: photon recoil, Lamb-Dicke factor and phonon bookkeeping.
//! - [`fit`]: bounded Levenberg–Marquardt recovery of pulse and echo parameters.
//!
//! Units throughout: time in ps, angular frequency in rad/ps, GDD in ps².
//! Independent integrations inside sweeps are scheduled through [`exec`],
//! which uses rayon when the `parallel` feature is enabled.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contrast;
pub mod dynamics;
mod error;
pub mod exec;
pub mod fit;
pub mod format;
pub mod motion;
pub mod ode;
pub mod pulse;

pub use error::{Error, Result};
