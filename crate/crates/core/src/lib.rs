//! Digital twin of a microwave-free NV-diamond magnetometer operating at the
//! ground-state level anti-crossing (GSLAC).
//!
//! The crate is organised bottom-up:
//!
//! * [`spin_model`]: ground-state spin Hamiltonian, eigensystems, anti-crossing search.
//! * [`photophysics`]: five-level rate model, PL and singlet absorption, cavity transmission.
//! * [`scan_engine`]: sample presets and synthetic field-scan traces.
//! * [`inference`]: Levenberg-Marquardt lineshape, saturation and angle fits.
//! * [`lockin_dsp`]: field modulation, lock-in demodulation, noise spectra, shot-noise limit.
//! * [`studies`]: end-to-end pipelines (angle study, saturation study, magnetometer chain).
//! * [`io`]: CSV and key/value report formats.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod inference;
pub mod io;
pub mod lockin_dsp;
pub mod photophysics;
pub mod scan_engine;
pub mod spin_model;
pub mod studies;

mod lm;

pub use error::{Error, Result};

/// Tesla per millitesla.
pub const MILLITESLA: f64 = 1e-3;
/// Tesla per microtesla.
pub const MICROTESLA: f64 = 1e-6;
