//! Sensing-integrated DFT-spread OFDM for terahertz joint radar/communication links.
//!
//! The crate is organised along the signal path:
//!
//! - [`numerics`]: unitary DFT, Zadoff-Chu sequences, 4-QAM, seeded Gaussian streams.
//! - [`waveform`]: frame assembly (CP and flexible-guard variants), the OFDM baseline, PAPR.
//! - [`channel`]: link budget, multipath/Doppler application, Wiener phase noise, AWGN.
//! - [`rx`]: frequency-domain demapping, LS estimation, interpolation, ZF/MMSE, BER.
//! - [`sensing`]: periodogram and MUSIC delay/Doppler estimators and Cramér-Rao bounds.
//! - [`nn`]: a from-scratch multi-task MLP receiver (dense layers, batch-norm, Adam).
//! - [`harness`]: experiment drivers that emit CSV tables.
//!
//! See the `examples/` directory of this crate for one runnable program per capability.

// NaN must fail range checks, so `!(x >= 0.0)` is intended.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod harness;
pub mod nn;
pub mod numerics;
pub mod rx;
pub mod sensing;
pub mod waveform;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
