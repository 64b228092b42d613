//! Compressed sensing of physiological signals with a fast marginalized block
//! sparse Bayesian learning (BSBL-FM) recovery solver.
//!
//! The crate is organised as the signal pipeline is:
//!
//! - [`signal_model`]: block partitions and fixed-size packets.
//! - [`sensing`]: sparse binary sensing matrices and the streaming encoder.
//! - [`dictionary`]: the DCT synthesis dictionary and the effective operator `Φ·D`.
//! - [`bsbl_fm`]: the recovery solver (SIM and AR(1) block correlation models).
//! - [`dwt53`]: the integer CDF 5/3 lifting compressor used as a baseline.
//! - [`metrics`]: PRD distortion and timing.
//! - [`formats`]: on-disk layouts for matrix headers, measurements and wavelet streams.

pub mod bsbl_fm;
pub mod dictionary;
pub mod dwt53;
mod error;
pub mod formats;
pub(crate) mod linalg;
pub mod metrics;
pub mod sensing;
pub mod signal_model;

pub use error::{Error, Result};
