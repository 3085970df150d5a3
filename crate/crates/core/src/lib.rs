//! Blind restoration of real-world audio with 1D operational GANs.
//!
//! The generator and discriminator are built from generative-neuron
//! (self-operational) layers, trained with least-squares adversarial losses
//! plus waveform and log-spectral reconstruction terms. The crate also holds
//! the randomized corruption pipeline used to build training corpora and the
//! objective metrics used to evaluate restorations.

pub mod config;
pub mod corruption;
pub mod dsp;
pub mod error;
pub mod losses;
pub mod manifest;
pub mod metrics;
pub mod models;
pub mod nn;
pub mod selfonn;
pub mod tensor;
pub mod trainer;
pub mod wav;

pub use error::{Error, Result};
pub use tensor::{Real, Tensor};

/// Samples per restoration / training segment.
pub const SEGMENT_LEN: usize = 32000;
