//! 1D tensor operations with exact analytic gradients, plus Adam.

mod activation;
mod adam;
mod conv;
mod upsample;

pub use activation::{tanh_act, tanh_grad};
pub use adam::{adam_step, AdamConfig, AdamState};
pub use conv::{conv1d, conv1d_grads, ConvGrads, ConvParams};
pub use upsample::{upsample2, upsample2_grad};

pub(crate) use conv::{Geometry, PaddedStack};
