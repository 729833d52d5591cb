//! Dense arithmetic, optimisation and verification helpers shared by every
//! learnable component.

mod adam;
mod dropout;
mod gradcheck;
mod linear;
mod rng;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use dropout::dropout;
pub use gradcheck::{grad_check, relative_error, FD_STEP};
pub use linear::{linear_backward, linear_forward, LinearCache, LinearGrads};
pub use rng::Rng;
pub use tensor::Tensor;
