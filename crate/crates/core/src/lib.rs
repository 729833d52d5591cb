//! Hybrid state-space and spectral model for network traffic anomaly
//! detection and forecasting.
//!
//! The time branch is a diagonal linear state-space scan, the frequency
//! branch a DFT magnitude spectrum, and the two are fused by learned scalar
//! weights before a linear head. Everything (tensors, gradients, the
//! optimiser, statistics) is implemented on plain `f64` buffers.

pub mod checkpoint;
pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod kv;
pub mod model;
pub mod numerics;
pub mod spectral;
pub mod ssm;

pub use checkpoint::Checkpoint;
pub use config::RunConfig;
pub use error::{Error, Result};
pub use model::{ModelConfig, ModelParams, Task, Variant};
