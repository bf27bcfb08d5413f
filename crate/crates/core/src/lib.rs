//! Uplink multi-user mmWave MIMO with a full-dimensional lens antenna array at
//! the base station.
//!
//! The crate covers the whole link: lens and planar array responses, random
//! multipath channels and their symbol-rate taps, the analog beamforming
//! codebook at the mobiles, path division multiple access with MRC and MMSE
//! combining after per-antenna path delay compensation, the three-phase
//! training protocol, and a waveform-level Monte Carlo engine that measures
//! SINR independently of the closed-form expressions.
//!
//! Runnable walkthroughs live under `examples/`; `cargo run --example` lists
//! them.

pub mod channel;
pub mod codebook;
pub mod config;
pub mod error;
pub mod estimation;
pub mod instances;
pub mod lens_array;
pub mod linalg;
pub mod linksim;
pub mod pdma;
pub mod quadrature;
pub mod results;
pub mod validate;

pub use error::{Error, Result};
pub use num_complex::Complex64;
