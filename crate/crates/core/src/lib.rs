//! Outage analysis of quantized active/passive RIS-aided NOMA downlinks.
//!
//! - [`numerics`]: log-gamma, regularized incomplete gamma, Laguerre
//!   polynomials and Gauss-Laguerre rules.
//! - [`channel`]: scenario types, ADC distortion factor and per-stage SINR.
//! - [`analysis`]: closed-form, asymptotic OP, diversity order, throughput.
//! - [`montecarlo`]: seed-deterministic simulation of the signal model.

pub mod analysis;
pub mod channel;
pub mod error;
pub mod montecarlo;
pub mod numerics;

pub use error::{Error, Result};
