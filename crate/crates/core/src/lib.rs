//! Outage and throughput analysis of hybrid millimetre-wave RF / FSO links
//! operating with incremental-redundancy HARQ.
//!
//! * [`special`] - Gaussian Q, Bessel and Marcum functions, FSO gain density.
//! * [`channel`] - link parameters, PA model, gain samplers.
//! * [`analysis`] - log-rate moments, decoding probabilities, throughput.
//! * [`mc`] - Monte Carlo simulation of the HARQ process.
//! * [`scenario`] - link templates evaluated at a total SNR.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod channel;
pub mod error;
pub mod mc;
pub mod quad;
pub mod scenario;
pub mod special;

pub use error::{Error, Result};
