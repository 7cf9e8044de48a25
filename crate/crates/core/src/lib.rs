//! Sensing-resistant MIMO beamforming.
//!
//! A transmitter that talks to a sensing-capable receiver can hide its true
//! bearing by confining its precoder to the null space of its line-of-sight
//! steering vector while concentrating apparent received energy at a decoy
//! angle. This crate provides the numerical kernel, the Rician channel model,
//! the angular-domain peak-to-average ratio (ADPAR) metrics, the precoder
//! optimizer and Monte-Carlo sweeps around them.

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::excessive_precision
)]

pub mod beamformer;
pub mod channel;
pub mod config;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod numerics;
pub mod selftest;

pub use error::{Error, Result};
