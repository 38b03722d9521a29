//! Ambient backscatter over frequency-selective channels.
//!
//! The tag reflects only inside the cyclic prefix of an ambient OFDM symbol,
//! so the reader can subtract the matching tail of the symbol to cancel the
//! direct path, fold the remaining linear convolution into a circular one,
//! and detect the tag bit from DFT-domain energy with a chi-square test.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod analysis;
pub mod detector;
pub mod error;
pub mod harness;
pub mod numerics;
pub mod phy;
pub mod receiver;

pub use error::{Error, Result};

pub use phy::{DofConvention, GammaKnowledge, SnrMode, SystemConfig, ThresholdMode};
