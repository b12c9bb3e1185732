//! Joint transmit-signal and receive-filter design for a massive-MIMO
//! sensing-and-communication base station with 1-bit DACs and 1-bit ADCs.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: scene configuration, steering vectors, channels, quantizers.
//! - [`radar`]: receive filter, (quantized) SCNR, detector statistics, energy
//!   efficiency.
//! - [`comm`]: safe margin, SEP bounds, constraint rows, PSK decoding.
//! - [`optim`]: minorize-maximize surrogates, real-valued lifting, a bounded
//!   simplex and an exact branch-and-bound for +-c binaries.
//! - [`designs`]: QoS- and QoD-constrained design loops for every DAC/ADC
//!   pairing.
//! - [`montecarlo`]: empirical QSCNR, ROC and bit-error-rate engines.

pub mod comm;
pub mod designs;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod optim;
pub mod radar;
pub mod rng;

pub use error::{IsacError, Result};
