//! Link-level simulator for semantic communication over a 5G-NR physical
//! layer: semantic codec, tensor bridge, Polar(1024, 512), Gray 16-QAM,
//! AWGN or Rayleigh channel, soft demapping, SC/SCL decoding and BLEU /
//! embedding-similarity scoring.
//!
//! Numeric kernels are generic over [`scalar::Real`] (`f32` or `f64`); the
//! aliases below fix the scalar for common use.

pub mod bridge;
pub mod channel;
pub mod error;
pub mod metrics;
pub mod modem;
pub mod pipeline;
pub mod polar;
pub mod rng;
pub mod scalar;
pub mod sweep;
pub mod types;

pub use error::{Error, Result};

pub type Llrs = types::LlrBlock<f64>;
pub type Symbols = types::SymbolFrame<f64>;
pub type Qam16 = modem::ConstellationSpec<f64>;
pub type LlrsF32 = types::LlrBlock<f32>;
pub type SymbolsF32 = types::SymbolFrame<f32>;
pub type Qam16F32 = modem::ConstellationSpec<f32>;
