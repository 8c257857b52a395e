//! Serialization of bounded hidden-state tensors into channel-codable blocks.
//!
//! # Frame layout
//!
//! A frame is a bit stream made of a 160-bit header followed by the payload:
//!
//! | field          | width | content                                   |
//! |----------------|-------|-------------------------------------------|
//! | `rows`         | 32    | token count                               |
//! | `cols`         | 32    | hidden dimension                          |
//! | `payload_bits` | 64    | `rows * cols * bits_per_value`            |
//! | `reserved`     | 32    | zero                                      |
//!
//! Every field and every tensor value is written as little-endian bytes, and
//! each byte is expanded MSB-first, matching [`crate::types::pack_bits`]. With
//! [`PayloadFormat::Fp32`] a value is its IEEE-754 binary32 pattern, so bit 30
//! of the pattern (the top exponent bit) is stream bit `24 + 1` of the value.
//! The stream is cut into `K`-bit blocks and the last block is zero-padded.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::types::{pack_bits, unpack_bits, BitBlock, HiddenTensor};

/// Header length in bits.
pub const HEADER_BITS: usize = 160;

/// Default magnitude margin applied by [`unsquash`] before `atanh`.
pub const DEFAULT_CLAMP_EPS: f64 = 1e-6;

/// How tensor values are quantized on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PayloadFormat {
    /// Raw IEEE-754 binary32.
    #[default]
    Fp32,
    /// `round((v + 1) / 2 * 65535)` as a 16-bit unsigned integer.
    Fixed16,
}

impl PayloadFormat {
    pub fn bits_per_value(&self) -> usize {
        match self {
            PayloadFormat::Fp32 => 32,
            PayloadFormat::Fixed16 => 16,
        }
    }
}

impl FromStr for PayloadFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fp32" => Ok(PayloadFormat::Fp32),
            "fixed16" => Ok(PayloadFormat::Fixed16),
            other => Err(Error::Config(format!("unknown payload format `{other}`"))),
        }
    }
}

/// Receiver-side treatment of out-of-range reconstructed values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SanitizePolicy {
    /// NaN to 0, infinities and magnitudes above 1 to ±1.
    #[default]
    Clamp,
    /// Values pass through untouched, including NaN and infinities.
    Raw,
}

impl FromStr for SanitizePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "clamp" => Ok(SanitizePolicy::Clamp),
            "raw" => Ok(SanitizePolicy::Raw),
            other => Err(Error::Config(format!("unknown sanitize policy `{other}`"))),
        }
    }
}

/// Frame metadata. Only `rows`, `cols` and `payload_bits` are transmitted;
/// the block split is derived from the code's payload size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameHeader {
    pub rows: u32,
    pub cols: u32,
    pub payload_bits: u64,
    pub block_count: usize,
    pub pad_bits: usize,
}

impl FrameHeader {
    fn for_payload(rows: u32, cols: u32, payload_bits: u64, block_bits: usize) -> Self {
        let total = HEADER_BITS + payload_bits as usize;
        let block_count = total.div_ceil(block_bits);
        Self {
            rows,
            cols,
            payload_bits,
            block_count,
            pad_bits: block_count * block_bits - total,
        }
    }

    fn to_bytes(self) -> [u8; HEADER_BITS / 8] {
        let mut out = [0u8; HEADER_BITS / 8];
        out[0..4].copy_from_slice(&self.rows.to_le_bytes());
        out[4..8].copy_from_slice(&self.cols.to_le_bytes());
        out[8..16].copy_from_slice(&self.payload_bits.to_le_bytes());
        // out[16..20] reserved, zero
        out
    }
}

/// Elementwise `tanh`, mapping every value into [-1, 1].
pub fn squash(tensor: &HiddenTensor) -> Result<HiddenTensor> {
    if let Some(pos) = tensor.values().iter().position(|v| v.is_nan()) {
        return Err(Error::Input(format!("NaN at tensor element {pos}")));
    }
    Ok(tensor.map(f32::tanh))
}

/// Elementwise `atanh` after clamping magnitudes to `1 - clamp_eps`.
/// NaN inputs are treated as 0.
pub fn unsquash(tensor: &HiddenTensor, clamp_eps: f64) -> HiddenTensor {
    let limit = 1.0 - clamp_eps.clamp(0.0, 1.0);
    tensor.map(|v| {
        let v = if v.is_nan() { 0.0 } else { v as f64 };
        v.clamp(-limit, limit).atanh() as f32
    })
}

/// Serializes `tensor` into `block_bits`-bit blocks (header first).
pub fn tensor_to_bits(
    tensor: &HiddenTensor,
    block_bits: usize,
    format: PayloadFormat,
) -> Result<(Vec<BitBlock>, FrameHeader)> {
    if block_bits == 0 {
        return Err(Error::Parameter("block size must be positive".into()));
    }
    let rows = u32::try_from(tensor.rows())
        .map_err(|_| Error::Capacity(format!("{} rows exceed 32 bits", tensor.rows())))?;
    let cols = u32::try_from(tensor.cols())
        .map_err(|_| Error::Capacity(format!("{} cols exceed 32 bits", tensor.cols())))?;
    let payload_bits = tensor.values().len() as u64 * format.bits_per_value() as u64;
    let header = FrameHeader::for_payload(rows, cols, payload_bits, block_bits);

    let mut bytes = Vec::with_capacity(HEADER_BITS / 8 + payload_bits as usize / 8);
    bytes.extend_from_slice(&header.to_bytes());
    for &v in tensor.values() {
        match format {
            PayloadFormat::Fp32 => bytes.extend_from_slice(&v.to_le_bytes()),
            PayloadFormat::Fixed16 => bytes.extend_from_slice(&quantize16(v).to_le_bytes()),
        }
    }
    let stream = unpack_bits(&bytes, bytes.len() * 8)?.into_vec();
    let blocks = stream
        .chunks(block_bits)
        .map(|chunk| {
            let mut block = chunk.to_vec();
            block.resize(block_bits, 0);
            BitBlock::new(block)
        })
        .collect::<Result<Vec<_>>>()?;
    debug_assert_eq!(blocks.len(), header.block_count);
    Ok((blocks, header))
}

/// Reassembles a tensor from received blocks and applies `sanitize`.
///
/// Fails with [`Error::Frame`] when the header is implausible: zero
/// dimensions, non-zero reserved field, a payload size inconsistent with the
/// dimensions, or more payload than the blocks carry.
pub fn bits_to_tensor(
    blocks: &[BitBlock],
    format: PayloadFormat,
    sanitize: SanitizePolicy,
) -> Result<HiddenTensor> {
    let stream: Vec<u8> = blocks
        .iter()
        .flat_map(|b| b.as_slice().iter().copied())
        .collect();
    if stream.len() < HEADER_BITS {
        return Err(Error::Frame(format!(
            "{} bits cannot hold the {HEADER_BITS}-bit header",
            stream.len()
        )));
    }
    let bytes = pack_bits(&BitBlock::new(stream.clone())?);
    let le_u32 = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let rows = le_u32(0);
    let cols = le_u32(4);
    let payload_bits = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let reserved = le_u32(16);

    if rows == 0 || cols == 0 {
        return Err(Error::Frame(format!("zero dimension {rows}x{cols}")));
    }
    if reserved != 0 {
        return Err(Error::Frame(format!("reserved field is {reserved:#x}")));
    }
    let count = rows as u64 * cols as u64;
    if count.checked_mul(format.bits_per_value() as u64) != Some(payload_bits) {
        return Err(Error::Frame(format!(
            "payload of {payload_bits} bits does not match {rows}x{cols} values"
        )));
    }
    if HEADER_BITS as u64 + payload_bits > stream.len() as u64 {
        return Err(Error::Frame(format!(
            "header announces {payload_bits} payload bits, only {} received",
            stream.len() - HEADER_BITS
        )));
    }

    let payload = &bytes[HEADER_BITS / 8..HEADER_BITS / 8 + payload_bits as usize / 8];
    let values = match format {
        PayloadFormat::Fp32 => payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect::<Vec<_>>(),
        PayloadFormat::Fixed16 => payload
            .chunks_exact(2)
            .map(|c| dequantize16(u16::from_le_bytes(c.try_into().unwrap())))
            .collect(),
    };
    let values = match sanitize {
        SanitizePolicy::Raw => values,
        SanitizePolicy::Clamp => values.into_iter().map(clamp_value).collect(),
    };
    HiddenTensor::new(rows as usize, cols as usize, values)
}

#[inline]
fn clamp_value(v: f32) -> f32 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(-1.0, 1.0)
    }
}

fn quantize16(v: f32) -> u16 {
    let v = clamp_value(v) as f64;
    ((v + 1.0) / 2.0 * 65535.0).round() as u16
}

fn dequantize16(q: u16) -> f32 {
    (q as f64 / 65535.0 * 2.0 - 1.0) as f32
}
