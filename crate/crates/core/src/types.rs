//! Value types passed between the stages of the link, plus bit packing.
//!
//! Bit order is MSB-first everywhere in the crate: the first bit of a
//! [`BitBlock`] lands in the most significant position of the first byte.
//! LLRs follow the convention `llr = ln P(b = 0 | y) - ln P(b = 1 | y)`, so a
//! positive value favours bit 0.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Fixed-length sequence of hard bits, each stored as a `u8` equal to 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct BitBlock {
    bits: Vec<u8>,
}

impl BitBlock {
    /// Wraps `bits`, rejecting any element other than 0 or 1.
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(Error::Input(format!(
                "bit {pos} has value {}, expected 0 or 1",
                bits[pos]
            )));
        }
        Ok(Self { bits })
    }

    pub fn zeros(len: usize) -> Self {
        Self { bits: vec![0; len] }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        Self {
            bits: bits.iter().map(|&b| b as u8).collect(),
        }
    }

    /// Caller guarantees every element is 0 or 1.
    pub(crate) fn from_vec_unchecked(bits: Vec<u8>) -> Self {
        debug_assert!(bits.iter().all(|&b| b <= 1));
        Self { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.bits
    }

    pub fn into_vec(self) -> Vec<u8> {
        self.bits
    }

    /// Number of positions where `self` and `other` differ.
    pub fn hamming_distance(&self, other: &BitBlock) -> Result<usize> {
        if self.len() != other.len() {
            return Err(Error::Length {
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count())
    }
}

impl std::ops::BitXor for &BitBlock {
    type Output = BitBlock;

    /// Elementwise XOR. Panics on length mismatch.
    fn bitxor(self, rhs: &BitBlock) -> BitBlock {
        assert_eq!(self.len(), rhs.len(), "xor of unequal-length bit blocks");
        BitBlock::from_vec_unchecked(
            self.bits.iter().zip(&rhs.bits).map(|(a, b)| a ^ b).collect(),
        )
    }
}

/// Packs bits 8 per byte, MSB first; a trailing partial byte is zero-padded.
pub fn pack_bits(bits: &BitBlock) -> Vec<u8> {
    bits.as_slice()
        .chunks(8)
        .map(|chunk| {
            chunk
                .iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | (b << (7 - i)))
        })
        .collect()
}

/// Inverse of [`pack_bits`] for the first `bit_count` bits of `bytes`.
pub fn unpack_bits(bytes: &[u8], bit_count: usize) -> Result<BitBlock> {
    if bit_count > bytes.len() * 8 {
        return Err(Error::Length {
            expected: bit_count,
            actual: bytes.len() * 8,
        });
    }
    let bits = (0..bit_count)
        .map(|i| (bytes[i / 8] >> (7 - i % 8)) & 1)
        .collect();
    Ok(BitBlock::from_vec_unchecked(bits))
}

/// Per-bit log-likelihood ratios; every element is finite.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LlrBlock<T> {
    llrs: Vec<T>,
}

impl<T: Real> LlrBlock<T> {
    /// Rejects NaN and infinite values.
    pub fn new(llrs: Vec<T>) -> Result<Self> {
        if let Some(pos) = llrs.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite LLR at position {pos}")));
        }
        Ok(Self { llrs })
    }

    /// LLRs of magnitude `magnitude` whose signs encode `bits` noiselessly.
    pub fn from_hard_bits(bits: &BitBlock, magnitude: T) -> Self {
        Self {
            llrs: bits
                .as_slice()
                .iter()
                .map(|&b| if b == 0 { magnitude } else { -magnitude })
                .collect(),
        }
    }

    /// Hard decision per bit: non-negative LLR decides 0.
    pub fn hard_decision(&self) -> BitBlock {
        BitBlock::from_vec_unchecked(
            self.llrs.iter().map(|&v| (v < T::zero()) as u8).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.llrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.llrs.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.llrs
    }

    pub fn into_vec(self) -> Vec<T> {
        self.llrs
    }
}

/// Complex baseband symbols.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SymbolFrame<T> {
    symbols: Vec<Complex<T>>,
}

impl<T: Real> SymbolFrame<T> {
    pub fn new(symbols: Vec<Complex<T>>) -> Self {
        Self { symbols }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.symbols
    }

    pub fn into_vec(self) -> Vec<Complex<T>> {
        self.symbols
    }

    pub fn mean_energy(&self) -> T {
        if self.symbols.is_empty() {
            return T::zero();
        }
        let total = self
            .symbols
            .iter()
            .fold(T::zero(), |acc, s| acc + s.norm_sqr());
        total / T::lit(self.symbols.len() as f64)
    }
}

/// Row-major `rows x cols` matrix of binary32 values exchanged with a semantic codec.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HiddenTensor {
    rows: usize,
    cols: usize,
    values: Vec<f32>,
}

impl HiddenTensor {
    pub fn new(rows: usize, cols: usize, values: Vec<f32>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Parameter(format!(
                "tensor dimensions must be positive, got {rows}x{cols}"
            )));
        }
        let expected = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::Capacity(format!("{rows}x{cols} overflows usize")))?;
        if values.len() != expected {
            return Err(Error::Length {
                expected,
                actual: values.len(),
            });
        }
        Ok(Self { rows, cols, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![0.0; rows.saturating_mul(cols)])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    /// Applies `f` elementwise, keeping the shape.
    pub fn map(&self, f: impl Fn(f32) -> f32) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn block(bits: &[u8]) -> BitBlock {
        BitBlock::new(bits.to_vec()).unwrap()
    }

    // Independent oracle: set each bit with explicit shifts rather than a fold.
    fn pack_oracle(bits: &[u8]) -> Vec<u8> {
        let mut out = vec![0u8; bits.len().div_ceil(8)];
        for (i, &b) in bits.iter().enumerate() {
            if b == 1 {
                out[i / 8] |= 0x80 >> (i % 8);
            }
        }
        out
    }

    #[test]
    fn pack_msb_first() {
        assert_eq!(pack_bits(&block(&[1, 0, 0, 0, 0, 0, 0, 0])), vec![0x80]);
        assert_eq!(pack_bits(&BitBlock::default()), Vec::<u8>::new());
        let nine = block(&[1; 9]);
        assert_eq!(pack_bits(&nine), vec![0xFF, 0x80]);
        assert_eq!(pack_bits(&nine), pack_oracle(nine.as_slice()));
    }

    #[test]
    fn unpack_examples() {
        assert_eq!(unpack_bits(&[0x80], 1).unwrap(), block(&[1]));
        assert_eq!(unpack_bits(&[0, 0], 16).unwrap(), BitBlock::zeros(16));
        assert!(matches!(
            unpack_bits(&[0xFF], 9),
            Err(Error::Length { expected: 9, actual: 8 })
        ));
    }

    #[test]
    fn rejects_non_binary_bits() {
        assert!(BitBlock::new(vec![0, 1, 2]).is_err());
    }

    #[test]
    fn llr_block_rejects_non_finite() {
        assert!(LlrBlock::new(vec![1.0f64, f64::NAN]).is_err());
        assert!(LlrBlock::new(vec![f32::INFINITY]).is_err());
        assert!(LlrBlock::new(vec![0.0f64, -3.0]).is_ok());
    }

    #[test]
    fn llr_sign_convention() {
        let bits = block(&[0, 1, 1, 0]);
        let llrs = LlrBlock::from_hard_bits(&bits, 5.0f64);
        assert_eq!(llrs.as_slice(), &[5.0, -5.0, -5.0, 5.0]);
        assert_eq!(llrs.hard_decision(), bits);
    }

    #[test]
    fn tensor_shape_checks() {
        assert!(HiddenTensor::new(0, 3, vec![]).is_err());
        assert!(HiddenTensor::new(2, 2, vec![0.0; 3]).is_err());
        assert_eq!(HiddenTensor::zeros(2, 3).unwrap().values().len(), 6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn pack_unpack_round_trip(bits in prop::collection::vec(0u8..=1, 0..200)) {
            let b = BitBlock::new(bits).unwrap();
            let bytes = pack_bits(&b);
            prop_assert_eq!(&bytes, &pack_oracle(b.as_slice()));
            prop_assert_eq!(unpack_bits(&bytes, b.len()).unwrap(), b);
        }
    }
}
