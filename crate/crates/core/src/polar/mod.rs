//! Polar code construction, encoding and successive-cancellation decoding.
//!
//! Codewords are `x = u · G_N` with `G_N` the n-fold Kronecker power of
//! `[[1, 0], [1, 1]]`, in natural (non bit-reversed) order. Frozen positions of
//! `u` carry zeros; information (and CRC) bits fill the remaining positions in
//! ascending index order.

mod construct;
mod crc;
mod encode;
mod nr_sequence;
mod sc;
mod scl;

pub use construct::{construct_code, gaussian_approximation_means, ReliabilitySource};
pub use crc::{crc_attach, crc_check, CRC11_POLY, CRC24C_POLY, SUPPORTED_WIDTHS};
pub use encode::{polar_encode, polar_transform};
pub use nr_sequence::NR_RELIABILITY;
pub use sc::polar_decode_sc;
pub use scl::{polar_decode_scl, LIST_SIZES};

use crate::error::Result;
use crate::scalar::Real;
use crate::types::{BitBlock, LlrBlock};

/// Channel LLR magnitude limit applied at decoder entry.
pub const LLR_CLIP: f64 = 40.0;

/// Immutable description of an (N, K) polar code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolarCodeSpec {
    n_codeword: usize,
    k_info: usize,
    crc_width: usize,
    frozen_set: Vec<usize>,
    info_set: Vec<usize>,
    frozen_mask: Vec<bool>,
}

impl PolarCodeSpec {
    /// The (1024, 512) code over the NR reliability sequence, no CRC.
    pub fn nr_default() -> Self {
        construct_code(1024, 512, &ReliabilitySource::Nr5g)
            .expect("default polar parameters are valid")
    }

    /// Returns a copy that reserves `width` of the K information positions for a CRC.
    pub fn with_crc(mut self, width: usize) -> Result<Self> {
        crc::validate_width(width)?;
        if width >= self.k_info {
            return Err(crate::Error::Parameter(format!(
                "CRC width {width} leaves no payload in K = {}",
                self.k_info
            )));
        }
        self.crc_width = width;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n_codeword
    }

    pub fn k(&self) -> usize {
        self.k_info
    }

    pub fn crc_width(&self) -> usize {
        self.crc_width
    }

    /// User bits per codeword: K minus the CRC.
    pub fn payload_len(&self) -> usize {
        self.k_info - self.crc_width
    }

    pub fn frozen_set(&self) -> &[usize] {
        &self.frozen_set
    }

    pub fn info_set(&self) -> &[usize] {
        &self.info_set
    }

    pub fn is_frozen(&self, index: usize) -> bool {
        self.frozen_mask[index]
    }

    pub(crate) fn frozen_mask(&self) -> &[bool] {
        &self.frozen_mask
    }

    pub fn rate(&self) -> f64 {
        self.k_info as f64 / self.n_codeword as f64
    }

    /// Payload bits per coded bit; the rate that Eb refers to.
    pub fn payload_rate(&self) -> f64 {
        self.payload_len() as f64 / self.n_codeword as f64
    }
}

/// Channel decoder selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecoderKind {
    #[default]
    Sc,
    Scl { list_size: usize },
}

impl DecoderKind {
    pub fn decode<T: Real>(&self, spec: &PolarCodeSpec, llrs: &LlrBlock<T>) -> Result<BitBlock> {
        match *self {
            DecoderKind::Sc => polar_decode_sc(spec, llrs),
            DecoderKind::Scl { list_size } => polar_decode_scl(spec, llrs, list_size),
        }
    }
}

#[inline]
fn hard<T: Real>(llr: T) -> u8 {
    (llr < T::zero()) as u8
}

/// Check-node (boxplus) update, exact form.
#[inline]
fn check_node<T: Real>(a: T, b: T) -> T {
    let sign = if (a < T::zero()) ^ (b < T::zero()) {
        -T::one()
    } else {
        T::one()
    };
    let approx = sign * a.abs().min(b.abs());
    approx + (-(a + b).abs()).exp().ln_1p() - (-(a - b).abs()).exp().ln_1p()
}

/// Variable-node update given the partial-sum bit of the left branch.
#[inline]
fn bit_node<T: Real>(a: T, b: T, left_bit: u8) -> T {
    if left_bit == 0 {
        b + a
    } else {
        b - a
    }
}

fn clipped_llrs<T: Real>(spec: &PolarCodeSpec, llrs: &LlrBlock<T>) -> Result<Vec<T>> {
    if llrs.len() != spec.n() {
        return Err(crate::Error::Length {
            expected: spec.n(),
            actual: llrs.len(),
        });
    }
    let clip = T::lit(LLR_CLIP);
    Ok(llrs.as_slice().iter().map(|&v| v.max(-clip).min(clip)).collect())
}

/// Gathers the K bits at the information positions of `u`.
fn extract_info(spec: &PolarCodeSpec, u: &[u8]) -> BitBlock {
    BitBlock::from_vec_unchecked(spec.info_set().iter().map(|&i| u[i]).collect())
}

/// Drops the CRC tail from K decoded information bits.
fn strip_crc(spec: &PolarCodeSpec, info: BitBlock) -> BitBlock {
    let mut bits = info.into_vec();
    bits.truncate(spec.payload_len());
    BitBlock::from_vec_unchecked(bits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_node_matches_tanh_rule() {
        for &(a, b) in &[(1.0f64, 2.0), (-3.0, 0.5), (0.1, -0.2), (10.0, -15.0)] {
            let exact = 2.0 * ((a / 2.0f64).tanh() * (b / 2.0f64).tanh()).atanh();
            assert!((check_node(a, b) - exact).abs() < 1e-9, "{a} {b}");
        }
        assert!(check_node(40.0f64, 40.0).is_finite());
    }

    #[test]
    fn default_spec_shape() {
        let spec = PolarCodeSpec::nr_default();
        assert_eq!((spec.n(), spec.k(), spec.crc_width()), (1024, 512, 0));
        assert_eq!(spec.rate(), 0.5);
        let spec = spec.with_crc(11).unwrap();
        assert_eq!(spec.payload_len(), 501);
        assert!(PolarCodeSpec::nr_default().with_crc(12).is_err());
    }
}
