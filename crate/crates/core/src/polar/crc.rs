//! CRC attachment for list-decoding path selection.
//!
//! Generators are the 38.212 polynomials, processed MSB-first with an
//! all-zero initial register:
//! - width 11: `D^11 + D^10 + D^9 + D^5 + 1` (`0x621`)
//! - width 24: `D^24 + D^23 + D^21 + D^20 + D^17 + D^15 + D^13 + D^12 + D^8 + D^4 + D^2 + D + 1` (`0xB2B117`, CRC24C)

use crate::error::{Error, Result};
use crate::types::BitBlock;

pub const CRC11_POLY: u32 = 0x621;
pub const CRC24C_POLY: u32 = 0xB2_B117;

/// Supported widths; 0 disables the CRC.
pub const SUPPORTED_WIDTHS: [usize; 3] = [0, 11, 24];

fn poly_for(width: usize) -> Result<u32> {
    match width {
        11 => Ok(CRC11_POLY),
        24 => Ok(CRC24C_POLY),
        other => Err(Error::Parameter(format!(
            "unsupported CRC width {other}, expected one of {SUPPORTED_WIDTHS:?}"
        ))),
    }
}

/// Shift-register remainder of `bits` modulo the generator.
fn remainder(bits: &[u8], width: usize, poly: u32) -> u32 {
    let mask = (1u32 << width) - 1;
    let mut reg = 0u32;
    for &b in bits {
        let feedback = ((reg >> (width - 1)) & 1) ^ b as u32;
        reg = (reg << 1) & mask;
        if feedback == 1 {
            reg ^= poly;
        }
    }
    reg
}

pub(crate) fn validate_width(width: usize) -> Result<()> {
    if width == 0 {
        Ok(())
    } else {
        poly_for(width).map(|_| ())
    }
}

/// Appends `width` CRC bits (MSB first) to `bits`.
pub fn crc_attach(bits: &BitBlock, width: usize) -> Result<BitBlock> {
    if width == 0 {
        return Ok(bits.clone());
    }
    let poly = poly_for(width)?;
    let rem = remainder(bits.as_slice(), width, poly);
    let mut out = Vec::with_capacity(bits.len() + width);
    out.extend_from_slice(bits.as_slice());
    out.extend((0..width).rev().map(|i| ((rem >> i) & 1) as u8));
    Ok(BitBlock::from_vec_unchecked(out))
}

/// True iff `bits` (payload followed by CRC) leaves a zero remainder.
pub fn crc_check(bits: &BitBlock, width: usize) -> Result<bool> {
    if width == 0 {
        return Ok(true);
    }
    let poly = poly_for(width)?;
    if bits.len() < width {
        return Err(Error::Length {
            expected: width,
            actual: bits.len(),
        });
    }
    Ok(remainder(bits.as_slice(), width, poly) == 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_block(rng: &mut impl Rng, len: usize) -> BitBlock {
        BitBlock::from_vec_unchecked((0..len).map(|_| rng.random_range(0..=1)).collect())
    }

    #[test]
    fn width_zero_is_identity() {
        let b = BitBlock::new(vec![1, 0, 1]).unwrap();
        assert_eq!(crc_attach(&b, 0).unwrap(), b);
        assert!(crc_check(&b, 0).unwrap());
    }

    #[test]
    fn unsupported_width_rejected() {
        let b = BitBlock::zeros(8);
        assert!(matches!(crc_attach(&b, 16), Err(Error::Parameter(_))));
        assert!(matches!(crc_check(&b, 7), Err(Error::Parameter(_))));
    }

    #[test]
    fn single_bit_flip_always_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for width in [11, 24] {
            let data = random_block(&mut rng, 64);
            let coded = crc_attach(&data, width).unwrap();
            assert_eq!(coded.len(), 64 + width);
            for pos in 0..coded.len() {
                let mut flipped = coded.clone().into_vec();
                flipped[pos] ^= 1;
                let flipped = BitBlock::new(flipped).unwrap();
                assert!(!crc_check(&flipped, width).unwrap(), "width {width} pos {pos}");
            }
        }
    }

    #[test]
    fn single_one_gives_generator() {
        // D^w mod g(D) is g(D) without its leading term.
        assert_eq!(remainder(&[1], 24, CRC24C_POLY), CRC24C_POLY);
        assert_eq!(remainder(&[1], 11, CRC11_POLY), CRC11_POLY);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn attach_then_check(bits in prop::collection::vec(0u8..=1, 1..300), wide in any::<bool>()) {
            let width = if wide { 24 } else { 11 };
            let b = BitBlock::new(bits).unwrap();
            prop_assert!(crc_check(&crc_attach(&b, width).unwrap(), width).unwrap());
        }
    }
}
