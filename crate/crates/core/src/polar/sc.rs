use super::{bit_node, check_node, clipped_llrs, extract_info, hard, strip_crc, PolarCodeSpec};
use crate::error::Result;
use crate::scalar::Real;
use crate::types::{BitBlock, LlrBlock};

/// Successive-cancellation decoding of one codeword.
///
/// Returns the payload bits (K minus any CRC). Channel LLRs are clipped to
/// `±LLR_CLIP` first; frozen positions are always decided as 0.
pub fn polar_decode_sc<T: Real>(spec: &PolarCodeSpec, llrs: &LlrBlock<T>) -> Result<BitBlock> {
    let alpha = clipped_llrs(spec, llrs)?;
    let n = spec.n();
    let mut u = vec![0u8; n];
    let mut beta = vec![0u8; n];
    let mut scratch = vec![T::zero(); n];
    decode_node(&alpha, spec.frozen_mask(), &mut u, &mut beta, &mut scratch);
    Ok(strip_crc(spec, extract_info(spec, &u)))
}

/// Decodes the subtree whose channel LLRs are `alpha`.
///
/// On return `u` holds the decided leaf bits and `beta` the re-encoded
/// partial sums of the subtree.
fn decode_node<T: Real>(
    alpha: &[T],
    frozen: &[bool],
    u: &mut [u8],
    beta: &mut [u8],
    scratch: &mut [T],
) {
    let n = alpha.len();
    if frozen.iter().all(|&f| f) {
        u.fill(0);
        beta.fill(0);
        return;
    }
    if n == 1 {
        let bit = hard(alpha[0]);
        u[0] = bit;
        beta[0] = bit;
        return;
    }
    let half = n / 2;
    let (child, rest) = scratch.split_at_mut(half);
    let (u_left, u_right) = u.split_at_mut(half);
    let (beta_left, beta_right) = beta.split_at_mut(half);

    for i in 0..half {
        child[i] = check_node(alpha[i], alpha[i + half]);
    }
    decode_node(child, &frozen[..half], u_left, beta_left, rest);

    for i in 0..half {
        child[i] = bit_node(alpha[i], alpha[i + half], beta_left[i]);
    }
    decode_node(child, &frozen[half..], u_right, beta_right, rest);

    for i in 0..half {
        beta_left[i] ^= beta_right[i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polar::{construct_code, polar_encode, ReliabilitySource};

    fn all_words(k: usize) -> impl Iterator<Item = BitBlock> {
        (0..1u32 << k).map(move |w| {
            BitBlock::new((0..k).map(|i| ((w >> (k - 1 - i)) & 1) as u8).collect()).unwrap()
        })
    }

    #[test]
    fn noiseless_exhaustive_n8() {
        let spec = construct_code(8, 4, &ReliabilitySource::Nr5g).unwrap();
        for info in all_words(4) {
            let cw = polar_encode(&spec, &info).unwrap();
            let llrs = LlrBlock::from_hard_bits(&cw, 20.0f64);
            assert_eq!(polar_decode_sc(&spec, &llrs).unwrap(), info);
        }
    }

    #[test]
    fn strong_positive_llrs_decode_to_zero() {
        let spec = PolarCodeSpec::nr_default();
        let llrs = LlrBlock::new(vec![25.0f32; 1024]).unwrap();
        assert_eq!(polar_decode_sc(&spec, &llrs).unwrap(), BitBlock::zeros(512));
    }

    #[test]
    fn wrong_length_rejected() {
        let spec = PolarCodeSpec::nr_default();
        let llrs = LlrBlock::new(vec![1.0f64; 1000]).unwrap();
        assert!(polar_decode_sc(&spec, &llrs).is_err());
    }

    #[test]
    fn corrects_a_flipped_codeword_bit() {
        let spec = construct_code(64, 32, &ReliabilitySource::Nr5g).unwrap();
        let info = BitBlock::new((0..32).map(|i| (i % 3 == 0) as u8).collect()).unwrap();
        let cw = polar_encode(&spec, &info).unwrap();
        let mut llrs = LlrBlock::from_hard_bits(&cw, 4.0f64).into_vec();
        llrs[17] = -llrs[17] * 0.25;
        let out = polar_decode_sc(&spec, &LlrBlock::new(llrs).unwrap()).unwrap();
        assert_eq!(out, info);
    }
}
