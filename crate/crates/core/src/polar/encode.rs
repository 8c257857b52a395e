use super::crc::crc_attach;
use super::PolarCodeSpec;
use crate::error::{Error, Result};
use crate::types::BitBlock;

/// In-place `x = u · G_N` over GF(2) with the butterfly network.
///
/// Panics if `bits.len()` is not a power of two.
pub fn polar_transform(bits: &mut [u8]) {
    let n = bits.len();
    assert!(n.is_power_of_two(), "polar transform length must be a power of two");
    let mut half = 1;
    while half < n {
        for start in (0..n).step_by(2 * half) {
            for j in start..start + half {
                bits[j] ^= bits[j + half];
            }
        }
        half <<= 1;
    }
}

/// Encodes `payload_len` user bits into an N-bit codeword, attaching the
/// code's CRC first.
pub fn polar_encode(spec: &PolarCodeSpec, info: &BitBlock) -> Result<BitBlock> {
    if info.len() != spec.payload_len() {
        return Err(Error::Length {
            expected: spec.payload_len(),
            actual: info.len(),
        });
    }
    let with_crc = crc_attach(info, spec.crc_width())?;
    let mut u = vec![0u8; spec.n()];
    for (&pos, &b) in spec.info_set().iter().zip(with_crc.as_slice()) {
        u[pos] = b;
    }
    polar_transform(&mut u);
    Ok(BitBlock::from_vec_unchecked(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polar::{construct_code, ReliabilitySource};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn kron_generator(n: usize) -> Vec<Vec<u8>> {
        let mut g = vec![vec![1u8]];
        while g.len() < n {
            let m = g.len();
            let mut next = vec![vec![0u8; 2 * m]; 2 * m];
            for r in 0..m {
                for c in 0..m {
                    next[r][c] = g[r][c];
                    next[r + m][c] = g[r][c];
                    next[r + m][c + m] = g[r][c];
                }
            }
            g = next;
        }
        g
    }

    fn matmul(u: &[u8], g: &[Vec<u8>]) -> Vec<u8> {
        (0..u.len())
            .map(|c| (0..u.len()).fold(0, |acc, r| acc ^ (u[r] & g[r][c])))
            .collect()
    }

    #[test]
    fn n2_repeats_the_bit() {
        let spec = construct_code(2, 1, &ReliabilitySource::Nr5g).unwrap();
        for b in [0u8, 1] {
            let cw = polar_encode(&spec, &BitBlock::new(vec![b]).unwrap()).unwrap();
            assert_eq!(cw.as_slice(), &[b, b]);
        }
    }

    #[test]
    fn n4_matches_matrix_multiply() {
        let spec = construct_code(4, 2, &ReliabilitySource::Custom(vec![0, 1, 2, 3])).unwrap();
        assert_eq!(spec.frozen_set(), &[0, 1]);
        let cw = polar_encode(&spec, &BitBlock::new(vec![1, 0]).unwrap()).unwrap();
        let expected = matmul(&[0, 0, 1, 0], &kron_generator(4));
        assert_eq!(cw.as_slice(), expected.as_slice());
        assert_eq!(cw.as_slice(), &[1, 0, 1, 0]);
    }

    #[test]
    fn length_mismatch_rejected() {
        let spec = PolarCodeSpec::nr_default();
        assert!(matches!(
            polar_encode(&spec, &BitBlock::zeros(511)),
            Err(Error::Length { expected: 512, actual: 511 })
        ));
    }

    #[test]
    fn all_zero_info_gives_zero_codeword() {
        let spec = PolarCodeSpec::nr_default();
        let cw = polar_encode(&spec, &BitBlock::zeros(512)).unwrap();
        assert!(cw.as_slice().iter().all(|&b| b == 0));
    }

    #[test]
    fn linear_over_gf2() {
        let spec = PolarCodeSpec::nr_default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let a = BitBlock::new((0..512).map(|_| rng.random_range(0..=1)).collect()).unwrap();
            let b = BitBlock::new((0..512).map(|_| rng.random_range(0..=1)).collect()).unwrap();
            let lhs = polar_encode(&spec, &(&a ^ &b)).unwrap();
            let rhs = &polar_encode(&spec, &a).unwrap() ^ &polar_encode(&spec, &b).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn transform_is_an_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let orig: Vec<u8> = (0..64).map(|_| rng.random_range(0..=1)).collect();
        let mut x = orig.clone();
        polar_transform(&mut x);
        assert_eq!(x, matmul(&orig, &kron_generator(64)));
        polar_transform(&mut x);
        assert_eq!(x, orig);
    }
}
