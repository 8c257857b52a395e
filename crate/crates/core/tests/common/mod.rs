#![allow(dead_code)]

use num_complex::Complex;
use rand::Rng;
use semlink::channel::{apply_awgn, ChannelConfig, ChannelKind};
use semlink::modem::{demap_llr, map_symbols, ConstellationSpec, Csi, DemapMethod};
use semlink::polar::{polar_encode, DecoderKind, PolarCodeSpec};
use semlink::rng::substream;
use semlink::types::BitBlock;
use statrs::distribution::{Beta, ContinuousCDF, Normal};

pub fn q(x: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().sf(x)
}

/// Gray 16-QAM bit error probability under nearest-point decisions, with
/// `x = sqrt(Es / (5 N0))` the half-spacing over the per-dimension noise std.
pub fn qam16_ber(esno_db: f64) -> f64 {
    let esno = 10f64.powf(esno_db / 10.0);
    let x = (esno / 5.0).sqrt();
    (3.0 * q(x) + 2.0 * q(3.0 * x) - q(5.0 * x)) / 4.0
}

/// Two-sided Clopper-Pearson interval for `k` successes in `n` trials.
pub fn clopper_pearson(k: u64, n: u64, confidence: f64) -> (f64, f64) {
    let alpha = 1.0 - confidence;
    let (k, n) = (k as f64, n as f64);
    let lo = if k == 0.0 {
        0.0
    } else {
        Beta::new(k, n - k + 1.0).unwrap().inverse_cdf(alpha / 2.0)
    };
    let hi = if k == n {
        1.0
    } else {
        Beta::new(k + 1.0, n - k).unwrap().inverse_cdf(1.0 - alpha / 2.0)
    };
    (lo, hi)
}

/// `F^{⊗n}` for `F = [[1,0],[1,1]]`, built by explicit Kronecker products.
pub fn generator_matrix(n: usize) -> Vec<Vec<u8>> {
    let mut g = vec![vec![1u8]];
    while g.len() < n {
        let m = g.len();
        let mut next = vec![vec![0u8; 2 * m]; 2 * m];
        for (bi, row) in [[1u8, 0], [1, 1]].iter().enumerate() {
            for (bj, &k) in row.iter().enumerate() {
                for i in 0..m {
                    for j in 0..m {
                        next[bi * m + i][bj * m + j] = k & g[i][j];
                    }
                }
            }
        }
        g = next;
    }
    g
}

/// `u · G` over GF(2).
pub fn gf2_mul(u: &[u8], g: &[Vec<u8>]) -> Vec<u8> {
    (0..g.len())
        .map(|j| u.iter().zip(g).fold(0, |acc, (&ui, row)| acc ^ (ui & row[j])))
        .collect()
}

pub fn random_bits<R: Rng>(rng: &mut R, len: usize) -> BitBlock {
    BitBlock::new((0..len).map(|_| rng.random_range(0..2u8)).collect()).unwrap()
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ErrorCount {
    pub bits: u64,
    pub bit_errors: u64,
    pub blocks: u64,
    pub block_errors: u64,
}

impl ErrorCount {
    pub fn ber(&self) -> f64 {
        self.bit_errors as f64 / self.bits as f64
    }

    pub fn bler(&self) -> f64 {
        self.block_errors as f64 / self.blocks as f64
    }
}

/// Random payloads through encode, 16-QAM, channel, exact demap, decode.
pub fn coded_errors(
    spec: &PolarCodeSpec,
    decoder: DecoderKind,
    kind: ChannelKind,
    ebno_db: f64,
    blocks: usize,
    seed: u64,
) -> ErrorCount {
    let qam = ConstellationSpec::<f64>::qam16();
    let mut cfg = ChannelConfig::new(kind, ebno_db, seed);
    cfg.code_rate = spec.payload_rate();
    let n0 = cfg.noise_var().unwrap();
    let mut data_rng = substream(seed, 1);
    let mut noise_rng = substream(seed, 2);
    let mut count = ErrorCount::default();
    for _ in 0..blocks {
        let info = random_bits(&mut data_rng, spec.payload_len());
        let x = map_symbols(&polar_encode(spec, &info).unwrap(), &qam).unwrap();
        let (y, h) = cfg.apply(&x, &mut noise_rng).unwrap();
        let csi = h.as_deref().map_or(Csi::Unit, |h: &[Complex<f64>]| Csi::PerSymbol(h));
        let llr = demap_llr(&y, csi, n0, &qam, DemapMethod::Exact).unwrap();
        let decoded = decoder.decode(spec, &llr).unwrap();
        let e = info.hamming_distance(&decoded).unwrap() as u64;
        count.bits += info.len() as u64;
        count.bit_errors += e;
        count.blocks += 1;
        count.block_errors += (e > 0) as u64;
    }
    count
}

/// Uncoded 16-QAM over AWGN with sign-of-LLR decisions.
pub fn uncoded_errors(esno_db: f64, symbols: usize, method: DemapMethod, seed: u64) -> ErrorCount {
    let qam = ConstellationSpec::<f64>::qam16();
    let n0 = 10f64.powf(-esno_db / 10.0);
    let mut rng = substream(seed, 0);
    let mut count = ErrorCount::default();
    let chunk = 4096;
    let mut left = symbols;
    while left > 0 {
        let m = left.min(chunk);
        left -= m;
        let bits = random_bits(&mut rng, 4 * m);
        let y = apply_awgn(&map_symbols(&bits, &qam).unwrap(), n0, &mut rng);
        let hard = demap_llr(&y, Csi::Unit, n0, &qam, method).unwrap().hard_decision();
        count.bits += bits.len() as u64;
        count.bit_errors += bits.hamming_distance(&hard).unwrap() as u64;
    }
    count
}
