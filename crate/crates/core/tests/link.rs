mod common;

use std::sync::Arc;
use std::time::Duration;

use num_complex::Complex;
use rand::Rng;
use semlink::channel::ChannelKind;
use semlink::metrics::HashEmbedding;
use semlink::modem::{demap_llr, map_symbols, Csi};
use semlink::pipeline::{
    frame_blocks, spawn_tcp_server, transmit, Endpoint, ExternalCodec, LinkConfig, ReferenceByteCodec, SemanticCodec,
    TensorDomain,
};
use semlink::polar::polar_encode;
use semlink::rng::{mix_seed, substream};
use semlink::sweep::DEFAULT_CORPUS;
use semlink::types::HiddenTensor;
use semlink::Result;

fn corpus(n: usize) -> Vec<&'static str> {
    DEFAULT_CORPUS.lines().take(n).collect()
}

fn random_sentence(rng: &mut impl Rng) -> String {
    const ALPHABET: &[char] = &['a', 'b', 'z', 'Q', ' ', '.', ',', '!', '7', 'é', 'ß', '✓', '犬', '\u{1F415}'];
    let len = rng.random_range(1..120);
    (0..len).map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())]).collect()
}

/// Unbounded toy codec: byte values scaled by 2.5.
struct Wide;

impl SemanticCodec for Wide {
    fn encode(&self, s: &str) -> Result<HiddenTensor> {
        Ok(ReferenceByteCodec.encode(s)?.map(|v| v * 2.5))
    }

    fn decode(&self, t: &HiddenTensor) -> Result<String> {
        ReferenceByteCodec.decode(&t.map(|v| v / 2.5))
    }

    fn domain(&self) -> TensorDomain {
        TensorDomain::Unbounded
    }
}

#[test]
fn noiseless_chain_is_lossless_for_every_codec() {
    let addr = spawn_tcp_server("127.0.0.1:0", Arc::new(ReferenceByteCodec), Arc::new(HashEmbedding::default())).unwrap();
    let external = ExternalCodec::connect(&Endpoint::Tcp(addr.to_string()), Duration::from_secs(30)).unwrap();
    let codecs: [(&str, &dyn SemanticCodec); 3] = [("reference", &ReferenceByteCodec), ("wide", &Wide), ("external", &external)];
    let link = LinkConfig::default();
    let mut rng = substream(51, 0);
    for i in 0..1000u64 {
        let s = random_sentence(&mut rng);
        let kind = if i % 2 == 0 { ChannelKind::Awgn } else { ChannelKind::Rayleigh };
        for (name, codec) in codecs {
            let ch = link.channel(kind, f64::INFINITY, i);
            let r = transmit(&s, codec, &link, &ch, None).unwrap();
            assert_eq!(r.bits_errored, 0, "{name}: {s:?}");
            assert_eq!(r.sentence_out, s, "{name}");
        }
    }
}

#[test]
fn bit_errors_match_independent_recount() {
    let link = LinkConfig::default();
    for (i, s) in corpus(40).into_iter().enumerate() {
        let kind = if i % 2 == 0 { ChannelKind::Awgn } else { ChannelKind::Rayleigh };
        let ebno = if kind == ChannelKind::Awgn { 4.5 } else { 9.0 };
        let ch = link.channel(kind, ebno, 900 + i as u64);
        let report = transmit(s, &ReferenceByteCodec, &link, &ch, None).unwrap();

        let sent = frame_blocks(s, &ReferenceByteCodec, &link).unwrap();
        let n0 = ch.noise_var().unwrap();
        let mut rng = substream(ch.seed, ch.stream);
        let mut errors = 0;
        let mut bad_blocks = 0;
        for block in &sent {
            let x = map_symbols(&polar_encode(&link.code, block).unwrap(), &link.constellation).unwrap();
            let (y, h) = ch.apply(&x, &mut rng).unwrap();
            let csi = h.as_deref().map_or(Csi::Unit, |h: &[Complex<f64>]| Csi::PerSymbol(h));
            let rx = link.decoder.decode(&link.code, &demap_llr(&y, csi, n0, &link.constellation, link.demap).unwrap()).unwrap();
            let d = block.as_slice().iter().zip(rx.as_slice()).filter(|(a, b)| a != b).count();
            errors += d;
            bad_blocks += (d > 0) as usize;
        }
        assert_eq!(report.bits_errored, errors, "sentence {i}");
        assert_eq!(report.bits_total, sent.len() * 512);
        if !report.frame_error {
            assert_eq!(report.blocks_errored, bad_blocks);
        } else {
            assert_eq!(report.blocks_errored, report.blocks_total);
        }
    }
}

#[test]
fn clean_region_bleu_is_near_perfect() {
    let link = LinkConfig::default();
    let sentences = corpus(100);
    let total: f64 = sentences
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let ch = link.channel(ChannelKind::Awgn, 10.0, mix_seed(1, i as u64));
            transmit(s, &ReferenceByteCodec, &link, &ch, None).unwrap().scores.bleu_composite
        })
        .sum();
    assert!(total / 100.0 >= 0.99, "mean BLEU {}", total / 100.0);
}

#[test]
fn lost_header_decodes_zero_tensor() {
    let link = LinkConfig::default();
    let s = corpus(1)[0];
    let zeros = ReferenceByteCodec.decode(&HiddenTensor::zeros(1, s.len()).unwrap()).unwrap();
    let mut seen = 0;
    for seed in 0..200 {
        let ch = link.channel(ChannelKind::Awgn, 0.0, seed);
        let r = transmit(s, &ReferenceByteCodec, &link, &ch, None).unwrap();
        if r.frame_error {
            seen += 1;
            assert_eq!(r.blocks_errored, r.blocks_total);
            assert_eq!(r.sentence_out, zeros);
            assert!(r.bits_errored <= r.bits_total);
        }
    }
    assert!(seen > 0);
}

#[test]
fn mean_bleu_rises_with_ebno() {
    let link = LinkConfig::default();
    let sentences = corpus(60);
    let grid = [2.0, 4.0, 5.0, 6.0, 8.0];
    let curve: Vec<Vec<f64>> = grid
        .iter()
        .map(|&e| {
            sentences
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let ch = link.channel(ChannelKind::Awgn, e, mix_seed(7, i as u64));
                    transmit(s, &ReferenceByteCodec, &link, &ch, None).unwrap().scores.bleu_composite
                })
                .collect()
        })
        .collect();
    // Paired one-sided test on consecutive points at 95%.
    for (k, w) in curve.windows(2).enumerate() {
        let d: Vec<f64> = w[0].iter().zip(&w[1]).map(|(a, b)| a - b).collect();
        let n = d.len() as f64;
        let mean = d.iter().sum::<f64>() / n;
        let sd = (d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!(mean <= 1.645 * sd / n.sqrt(), "drop between {} and {} dB: {mean}", grid[k], grid[k + 1]);
    }
}

#[test]
fn external_embeddings_are_deterministic() {
    let addr = spawn_tcp_server("127.0.0.1:0", Arc::new(ReferenceByteCodec), Arc::new(HashEmbedding::default())).unwrap();
    let external = ExternalCodec::connect(&Endpoint::Tcp(addr.to_string()), Duration::from_secs(30)).unwrap();
    let link = LinkConfig::default();
    let ch = link.channel(ChannelKind::Rayleigh, 12.0, 3);
    let a = transmit(corpus(1)[0], &external, &link, &ch, Some(&external)).unwrap();
    let b = transmit(corpus(1)[0], &external, &link, &ch, Some(&external)).unwrap();
    assert_eq!(a, b);
    use semlink::metrics::EmbeddingProvider;
    assert_eq!(external.embed("two dogs").unwrap(), external.embed("two dogs").unwrap());
}
