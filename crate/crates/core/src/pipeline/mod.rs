//! End-to-end link: semantic encode, tensor framing, polar coding, 16-QAM,
//! channel, soft demapping, polar decoding, reassembly, semantic decode.

mod client;
mod server;
pub mod wire;

pub use client::{Endpoint, ExternalCodec, DEFAULT_TIMEOUT};
pub use server::{serve, serve_tcp, spawn_tcp_server};

use num_complex::Complex;

use crate::bridge::{bits_to_tensor, tensor_to_bits, unsquash, PayloadFormat, SanitizePolicy, DEFAULT_CLAMP_EPS};
use crate::channel::{ChannelConfig, ChannelKind};
use crate::error::{Error, Result};
use crate::metrics::{EmbeddingProvider, ScoreReport};
use crate::modem::{demap_llr, map_symbols, ConstellationSpec, Csi, DemapMethod};
use crate::polar::{polar_encode, DecoderKind, PolarCodeSpec};
use crate::rng::substream;
use crate::types::{BitBlock, HiddenTensor};

/// Noise variance handed to the demapper on a noiseless channel.
pub const NOISELESS_DEMAP_N0: f64 = 1e-6;

/// How the values returned by [`SemanticCodec::encode`] relate to the
/// bounded [-1, 1] domain the tensor bridge carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TensorDomain {
    /// Already bounded; decoded as received.
    #[default]
    Bounded,
    /// The codec applied `tanh`; the receiver applies `atanh` before decode.
    Squashed,
    /// Unbounded; the link squashes before sending and unsquashes after.
    Unbounded,
}

impl std::str::FromStr for TensorDomain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bounded" => Ok(TensorDomain::Bounded),
            "squashed" => Ok(TensorDomain::Squashed),
            "unbounded" => Ok(TensorDomain::Unbounded),
            other => Err(Error::Config(format!("unknown tensor domain `{other}`"))),
        }
    }
}

/// Sentence to hidden-state tensor and back.
pub trait SemanticCodec: Send + Sync {
    fn encode(&self, sentence: &str) -> Result<HiddenTensor>;

    fn decode(&self, tensor: &HiddenTensor) -> Result<String>;

    fn domain(&self) -> TensorDomain {
        TensorDomain::Bounded
    }
}

/// Byte-level codec: UTF-8 byte `b` becomes `b / 127.5 - 1` in a 1 x L tensor.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReferenceByteCodec;

impl SemanticCodec for ReferenceByteCodec {
    fn encode(&self, sentence: &str) -> Result<HiddenTensor> {
        if sentence.is_empty() {
            return Err(Error::Input("cannot encode an empty sentence".into()));
        }
        let values = sentence.bytes().map(|b| b as f32 / 127.5 - 1.0).collect();
        HiddenTensor::new(1, sentence.len(), values)
    }

    fn decode(&self, tensor: &HiddenTensor) -> Result<String> {
        let bytes: Vec<u8> = tensor
            .values()
            .iter()
            .map(|&v| {
                let v = if v.is_nan() { 0.0 } else { v };
                ((v + 1.0) * 127.5).round().clamp(0.0, 255.0) as u8
            })
            .collect();
        Ok(String::from_utf8_lossy(&bytes).into_owned())
    }
}

/// Physical-layer settings shared by every transmission.
#[derive(Debug, Clone)]
pub struct LinkConfig {
    pub code: PolarCodeSpec,
    pub decoder: DecoderKind,
    pub constellation: ConstellationSpec<f64>,
    pub demap: DemapMethod,
    pub payload: PayloadFormat,
    pub sanitize: SanitizePolicy,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            code: PolarCodeSpec::nr_default(),
            decoder: DecoderKind::Sc,
            constellation: ConstellationSpec::qam16(),
            demap: DemapMethod::Exact,
            payload: PayloadFormat::Fp32,
            sanitize: SanitizePolicy::Clamp,
        }
    }
}

impl LinkConfig {
    /// Channel settings whose Eb/N0 refers to this link's payload bits.
    pub fn channel(&self, kind: ChannelKind, ebno_db: f64, seed: u64) -> ChannelConfig {
        let mut cfg = ChannelConfig::new(kind, ebno_db, seed);
        cfg.code_rate = self.code.payload_rate();
        cfg.bits_per_symbol = self.constellation.bits_per_symbol();
        cfg
    }
}

/// Bit counts at each stage of one transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LinkTrace {
    pub tensor_rows: usize,
    pub tensor_cols: usize,
    pub payload_bits: u64,
    pub frame_bits: usize,
    pub pad_bits: usize,
    pub coded_bits: usize,
    pub symbols: usize,
}

/// Outcome of one sentence transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkReport {
    pub sentence_in: String,
    pub sentence_out: String,
    pub blocks_total: usize,
    pub blocks_errored: usize,
    pub bits_total: usize,
    pub bits_errored: usize,
    /// The received header could not be parsed.
    pub frame_error: bool,
    pub scores: ScoreReport,
    pub ebno_db: f64,
    pub channel: ChannelKind,
    pub seed: u64,
    pub trace: LinkTrace,
}

fn codec_error(stage: &str, e: Error) -> Error {
    match e {
        Error::Transport(_) => e,
        other => Error::Transport(format!("codec {stage} failed: {other}")),
    }
}

/// Sends `sentence` over the link once.
///
/// Randomness comes from `substream(channel.seed, channel.stream)`, so the
/// report is a pure function of the arguments. Codec failures surface as
/// [`Error::Transport`]; channel damage only ever shows up in the report.
pub fn transmit(
    sentence: &str,
    codec: &dyn SemanticCodec,
    link: &LinkConfig,
    channel: &ChannelConfig,
    embedder: Option<&dyn EmbeddingProvider>,
) -> Result<LinkReport> {
    let encoded = codec.encode(sentence).map_err(|e| codec_error("encode", e))?;
    let sent = match codec.domain() {
        TensorDomain::Unbounded => crate::bridge::squash(&encoded)?,
        TensorDomain::Bounded | TensorDomain::Squashed => encoded,
    };
    let (blocks, header) = tensor_to_bits(&sent, link.code.payload_len(), link.payload)?;

    let noise_var = channel.noise_var()?;
    let demap_n0 = if noise_var > 0.0 { noise_var } else { NOISELESS_DEMAP_N0 };
    let mut rng = substream(channel.seed, channel.stream);

    let mut decoded = Vec::with_capacity(blocks.len());
    let mut symbols = 0;
    for block in &blocks {
        let codeword = polar_encode(&link.code, block)?;
        let x = map_symbols(&codeword, &link.constellation)?;
        symbols += x.len();
        let (y, h) = channel.apply(&x, &mut rng)?;
        let csi = h.as_deref().map_or(Csi::Unit, |h: &[Complex<f64>]| Csi::PerSymbol(h));
        let llrs = demap_llr(&y, csi, demap_n0, &link.constellation, link.demap)?;
        decoded.push(link.decoder.decode(&link.code, &llrs)?);
    }

    let mut bits_errored = 0;
    let mut blocks_errored = 0;
    for (tx, rx) in blocks.iter().zip(&decoded) {
        let d = tx.hamming_distance(rx)?;
        bits_errored += d;
        blocks_errored += (d > 0) as usize;
    }

    let (received, frame_error) = match bits_to_tensor(&decoded, link.payload, link.sanitize) {
        Ok(t) => (t, false),
        Err(Error::Frame(_)) => (HiddenTensor::zeros(sent.rows(), sent.cols())?, true),
        Err(e) => return Err(e),
    };
    if frame_error {
        blocks_errored = blocks.len();
    }
    let received = match codec.domain() {
        TensorDomain::Bounded => received,
        TensorDomain::Squashed | TensorDomain::Unbounded => unsquash(&received, DEFAULT_CLAMP_EPS),
    };
    let sentence_out = codec.decode(&received).map_err(|e| codec_error("decode", e))?;
    let scores = ScoreReport::compute(&sentence_out, sentence, embedder)?;

    Ok(LinkReport {
        sentence_in: sentence.to_owned(),
        sentence_out,
        blocks_total: blocks.len(),
        blocks_errored,
        bits_total: blocks.len() * link.code.payload_len(),
        bits_errored,
        frame_error,
        scores,
        ebno_db: channel.ebno_db,
        channel: channel.kind,
        seed: channel.seed,
        trace: LinkTrace {
            tensor_rows: sent.rows(),
            tensor_cols: sent.cols(),
            payload_bits: header.payload_bits,
            frame_bits: crate::bridge::HEADER_BITS + header.payload_bits as usize,
            pad_bits: header.pad_bits,
            coded_bits: blocks.len() * link.code.n(),
            symbols,
        },
    })
}

/// Payload blocks exactly as `transmit` would send them, for cross-checks.
pub fn frame_blocks(sentence: &str, codec: &dyn SemanticCodec, link: &LinkConfig) -> Result<Vec<BitBlock>> {
    let encoded = codec.encode(sentence).map_err(|e| codec_error("encode", e))?;
    let sent = match codec.domain() {
        TensorDomain::Unbounded => crate::bridge::squash(&encoded)?,
        _ => encoded,
    };
    Ok(tensor_to_bits(&sent, link.code.payload_len(), link.payload)?.0)
}
