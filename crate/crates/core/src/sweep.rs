//! Monte Carlo sweeps over (channel, Eb/N0) cells and single-sentence runs.
//!
//! # Config grammar
//!
//! One `key = value` per line. `#` starts a comment, blank lines are ignored
//! and a repeated key overrides the earlier value. Lists are comma
//! separated.
//!
//! | key | value | default |
//! |---|---|---|
//! | `ebno_grid_db` | list of dB values, or `start:step:stop` (inclusive) | `0:1:14` |
//! | `channels` | list of `awgn`, `rayleigh` | `awgn,rayleigh` |
//! | `codec` | `reference`, `external` or `external:<endpoint>` | `reference` |
//! | `trials_per_point` | transmissions of each sentence per cell, >= 1 | `1` |
//! | `sentences_file` | UTF-8 file, one sentence per line; empty for the built-in corpus | empty |
//! | `sentence_limit` | use only the first N sentences; 0 for all | `0` |
//! | `seed` | u64 | `1` |
//! | `bleu_n` | list drawn from 1..4; other orders leave their column empty | `1,2,3,4` |
//! | `composite` | `true` / `false` | `true` |
//! | `semantic` | `true` / `false` | `true` |
//! | `sanitize_policy` | `clamp` / `raw` | `clamp` |
//! | `decoder` | `sc`, `scl:<L>` or `scl:<L>:crc<W>` with W in {11, 24} | `sc` |
//! | `payload` | `fp32` / `fixed16` | `fp32` |
//! | `demap` | `exact` / `maxlog` | `exact` |
//! | `fading_block` | symbols per Rayleigh coefficient, >= 1 | `1` |
//! | `workers` | worker threads; 0 uses every core | `0` |
//! | `adapter_timeout_s` | per-request adapter timeout in seconds | `120` |
//! | `adapter_domain` | `bounded`, `squashed` or `unbounded` | `bounded` |
//!
//! # Seeds
//!
//! Sentence `i` in trial `t` uses channel seed `mix_seed(seed, i)` and
//! substream `t`, for every channel and Eb/N0. Cells therefore share their
//! random numbers and differ only in the noise scale.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use rayon::prelude::*;

use crate::bridge::{PayloadFormat, SanitizePolicy};
use crate::channel::ChannelKind;
use crate::error::{Error, Result};
use crate::metrics::{EmbeddingProvider, HashEmbedding, MAX_NGRAM};
use crate::modem::{ConstellationSpec, DemapMethod};
use crate::pipeline::{
    transmit, Endpoint, ExternalCodec, LinkConfig, LinkReport, ReferenceByteCodec, SemanticCodec, TensorDomain,
};
use crate::polar::{DecoderKind, PolarCodeSpec, LIST_SIZES, SUPPORTED_WIDTHS};
use crate::rng::mix_seed;

/// Column set of the sweep CSV.
pub const CSV_HEADER: &str = "channel,ebno_db,trials,ber,bler,bleu1,bleu2,bleu3,bleu4,bleu_composite,sem_sim,seed";

/// The built-in 1000-sentence caption corpus.
pub const DEFAULT_CORPUS: &str = include_str!("../data/captions.txt");

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CodecChoice {
    Reference,
    /// `None` until an endpoint is supplied by config, flag or environment.
    External(Option<Endpoint>),
}

impl FromStr for CodecChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "reference" => Ok(CodecChoice::Reference),
            "external" => Ok(CodecChoice::External(None)),
            _ => match s.strip_prefix("external:") {
                Some(ep) => Ok(CodecChoice::External(Some(ep.parse()?))),
                None => Err(Error::Config(format!("unknown codec `{s}`"))),
            },
        }
    }
}

/// Polar decoder with its optional CRC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecoderChoice {
    #[default]
    Sc,
    Scl { list_size: usize, crc_width: usize },
}

impl DecoderChoice {
    pub fn kind(&self) -> DecoderKind {
        match *self {
            DecoderChoice::Sc => DecoderKind::Sc,
            DecoderChoice::Scl { list_size, .. } => DecoderKind::Scl { list_size },
        }
    }

    pub fn crc_width(&self) -> usize {
        match *self {
            DecoderChoice::Sc => 0,
            DecoderChoice::Scl { crc_width, .. } => crc_width,
        }
    }
}

impl FromStr for DecoderChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("decoder `{s}` is not sc, scl:<L> or scl:<L>:crc<W>"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            ["sc"] => Ok(DecoderChoice::Sc),
            ["scl", l, rest @ ..] if rest.len() <= 1 => {
                let list_size: usize = l.parse().map_err(|_| bad())?;
                let crc_width = match rest {
                    [] => 0,
                    [crc] => crc.strip_prefix("crc").and_then(|w| w.parse().ok()).ok_or_else(bad)?,
                    _ => unreachable!(),
                };
                if !LIST_SIZES.contains(&list_size) {
                    return Err(Error::Config(format!("list size {list_size} not in {LIST_SIZES:?}")));
                }
                if !SUPPORTED_WIDTHS.contains(&crc_width) {
                    return Err(Error::Config(format!("CRC width {crc_width} not in {SUPPORTED_WIDTHS:?}")));
                }
                Ok(DecoderChoice::Scl { list_size, crc_width })
            }
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub ebno_grid_db: Vec<f64>,
    pub channels: Vec<ChannelKind>,
    pub codec: CodecChoice,
    pub trials_per_point: usize,
    pub sentences_file: Option<PathBuf>,
    pub sentence_limit: Option<usize>,
    pub seed: u64,
    pub bleu_n: Vec<usize>,
    pub composite: bool,
    pub semantic: bool,
    pub sanitize_policy: SanitizePolicy,
    pub decoder: DecoderChoice,
    pub payload: PayloadFormat,
    pub demap: DemapMethod,
    pub fading_block: usize,
    pub workers: usize,
    pub adapter_timeout: Duration,
    pub adapter_domain: TensorDomain,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            ebno_grid_db: (0..=14).map(f64::from).collect(),
            channels: vec![ChannelKind::Awgn, ChannelKind::Rayleigh],
            codec: CodecChoice::Reference,
            trials_per_point: 1,
            sentences_file: None,
            sentence_limit: None,
            seed: 1,
            bleu_n: vec![1, 2, 3, 4],
            composite: true,
            semantic: true,
            sanitize_policy: SanitizePolicy::Clamp,
            decoder: DecoderChoice::Sc,
            payload: PayloadFormat::Fp32,
            demap: DemapMethod::Exact,
            fading_block: 1,
            workers: 0,
            adapter_timeout: crate::pipeline::DEFAULT_TIMEOUT,
            adapter_domain: TensorDomain::Bounded,
        }
    }
}

fn config_err(key: &str, value: &str, why: impl std::fmt::Display) -> Error {
    Error::Config(format!("`{key} = {value}`: {why}"))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| v.parse().map_err(|e| config_err(key, value, e)))
        .collect()
}

fn parse_scalar<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| config_err(key, value, e))
}

/// Parses `a,b,c` or `start:step:stop` (inclusive of `stop`).
pub fn parse_grid(value: &str) -> Result<Vec<f64>> {
    let key = "ebno_grid_db";
    let parts: Vec<&str> = value.split(':').map(str::trim).collect();
    if parts.len() == 1 {
        return parse_list(key, value);
    }
    let [start, step, stop] = parts.as_slice() else {
        return Err(config_err(key, value, "expected start:step:stop"));
    };
    let (start, step, stop): (f64, f64, f64) =
        (parse_scalar(key, start)?, parse_scalar(key, step)?, parse_scalar(key, stop)?);
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() {
        return Err(config_err(key, value, "step must be positive and bounds finite"));
    }
    let count = ((stop - start) / step + 1e-9).floor();
    if count < 0.0 || count > 1e6 {
        return Err(config_err(key, value, "range is empty or too long"));
    }
    // Rounded so that 0.1-style steps print cleanly.
    Ok((0..=count as usize)
        .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(config_err(key, value, "expected true or false")),
    }
}

impl SweepConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "ebno_grid_db" => self.ebno_grid_db = parse_grid(value)?,
            "channels" => self.channels = parse_list(key, value)?,
            "codec" => self.codec = value.parse()?,
            "trials_per_point" => self.trials_per_point = parse_scalar(key, value)?,
            "sentences_file" => self.sentences_file = (!value.is_empty()).then(|| PathBuf::from(value)),
            "sentence_limit" => {
                let n: usize = parse_scalar(key, value)?;
                self.sentence_limit = (n > 0).then_some(n);
            }
            "seed" => self.seed = parse_scalar(key, value)?,
            "bleu_n" => self.bleu_n = parse_list(key, value)?,
            "composite" => self.composite = parse_bool(key, value)?,
            "semantic" => self.semantic = parse_bool(key, value)?,
            "sanitize_policy" => self.sanitize_policy = parse_scalar(key, value)?,
            "decoder" => self.decoder = value.parse()?,
            "payload" => self.payload = parse_scalar(key, value)?,
            "demap" => self.demap = value.parse()?,
            "fading_block" => self.fading_block = parse_scalar(key, value)?,
            "workers" => self.workers = parse_scalar(key, value)?,
            "adapter_timeout_s" => {
                let secs: f64 = parse_scalar(key, value)?;
                if !(secs > 0.0 && secs.is_finite()) {
                    return Err(config_err(key, value, "timeout must be positive"));
                }
                self.adapter_timeout = Duration::from_secs_f64(secs);
            }
            "adapter_domain" => self.adapter_domain = value.parse()?,
            other => return Err(Error::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text` on top of `self`.
    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value, got `{raw}`", no + 1)))?;
            self.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {e}", no + 1)))?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.merge_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    /// Points an external codec at `endpoint`; no effect for the reference codec.
    pub fn override_adapter(&mut self, endpoint: Endpoint) {
        if let CodecChoice::External(ep) = &mut self.codec {
            *ep = Some(endpoint);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ebno_grid_db.is_empty() {
            return Err(Error::Config("Eb/N0 grid is empty".into()));
        }
        if let Some(v) = self.ebno_grid_db.iter().find(|v| !v.is_finite()) {
            return Err(Error::Config(format!("Eb/N0 grid value {v} is not finite")));
        }
        if self.channels.is_empty() {
            return Err(Error::Config("no channels selected".into()));
        }
        if self.trials_per_point == 0 {
            return Err(Error::Config("trials_per_point must be at least 1".into()));
        }
        if let Some(n) = self.bleu_n.iter().find(|&&n| n == 0 || n > MAX_NGRAM) {
            return Err(Error::Config(format!("bleu_n entry {n} outside 1..={MAX_NGRAM}")));
        }
        if self.fading_block == 0 {
            return Err(Error::Config("fading_block must be at least 1".into()));
        }
        if self.codec == CodecChoice::External(None) {
            return Err(Error::Config(
                "external codec needs an endpoint (codec = external:<endpoint> or SEMLINK_ADAPTER)".into(),
            ));
        }
        Ok(())
    }

    pub fn link(&self) -> Result<LinkConfig> {
        Ok(LinkConfig {
            code: PolarCodeSpec::nr_default().with_crc(self.decoder.crc_width())?,
            decoder: self.decoder.kind(),
            constellation: ConstellationSpec::qam16(),
            demap: self.demap,
            payload: self.payload,
            sanitize: self.sanitize_policy,
        })
    }

    /// Sentences to send, in file order.
    pub fn load_sentences(&self) -> Result<Vec<String>> {
        let text = match &self.sentences_file {
            Some(path) => std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read sentences {}: {e}", path.display())))?,
            None => DEFAULT_CORPUS.to_owned(),
        };
        let mut sentences: Vec<String> = text
            .lines()
            .map(|l| l.trim_end_matches('\r'))
            .filter(|l| !l.trim().is_empty())
            .map(str::to_owned)
            .collect();
        if let Some(n) = self.sentence_limit {
            sentences.truncate(n);
        }
        if sentences.is_empty() {
            return Err(Error::Config("sentence list is empty".into()));
        }
        Ok(sentences)
    }

    /// Connects the configured codec and embedding source.
    pub fn open_codec(&self) -> Result<Session> {
        match &self.codec {
            CodecChoice::Reference => Ok(Session {
                codec: Arc::new(ReferenceByteCodec),
                embedder: Arc::new(HashEmbedding::default()),
            }),
            CodecChoice::External(Some(ep)) => {
                let client = Arc::new(ExternalCodec::connect(ep, self.adapter_timeout)?.with_domain(self.adapter_domain));
                Ok(Session {
                    codec: client.clone(),
                    embedder: client,
                })
            }
            CodecChoice::External(None) => Err(Error::Config("external codec has no endpoint".into())),
        }
    }
}

/// Codec and embedding provider shared by every trial of a run.
#[derive(Clone)]
pub struct Session {
    pub codec: Arc<dyn SemanticCodec>,
    pub embedder: Arc<dyn EmbeddingProvider>,
}

/// Sample mean and standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return Self::default();
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let std = if v.len() > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

/// Aggregate of one (channel, Eb/N0) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub channel: ChannelKind,
    pub ebno_db: f64,
    pub transmissions: usize,
    pub bits_total: u64,
    pub bits_errored: u64,
    pub blocks_total: u64,
    pub blocks_errored: u64,
    /// Transmissions whose frame header was unreadable.
    pub header_losses: usize,
    pub bleu: [Option<MeanStd>; MAX_NGRAM],
    pub bleu_composite: Option<MeanStd>,
    pub sem_sim: Option<MeanStd>,
    pub seed: u64,
}

impl SweepCell {
    pub fn ber(&self) -> f64 {
        self.bits_errored as f64 / self.bits_total as f64
    }

    pub fn bler(&self) -> f64 {
        self.blocks_errored as f64 / self.blocks_total as f64
    }

    pub fn header_loss_rate(&self) -> f64 {
        self.header_losses as f64 / self.transmissions as f64
    }

    fn aggregate(channel: ChannelKind, ebno_db: f64, reports: &[LinkReport], cfg: &SweepConfig) -> Self {
        let mean_of = |f: &dyn Fn(&LinkReport) -> f64| MeanStd::of(reports.iter().map(f));
        let mut bleu = [None; MAX_NGRAM];
        for &n in &cfg.bleu_n {
            bleu[n - 1] = Some(mean_of(&|r| r.scores.bleu_per_n[n - 1]));
        }
        let sem_sim = if cfg.semantic {
            let values: Option<Vec<f64>> = reports.iter().map(|r| r.scores.semantic_similarity).collect();
            values.map(MeanStd::of)
        } else {
            None
        };
        Self {
            channel,
            ebno_db,
            transmissions: reports.len(),
            bits_total: reports.iter().map(|r| r.bits_total as u64).sum(),
            bits_errored: reports.iter().map(|r| r.bits_errored as u64).sum(),
            blocks_total: reports.iter().map(|r| r.blocks_total as u64).sum(),
            blocks_errored: reports.iter().map(|r| r.blocks_errored as u64).sum(),
            header_losses: reports.iter().filter(|r| r.frame_error).count(),
            bleu,
            bleu_composite: cfg.composite.then(|| mean_of(&|r| r.scores.bleu_composite)),
            sem_sim,
            seed: cfg.seed,
        }
    }

    pub fn csv_row(&self) -> String {
        let opt = |m: Option<MeanStd>| m.map(|m| m.mean.to_string()).unwrap_or_default();
        let mut row = format!(
            "{},{},{},{},{}",
            self.channel,
            self.ebno_db,
            self.transmissions,
            self.ber(),
            self.bler()
        );
        for b in self.bleu {
            let _ = write!(row, ",{}", opt(b));
        }
        let _ = write!(row, ",{},{},{}", opt(self.bleu_composite), opt(self.sem_sim), self.seed);
        row
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Ordered by channel (config order), then Eb/N0 (grid order).
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for cell in &self.cells {
            out.push_str(&cell.csv_row());
            out.push('\n');
        }
        out
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Runs every (channel, Eb/N0, trial, sentence) transmission with a fresh
/// codec session.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let sentences = config.load_sentences()?;
    let session = config.open_codec()?;
    run_sweep_with(config, &sentences, &session)
}

/// [`run_sweep`] with the sentences and codec already supplied.
pub fn run_sweep_with(config: &SweepConfig, sentences: &[String], session: &Session) -> Result<SweepResult> {
    config.validate()?;
    let link = config.link()?;
    let per_cell = config.trials_per_point * sentences.len();
    let cells: Vec<(ChannelKind, f64)> = config
        .channels
        .iter()
        .flat_map(|&ch| config.ebno_grid_db.iter().map(move |&e| (ch, e)))
        .collect();
    let embedder = config.semantic.then_some(session.embedder.as_ref());

    let run = |job: usize| -> Result<LinkReport> {
        let (kind, ebno) = cells[job / per_cell];
        let within = job % per_cell;
        let (trial, idx) = (within / sentences.len(), within % sentences.len());
        let mut ch = link.channel(kind, ebno, mix_seed(config.seed, idx as u64));
        ch.stream = trial as u64;
        ch.fading_block = config.fading_block;
        transmit(&sentences[idx], session.codec.as_ref(), &link, &ch, embedder)
    };
    let reports: Vec<LinkReport> = pool(config.workers)?.install(|| {
        (0..cells.len() * per_cell)
            .into_par_iter()
            .map(run)
            .collect::<Result<Vec<_>>>()
    })?;

    let cells = cells
        .iter()
        .zip(reports.chunks(per_cell))
        .map(|(&(kind, ebno), chunk)| SweepCell::aggregate(kind, ebno, chunk, config))
        .collect();
    Ok(SweepResult { cells })
}

/// Sends one sentence through the first configured channel at the first
/// grid point. Uses the seeds of sentence 0, trial 0 of a sweep.
pub fn run_single(sentence: &str, config: &SweepConfig, session: &Session) -> Result<LinkReport> {
    config.validate()?;
    let link = config.link()?;
    let mut ch = link.channel(config.channels[0], config.ebno_grid_db[0], mix_seed(config.seed, 0));
    ch.fading_block = config.fading_block;
    let embedder = config.semantic.then_some(session.embedder.as_ref());
    transmit(sentence, session.codec.as_ref(), &link, &ch, embedder)
}

/// Human-readable report in transmitted / received / scores form.
pub fn format_report(report: &LinkReport, verbose: bool) -> String {
    let s = &report.scores;
    let mut out = String::new();
    let _ = writeln!(out, "transmitted : {}", report.sentence_in);
    let _ = writeln!(out, "received    : {}", report.sentence_out);
    let _ = writeln!(out, "BLEU        : {}", s.bleu_composite);
    match s.semantic_similarity {
        Some(v) => {
            let _ = writeln!(out, "similarity  : {v}");
        }
        None => {
            let _ = writeln!(out, "similarity  : -");
        }
    }
    let _ = writeln!(
        out,
        "BLEU-1..4   : {} {} {} {}",
        s.bleu_per_n[0], s.bleu_per_n[1], s.bleu_per_n[2], s.bleu_per_n[3]
    );
    let _ = writeln!(
        out,
        "channel     : {} at {} dB, seed {}",
        report.channel, report.ebno_db, report.seed
    );
    let _ = writeln!(
        out,
        "errors      : {}/{} bits, {}/{} blocks{}",
        report.bits_errored,
        report.bits_total,
        report.blocks_errored,
        report.blocks_total,
        if report.frame_error { ", header lost" } else { "" }
    );
    if verbose {
        let t = &report.trace;
        let _ = writeln!(out, "tensor      : {} x {}", t.tensor_rows, t.tensor_cols);
        let _ = writeln!(out, "payload     : {} bits", t.payload_bits);
        let _ = writeln!(out, "frame       : {} bits ({} padding)", t.frame_bits, t.pad_bits);
        let _ = writeln!(out, "blocks      : {} x {} info bits", report.blocks_total, report.bits_total / report.blocks_total.max(1));
        let _ = writeln!(out, "coded       : {} bits", t.coded_bits);
        let _ = writeln!(out, "symbols     : {}", t.symbols);
    }
    out
}
