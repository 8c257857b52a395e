use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use semlink::metrics::HashEmbedding;
use semlink::pipeline::{serve, spawn_tcp_server, Endpoint, ReferenceByteCodec};
use semlink::sweep::{format_report, run_single, run_sweep, SweepConfig};

#[derive(Parser)]
#[command(name = "semlink", version, about = "Semantic link-level Monte Carlo simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep Eb/N0 and channels, writing one CSV row per cell.
    Sweep {
        #[command(flatten)]
        link: LinkArgs,
        /// Transmissions of each sentence per cell.
        #[arg(long)]
        trials: Option<usize>,
        /// Sentence file, one per line.
        #[arg(long)]
        sentences: Option<PathBuf>,
        /// Use only the first N sentences.
        #[arg(long)]
        limit: Option<usize>,
        /// Worker threads (0 = all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Send one sentence and print what arrives.
    Single {
        sentence: String,
        #[command(flatten)]
        link: LinkArgs,
        /// Also print per-stage bit counts.
        #[arg(long, short)]
        verbose: bool,
    },
    /// Serve the reference byte codec over the adapter protocol.
    EchoAdapter {
        /// Address to listen on, e.g. 127.0.0.1:7878.
        #[arg(long, conflicts_with = "stdio")]
        listen: Option<String>,
        /// Serve a single session on stdin/stdout.
        #[arg(long)]
        stdio: bool,
    },
}

#[derive(Args)]
struct LinkArgs {
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Eb/N0 grid in dB: `a,b,c` or `start:step:stop`.
    #[arg(long)]
    ebno: Option<String>,
    /// Channel list: awgn, rayleigh.
    #[arg(long)]
    channel: Option<String>,
    /// `reference`, `external` or `external:<endpoint>`.
    #[arg(long)]
    codec: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// `sc`, `scl:<L>` or `scl:<L>:crc<W>`.
    #[arg(long)]
    decoder: Option<String>,
    /// `clamp` or `raw`.
    #[arg(long)]
    sanitize: Option<String>,
    /// Overrides the adapter endpoint of an external codec.
    #[arg(long, env = "SEMLINK_ADAPTER", hide_env_values = true)]
    adapter: Option<String>,
}

impl LinkArgs {
    fn load(&self, base: SweepConfig) -> Result<SweepConfig> {
        let mut cfg = base;
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            cfg.merge_text(&text).with_context(|| format!("in {}", path.display()))?;
        }
        let overrides = [
            ("ebno_grid_db", self.ebno.clone()),
            ("channels", self.channel.clone()),
            ("codec", self.codec.clone()),
            ("seed", self.seed.map(|s| s.to_string())),
            ("decoder", self.decoder.clone()),
            ("sanitize_policy", self.sanitize.clone()),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                cfg.set(key, &v).with_context(|| format!("--{key}"))?;
            }
        }
        if let Some(ep) = &self.adapter {
            cfg.override_adapter(ep.parse::<Endpoint>().context("SEMLINK_ADAPTER")?);
        }
        Ok(cfg)
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Sweep {
            link,
            trials,
            sentences,
            limit,
            workers,
            out,
        } => {
            let mut cfg = link.load(SweepConfig::default())?;
            if let Some(n) = trials {
                cfg.trials_per_point = n;
            }
            if let Some(p) = sentences {
                cfg.sentences_file = Some(p);
            }
            if let Some(n) = limit {
                cfg.sentence_limit = (n > 0).then_some(n);
            }
            if let Some(n) = workers {
                cfg.workers = n;
            }
            let result = run_sweep(&cfg)?;
            let csv = result.to_csv();
            match out {
                Some(path) => std::fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?,
                None => std::io::stdout().write_all(csv.as_bytes())?,
            }
            for cell in &result.cells {
                let composite = cell.bleu_composite.map(|m| format!("{:.4} ± {:.4}", m.mean, m.std));
                eprintln!(
                    "{:>8} {:>6} dB  ber {:.3e}  bler {:.3e}  header loss {:.3}  bleu {}",
                    cell.channel,
                    cell.ebno_db,
                    cell.ber(),
                    cell.bler(),
                    cell.header_loss_rate(),
                    composite.as_deref().unwrap_or("-")
                );
            }
        }
        Command::Single { sentence, link, verbose } => {
            let base = SweepConfig {
                ebno_grid_db: vec![10.0],
                channels: vec![semlink::channel::ChannelKind::Awgn],
                ..SweepConfig::default()
            };
            let cfg = link.load(base)?;
            cfg.validate()?;
            let session = cfg.open_codec()?;
            let report = run_single(&sentence, &cfg, &session)?;
            print!("{}", format_report(&report, verbose));
        }
        Command::EchoAdapter { listen, stdio } => {
            if stdio {
                let stdin = std::io::stdin().lock();
                let stdout = std::io::stdout().lock();
                serve(stdin, stdout, &ReferenceByteCodec, &HashEmbedding::default())?;
            } else {
                let addr = listen.unwrap_or_else(|| "127.0.0.1:7878".into());
                let bound = spawn_tcp_server(&addr, Arc::new(ReferenceByteCodec), Arc::new(HashEmbedding::default()))?;
                eprintln!("listening on {bound}");
                loop {
                    std::thread::park();
                }
            }
        }
    }
    Ok(())
}
