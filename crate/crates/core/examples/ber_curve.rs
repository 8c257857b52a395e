//! Prints coded BER/BLER of the default (1024, 512) polar code over 16-QAM.
//!
//! Usage: `cargo run --release --example ber_curve -- [awgn|rayleigh] [blocks] [sc|scl8]`

use semlink::channel::{ChannelConfig, ChannelKind};
use semlink::modem::{demap_llr, map_symbols, ConstellationSpec, Csi, DemapMethod};
use semlink::polar::{polar_encode, DecoderKind, PolarCodeSpec};
use semlink::rng::substream;
use semlink::types::BitBlock;

use rand::Rng;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let kind: ChannelKind = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(ChannelKind::Awgn);
    let blocks: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(500);
    let (decoder, spec) = match args.get(3).map(String::as_str) {
        Some("scl8") => (
            DecoderKind::Scl { list_size: 8 },
            PolarCodeSpec::nr_default().with_crc(11).unwrap(),
        ),
        _ => (DecoderKind::Sc, PolarCodeSpec::nr_default()),
    };
    let qam = ConstellationSpec::<f64>::qam16();
    println!("ebno_db,ber,bler");
    for tenth in (20..=80).step_by(5) {
        let ebno = tenth as f64 / 10.0;
        let mut cfg = ChannelConfig::new(kind, ebno, 1);
        cfg.code_rate = spec.payload_rate();
        let n0 = cfg.noise_var().unwrap();
        let (mut bit_err, mut blk_err) = (0usize, 0usize);
        for b in 0..blocks {
            let mut rng = substream(cfg.seed, b as u64);
            let info = BitBlock::new((0..spec.payload_len()).map(|_| rng.random_range(0..=1)).collect()).unwrap();
            let cw = polar_encode(&spec, &info).unwrap();
            let x = map_symbols(&cw, &qam).unwrap();
            let (y, h) = cfg.apply(&x, &mut rng).unwrap();
            let csi = h.as_deref().map_or(Csi::Unit, Csi::PerSymbol);
            let llr = demap_llr(&y, csi, n0, &qam, DemapMethod::Exact).unwrap();
            let out = decoder.decode(&spec, &llr).unwrap();
            let e = out.hamming_distance(&info).unwrap();
            bit_err += e;
            blk_err += (e > 0) as usize;
        }
        let bits = blocks * spec.payload_len();
        println!("{ebno},{:.3e},{:.3e}", bit_err as f64 / bits as f64, blk_err as f64 / blocks as f64);
    }
}
