use proptest::prelude::*;
use rand::Rng;
use semlink::bridge::{bits_to_tensor, tensor_to_bits, PayloadFormat, SanitizePolicy, HEADER_BITS};
use semlink::rng::substream;
use semlink::types::{pack_bits, unpack_bits, BitBlock, HiddenTensor};
use semlink::Error;

fn golden(text: &str, block_bits: usize) -> Vec<BitBlock> {
    text.lines()
        .map(|line| {
            let bytes: Vec<u8> = (0..line.len())
                .step_by(2)
                .map(|i| u8::from_str_radix(&line[i..i + 2], 16).unwrap())
                .collect();
            unpack_bits(&bytes, block_bits).unwrap()
        })
        .collect()
}

#[test]
fn committed_frames_are_reproduced() {
    let cases = [
        (include_str!("data/frames/one_fp32_k512.hex"), 512, PayloadFormat::Fp32, 1, vec![1.0f32]),
        (
            include_str!("data/frames/mixed_fp32_k128.hex"),
            128,
            PayloadFormat::Fp32,
            2,
            vec![0.0, -0.0, 0.5, -1.0, 0.25, 0.001],
        ),
        (include_str!("data/frames/fixed16_k256.hex"), 256, PayloadFormat::Fixed16, 1, vec![-1.0, 0.0, 0.5, 1.0]),
    ];
    for (hex, k, format, rows, values) in cases {
        let cols = values.len() / rows;
        let t = HiddenTensor::new(rows, cols, values).unwrap();
        let (blocks, header) = tensor_to_bits(&t, k, format).unwrap();
        let want = golden(hex, k);
        assert_eq!(blocks, want, "{format:?} K={k}");
        assert_eq!(header.block_count, want.len());
        let back = bits_to_tensor(&want, format, SanitizePolicy::Raw).unwrap();
        if format == PayloadFormat::Fp32 {
            let bits = |t: &HiddenTensor| t.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&back), bits(&t));
        } else {
            for (a, b) in back.values().iter().zip(t.values()) {
                assert!((a - b).abs() <= 1.0 / 65535.0);
            }
        }
    }
}

#[test]
fn bit_30_of_one_is_stream_bit_185() {
    let t = HiddenTensor::new(1, 1, vec![1.0]).unwrap();
    let (mut blocks, _) = tensor_to_bits(&t, 512, PayloadFormat::Fp32).unwrap();
    let mut bits = blocks[0].clone().into_vec();
    // Little-endian bytes of 0x3F800000 are 00 00 80 3F; bit 30 is the
    // second bit of the fourth byte.
    let pos = HEADER_BITS + 24 + 1;
    assert_eq!(bits[pos], 0);
    bits[pos] = 1;
    blocks[0] = BitBlock::new(bits).unwrap();
    assert_eq!(pack_bits(&blocks[0])[20..24], [0x00, 0x00, 0x80, 0x7F]);
    let raw = bits_to_tensor(&blocks, PayloadFormat::Fp32, SanitizePolicy::Raw).unwrap();
    assert_eq!(raw.values()[0], f32::INFINITY);
    let clamped = bits_to_tensor(&blocks, PayloadFormat::Fp32, SanitizePolicy::Clamp).unwrap();
    assert_eq!(clamped.values()[0], 1.0);
}

fn flip(blocks: &[BitBlock], rate: f64, rng: &mut impl Rng) -> Vec<BitBlock> {
    blocks
        .iter()
        .map(|b| {
            let bits = b.as_slice().iter().map(|&x| x ^ (rng.random::<f64>() < rate) as u8).collect();
            BitBlock::new(bits).unwrap()
        })
        .collect()
}

#[test]
fn clamp_never_emits_non_finite_values() {
    let mut rng = substream(41, 0);
    let rates = [1e-4, 1e-3, 1e-2, 1e-1];
    let mut frame_errors = 0;
    let mut decoded = 0;
    for trial in 0..100_000 {
        let cols = rng.random_range(1..24);
        let values = (0..cols).map(|_| rng.random_range(-1.0f32..=1.0)).collect();
        let t = HiddenTensor::new(1, cols, values).unwrap();
        let (blocks, _) = tensor_to_bits(&t, 512, PayloadFormat::Fp32).unwrap();
        let noisy = flip(&blocks, rates[trial % rates.len()], &mut rng);
        match bits_to_tensor(&noisy, PayloadFormat::Fp32, SanitizePolicy::Clamp) {
            Ok(r) => {
                decoded += 1;
                assert!(
                    r.values().iter().all(|v| v.is_finite() && (-1.0..=1.0).contains(v)),
                    "trial {trial}: {:?}",
                    r.values()
                );
            }
            Err(Error::Frame(_)) => frame_errors += 1,
            Err(e) => panic!("trial {trial}: unexpected {e}"),
        }
    }
    assert!(decoded > 50_000, "only {decoded} frames parsed ({frame_errors} lost)");
}

#[test]
fn raw_policy_exposes_corruption() {
    // Raw mode must let at least some flips through as out-of-range values.
    let mut rng = substream(42, 0);
    let t = HiddenTensor::new(1, 64, vec![0.5; 64]).unwrap();
    let (blocks, _) = tensor_to_bits(&t, 512, PayloadFormat::Fp32).unwrap();
    let mut wild = 0;
    for _ in 0..2000 {
        let noisy = flip(&blocks, 1e-2, &mut rng);
        if let Ok(r) = bits_to_tensor(&noisy, PayloadFormat::Fp32, SanitizePolicy::Raw) {
            wild += r.values().iter().filter(|v| !v.is_finite() || v.abs() > 1.0).count();
        }
    }
    assert!(wild > 0);
}

fn tensor_strategy() -> impl Strategy<Value = HiddenTensor> {
    (1usize..5, 1usize..40).prop_flat_map(|(r, c)| {
        proptest::collection::vec(any::<u32>(), r * c)
            .prop_map(move |bits| HiddenTensor::new(r, c, bits.into_iter().map(f32::from_bits).collect()).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn fp32_round_trip_is_bit_exact(t in tensor_strategy(), k in prop::sample::select(vec![64usize, 96, 500, 512])) {
        let (blocks, header) = tensor_to_bits(&t, k, PayloadFormat::Fp32).unwrap();
        prop_assert!(blocks.iter().all(|b| b.len() == k));
        prop_assert_eq!(blocks.len() * k, HEADER_BITS + header.payload_bits as usize + header.pad_bits);
        let back = bits_to_tensor(&blocks, PayloadFormat::Fp32, SanitizePolicy::Raw).unwrap();
        prop_assert_eq!((back.rows(), back.cols()), (t.rows(), t.cols()));
        let bits = |t: &HiddenTensor| t.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back), bits(&t));
    }

    #[test]
    fn padding_never_leaks(t in tensor_strategy()) {
        let (mut blocks, header) = tensor_to_bits(&t, 512, PayloadFormat::Fp32).unwrap();
        let last = blocks.pop().unwrap();
        let mut bits = last.into_vec();
        let n = bits.len();
        for b in &mut bits[n - header.pad_bits..] {
            *b = 1;
        }
        blocks.push(BitBlock::new(bits).unwrap());
        let back = bits_to_tensor(&blocks, PayloadFormat::Fp32, SanitizePolicy::Raw).unwrap();
        let as_bits = |t: &HiddenTensor| t.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(as_bits(&back), as_bits(&t));
    }
}
