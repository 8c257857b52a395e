//! Flat-fading and AWGN channel models, `y = h x + n`, and Eb/N0 bookkeeping.
//!
//! Noise is circularly-symmetric complex Gaussian with total variance `N0`
//! (`N0 / 2` per real dimension). Fading coefficients are `h ~ CN(0, 1)`,
//! drawn per symbol by default or held constant over blocks of symbols.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::types::SymbolFrame;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChannelKind {
    Awgn,
    Rayleigh,
}

impl ChannelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ChannelKind::Awgn => "awgn",
            ChannelKind::Rayleigh => "rayleigh",
        }
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChannelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "awgn" => Ok(ChannelKind::Awgn),
            "rayleigh" => Ok(ChannelKind::Rayleigh),
            other => Err(Error::Config(format!("unknown channel kind `{other}`"))),
        }
    }
}

/// One channel realization setting.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    pub kind: ChannelKind,
    pub ebno_db: f64,
    /// Information bits per coded bit.
    pub code_rate: f64,
    pub bits_per_symbol: usize,
    /// Symbols sharing one fading coefficient; 1 is fast fading.
    pub fading_block: usize,
    pub seed: u64,
    /// Substream of `seed` used for this realization.
    pub stream: u64,
}

impl ChannelConfig {
    /// Table defaults: rate 1/2, 16-QAM, per-symbol fading.
    pub fn new(kind: ChannelKind, ebno_db: f64, seed: u64) -> Self {
        Self {
            kind,
            ebno_db,
            code_rate: 0.5,
            bits_per_symbol: 4,
            fading_block: 1,
            seed,
            stream: 0,
        }
    }

    pub fn noise_var(&self) -> Result<f64> {
        ebno_to_noise_var(self.ebno_db, self.code_rate, self.bits_per_symbol)
    }

    /// Passes `frame` through the configured channel, returning the received
    /// frame and the per-symbol coefficients (all ones for AWGN).
    pub fn apply<T: Real, R: Rng + ?Sized>(
        &self,
        frame: &SymbolFrame<T>,
        rng: &mut R,
    ) -> Result<(SymbolFrame<T>, Option<Vec<Complex<T>>>)> {
        let noise_var = T::lit(self.noise_var()?);
        match self.kind {
            ChannelKind::Awgn => Ok((apply_awgn(frame, noise_var, rng), None)),
            ChannelKind::Rayleigh => {
                let (y, h) = apply_block_rayleigh(frame, noise_var, self.fading_block, rng)?;
                Ok((y, Some(h)))
            }
        }
    }
}

/// Noise variance per complex symbol for a unit-energy constellation:
/// `Es/N0 = 10^(Eb/N0 dB / 10) · rate · bits_per_symbol`, `N0 = 1 / (Es/N0)`.
/// `+inf` dB gives a noiseless channel.
pub fn ebno_to_noise_var(ebno_db: f64, code_rate: f64, bits_per_symbol: usize) -> Result<f64> {
    if !(code_rate > 0.0 && code_rate <= 1.0) {
        return Err(Error::Parameter(format!(
            "code rate must lie in (0, 1], got {code_rate}"
        )));
    }
    if bits_per_symbol == 0 {
        return Err(Error::Parameter("bits per symbol must be at least 1".into()));
    }
    if ebno_db == f64::INFINITY {
        return Ok(0.0);
    }
    if !ebno_db.is_finite() {
        return Err(Error::Parameter(format!("Eb/N0 must be finite or +inf, got {ebno_db}")));
    }
    let esno = 10f64.powf(ebno_db / 10.0) * code_rate * bits_per_symbol as f64;
    Ok(1.0 / esno)
}

fn complex_gaussian<T: Real, R: Rng + ?Sized>(rng: &mut R, std_per_dim: T) -> Complex<T> {
    let re = T::standard_normal(rng);
    let im = T::standard_normal(rng);
    Complex::new(re * std_per_dim, im * std_per_dim)
}

/// `y = x + n` with `n ~ CN(0, noise_var)`. `noise_var = 0` returns `frame`
/// unchanged without consuming randomness.
pub fn apply_awgn<T: Real, R: Rng + ?Sized>(
    frame: &SymbolFrame<T>,
    noise_var: T,
    rng: &mut R,
) -> SymbolFrame<T> {
    apply_gain_and_noise(frame, noise_var, rng, |_, _| Complex::new(T::one(), T::zero())).0
}

/// Fast flat Rayleigh fading: independent `h_i ~ CN(0, 1)` per symbol.
pub fn apply_rayleigh<T: Real, R: Rng + ?Sized>(
    frame: &SymbolFrame<T>,
    noise_var: T,
    rng: &mut R,
) -> (SymbolFrame<T>, Vec<Complex<T>>) {
    apply_block_rayleigh(frame, noise_var, 1, rng).expect("block length 1 is valid")
}

/// Block flat fading: one `h ~ CN(0, 1)` per `block_len` consecutive symbols.
pub fn apply_block_rayleigh<T: Real, R: Rng + ?Sized>(
    frame: &SymbolFrame<T>,
    noise_var: T,
    block_len: usize,
    rng: &mut R,
) -> Result<(SymbolFrame<T>, Vec<Complex<T>>)> {
    if block_len == 0 {
        return Err(Error::Parameter("fading block length must be >= 1".into()));
    }
    let std = T::FRAC_1_SQRT_2();
    let mut current = Complex::new(T::one(), T::zero());
    Ok(apply_gain_and_noise(frame, noise_var, rng, |i, rng| {
        if i % block_len == 0 {
            current = complex_gaussian(rng, std);
        }
        current
    }))
}

/// Fixed coefficient `h` for every symbol. Used to check the fading path
/// against known gains.
pub fn apply_fixed_gain<T: Real, R: Rng + ?Sized>(
    frame: &SymbolFrame<T>,
    noise_var: T,
    h: Complex<T>,
    rng: &mut R,
) -> (SymbolFrame<T>, Vec<Complex<T>>) {
    apply_gain_and_noise(frame, noise_var, rng, |_, _| h)
}

fn apply_gain_and_noise<T: Real, R: Rng + ?Sized>(
    frame: &SymbolFrame<T>,
    noise_var: T,
    rng: &mut R,
    mut gain: impl FnMut(usize, &mut R) -> Complex<T>,
) -> (SymbolFrame<T>, Vec<Complex<T>>) {
    let std = (noise_var / T::lit(2.0)).sqrt();
    let mut coeffs = Vec::with_capacity(frame.len());
    let received = frame
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let h = gain(i, rng);
            coeffs.push(h);
            let faded = h * x;
            if noise_var > T::zero() {
                faded + complex_gaussian(rng, std)
            } else {
                faded
            }
        })
        .collect();
    (SymbolFrame::new(received), coeffs)
}
