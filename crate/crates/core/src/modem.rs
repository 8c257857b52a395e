//! Gray-mapped 16-QAM mapping and soft demapping.
//!
//! A 4-bit group `[b0, b1, b2, b3]` maps to
//! `((1 - 2 b0)(2 - (1 - 2 b2)) + j (1 - 2 b1)(2 - (1 - 2 b3))) / sqrt(10)`:
//! even bits select the in-phase level, odd bits the quadrature level.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::polar::LLR_CLIP;
use crate::scalar::{log_add_exp, Real};
use crate::types::{BitBlock, LlrBlock, SymbolFrame};

/// Constellation points indexed by their bit label, `b0` in the most
/// significant position of the label.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstellationSpec<T> {
    bits_per_symbol: usize,
    points: Vec<Complex<T>>,
}

impl<T: Real> ConstellationSpec<T> {
    /// 16-QAM with unit average energy.
    pub fn qam16() -> Self {
        let scale = T::one() / T::lit(10.0).sqrt();
        let level = |sign_bit: usize, amp_bit: usize| {
            let sign = T::one() - T::lit(2.0 * sign_bit as f64);
            let amp = T::lit(2.0) - (T::one() - T::lit(2.0 * amp_bit as f64));
            sign * amp * scale
        };
        let points = (0..16usize)
            .map(|label| {
                let b = |i: usize| (label >> (3 - i)) & 1;
                Complex::new(level(b(0), b(2)), level(b(1), b(3)))
            })
            .collect();
        Self {
            bits_per_symbol: 4,
            points,
        }
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Complex<T>] {
        &self.points
    }

    /// Bit `i` (0 = first bit of the group) of point label `label`.
    #[inline]
    pub fn label_bit(&self, label: usize, i: usize) -> u8 {
        ((label >> (self.bits_per_symbol - 1 - i)) & 1) as u8
    }

    pub fn mean_energy(&self) -> T {
        let sum = self
            .points
            .iter()
            .fold(T::zero(), |acc, p| acc + p.norm_sqr());
        sum / T::lit(self.points.len() as f64)
    }
}

/// Soft demapping rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DemapMethod {
    /// Log-sum-exp over the constellation.
    #[default]
    Exact,
    /// Max-log approximation.
    MaxLog,
}

impl std::str::FromStr for DemapMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" => Ok(DemapMethod::Exact),
            "maxlog" | "max-log" => Ok(DemapMethod::MaxLog),
            other => Err(Error::Config(format!("unknown demapping method `{other}`"))),
        }
    }
}

/// Channel state seen by the demapper.
#[derive(Debug, Clone, Copy)]
pub enum Csi<'a, T> {
    /// `h = 1` for every symbol (AWGN).
    Unit,
    PerSymbol(&'a [Complex<T>]),
}

/// Maps consecutive bit groups onto constellation points.
pub fn map_symbols<T: Real>(bits: &BitBlock, spec: &ConstellationSpec<T>) -> Result<SymbolFrame<T>> {
    let m = spec.bits_per_symbol();
    if bits.len() % m != 0 {
        return Err(Error::Framing(format!(
            "{} bits do not fill whole {m}-bit symbols",
            bits.len()
        )));
    }
    let symbols = bits
        .as_slice()
        .chunks_exact(m)
        .map(|group| {
            let label = group.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
            spec.points[label]
        })
        .collect();
    Ok(SymbolFrame::new(symbols))
}

/// Per-bit LLRs `ln Σ_{b_i=0} exp(-|y-hx|²/N0) - ln Σ_{b_i=1} exp(-|y-hx|²/N0)`,
/// clipped to `±LLR_CLIP`.
pub fn demap_llr<T: Real>(
    received: &SymbolFrame<T>,
    csi: Csi<'_, T>,
    noise_var: T,
    spec: &ConstellationSpec<T>,
    method: DemapMethod,
) -> Result<LlrBlock<T>> {
    if !(noise_var > T::zero()) || !noise_var.is_finite() {
        return Err(Error::Parameter(format!(
            "noise variance must be positive and finite, got {noise_var}"
        )));
    }
    if let Csi::PerSymbol(h) = csi {
        if h.len() != received.len() {
            return Err(Error::Length {
                expected: received.len(),
                actual: h.len(),
            });
        }
    }
    let m = spec.bits_per_symbol();
    let clip = T::lit(LLR_CLIP);
    let inv_n0 = T::one() / noise_var;
    let mut metrics = vec![T::zero(); spec.order()];
    let mut weights = vec![T::zero(); spec.order()];
    let mut out = Vec::with_capacity(received.len() * m);

    for (idx, y) in received.as_slice().iter().enumerate() {
        if !y.re.is_finite() || !y.im.is_finite() {
            return Err(Error::Input(format!("non-finite received symbol at {idx}")));
        }
        let h = match csi {
            Csi::Unit => Complex::new(T::one(), T::zero()),
            Csi::PerSymbol(h) => h[idx],
        };
        if !h.re.is_finite() || !h.im.is_finite() {
            return Err(Error::Input(format!("non-finite channel coefficient at {idx}")));
        }
        let mut best = T::neg_infinity();
        for (metric, x) in metrics.iter_mut().zip(spec.points()) {
            *metric = -(*y - h * x).norm_sqr() * inv_n0;
            best = best.max(*metric);
        }
        match method {
            DemapMethod::MaxLog => {
                for i in 0..m {
                    let (mut zero, mut one) = (T::neg_infinity(), T::neg_infinity());
                    for (label, &metric) in metrics.iter().enumerate() {
                        if spec.label_bit(label, i) == 0 {
                            zero = zero.max(metric);
                        } else {
                            one = one.max(metric);
                        }
                    }
                    out.push((zero - one).max(-clip).min(clip));
                }
            }
            DemapMethod::Exact => {
                for (w, &metric) in weights.iter_mut().zip(&metrics) {
                    *w = (metric - best).exp();
                }
                // Below this a subset sum has lost too much precision to take its log.
                let floor = T::min_positive_value() * T::lit(1e6);
                for i in 0..m {
                    let (mut zero, mut one) = (T::zero(), T::zero());
                    for (label, &w) in weights.iter().enumerate() {
                        if spec.label_bit(label, i) == 0 {
                            zero += w;
                        } else {
                            one += w;
                        }
                    }
                    let llr = if zero > floor && one > floor {
                        zero.ln() - one.ln()
                    } else {
                        subset_log_sum(&metrics, spec, i, 0) - subset_log_sum(&metrics, spec, i, 1)
                    };
                    out.push(llr.max(-clip).min(clip));
                }
            }
        }
    }
    LlrBlock::new(out)
}

fn subset_log_sum<T: Real>(metrics: &[T], spec: &ConstellationSpec<T>, i: usize, bit: u8) -> T {
    metrics
        .iter()
        .enumerate()
        .filter(|(label, _)| spec.label_bit(*label, i) == bit)
        .fold(T::neg_infinity(), |acc, (_, &m)| log_add_exp(acc, m))
}
