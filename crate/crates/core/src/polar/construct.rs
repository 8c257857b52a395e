use super::nr_sequence::NR_RELIABILITY;
use super::PolarCodeSpec;
use crate::error::{Error, Result};

/// Where the synthetic-channel reliability ordering comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ReliabilitySource {
    /// The NR universal sequence, nested for N < 1024.
    Nr5g,
    /// Gaussian approximation of density evolution at a design Es/N0 (BPSK, dB).
    GaussianApproximation { design_snr_db: f64 },
    /// Explicit permutation of `0..N`, least reliable first.
    Custom(Vec<usize>),
}

impl ReliabilitySource {
    /// Indices `0..n` ordered from least to most reliable.
    pub fn ordering(&self, n: usize) -> Result<Vec<usize>> {
        match self {
            ReliabilitySource::Nr5g => {
                if n > NR_RELIABILITY.len() {
                    return Err(Error::Parameter(format!(
                        "NR reliability sequence covers N <= 1024, got {n}"
                    )));
                }
                Ok(NR_RELIABILITY
                    .iter()
                    .map(|&i| i as usize)
                    .filter(|&i| i < n)
                    .collect())
            }
            ReliabilitySource::GaussianApproximation { design_snr_db } => {
                let means = gaussian_approximation_means(n, *design_snr_db)?;
                let mut order: Vec<usize> = (0..n).collect();
                // Stable sort keeps lower indices first among equal means.
                order.sort_by(|&a, &b| means[a].total_cmp(&means[b]));
                Ok(order)
            }
            ReliabilitySource::Custom(order) => {
                let mut seen = vec![false; n];
                if order.len() != n {
                    return Err(Error::Parameter(format!(
                        "ordering has {} entries, expected {n}",
                        order.len()
                    )));
                }
                for &i in order {
                    if i >= n || std::mem::replace(&mut seen[i], true) {
                        return Err(Error::Parameter(format!(
                            "ordering is not a permutation of 0..{n} (entry {i})"
                        )));
                    }
                }
                Ok(order.clone())
            }
        }
    }
}

/// Builds the (N, K) code freezing the N-K least reliable positions.
pub fn construct_code(
    n_codeword: usize,
    k_info: usize,
    source: &ReliabilitySource,
) -> Result<PolarCodeSpec> {
    if !n_codeword.is_power_of_two() || n_codeword < 2 {
        return Err(Error::Parameter(format!(
            "codeword length must be a power of two >= 2, got {n_codeword}"
        )));
    }
    if k_info == 0 || k_info >= n_codeword {
        return Err(Error::Parameter(format!(
            "need 0 < K < N, got K = {k_info}, N = {n_codeword}"
        )));
    }
    let order = source.ordering(n_codeword)?;
    let mut frozen_mask = vec![false; n_codeword];
    for &i in &order[..n_codeword - k_info] {
        frozen_mask[i] = true;
    }
    let frozen_set = (0..n_codeword).filter(|&i| frozen_mask[i]).collect();
    let info_set = (0..n_codeword).filter(|&i| !frozen_mask[i]).collect();
    Ok(PolarCodeSpec {
        n_codeword,
        k_info,
        crc_width: 0,
        frozen_set,
        info_set,
        frozen_mask,
    })
}

// Chung's approximation of E[tanh(L/2)] deficit for L ~ N(m, 2m).
fn phi(m: f64) -> f64 {
    if m <= 0.0 {
        1.0
    } else if m < 10.0 {
        (-0.4527 * m.powf(0.86) + 0.0218).exp()
    } else {
        (std::f64::consts::PI / m).sqrt() * (-m / 4.0).exp() * (1.0 - 10.0 / (7.0 * m))
    }
}

fn phi_inverse(y: f64) -> f64 {
    if y >= 1.0 {
        return 0.0;
    }
    // phi is decreasing; widen the bracket until it contains the root.
    let mut hi = 1.0;
    while phi(hi) > y {
        hi *= 2.0;
        if hi > 1e12 {
            return hi;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) > y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Mean LLR of every synthetic channel under the Gaussian approximation.
///
/// Larger means are more reliable. Entry `i` corresponds to `u_i` in the
/// natural-order encoder used by [`super::polar_encode`].
pub fn gaussian_approximation_means(n: usize, design_snr_db: f64) -> Result<Vec<f64>> {
    if !n.is_power_of_two() {
        return Err(Error::Parameter(format!("N must be a power of two, got {n}")));
    }
    let snr = 10f64.powf(design_snr_db / 10.0);
    let mut means = vec![4.0 * snr];
    while means.len() < n {
        means = means
            .iter()
            .flat_map(|&m| {
                let p = phi(m);
                // For vanishing phi, phi(worse) ~ 2 phi(m) ~ exp(-worse / 4).
                let worse = if p < 1e-250 {
                    m - 4.0 * std::f64::consts::LN_2
                } else {
                    phi_inverse(p * (2.0 - p))
                };
                [worse, 2.0 * m]
            })
            .collect();
    }
    Ok(means)
}
