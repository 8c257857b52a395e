use super::crc::crc_check;
use super::{bit_node, check_node, clipped_llrs, extract_info, strip_crc, PolarCodeSpec};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::types::{BitBlock, LlrBlock};

/// Accepted list sizes.
pub const LIST_SIZES: [usize; 6] = [1, 2, 4, 8, 16, 32];

/// One candidate decoding path.
///
/// `alpha[d]` holds the LLRs of the active node at depth `d` (length `N >> d`,
/// `alpha[0]` unused since the channel LLRs are shared). `left_sums[d]` holds
/// the re-encoded bits of the most recently completed left child at depth `d`.
#[derive(Clone)]
struct Path<T> {
    alpha: Vec<Vec<T>>,
    left_sums: Vec<Vec<u8>>,
    u: Vec<u8>,
    metric: T,
}

impl<T: Real> Path<T> {
    fn new(n: usize, depth: usize) -> Self {
        Self {
            alpha: (0..=depth).map(|d| vec![T::zero(); n >> d]).collect(),
            left_sums: (0..=depth).map(|d| vec![0u8; n >> d]).collect(),
            u: vec![0; n],
            metric: T::zero(),
        }
    }

    /// Brings `alpha[depth]` up to date for leaf `i` and returns its LLR.
    fn leaf_llr(&mut self, i: usize, depth: usize, channel: &[T]) -> T {
        let first = if i == 0 {
            1
        } else {
            depth - i.trailing_zeros() as usize
        };
        for d in first..=depth {
            let (upper, lower) = self.alpha.split_at_mut(d);
            let parent: &[T] = if d == 1 { channel } else { &upper[d - 1] };
            let child = &mut lower[0];
            let half = child.len();
            if i != 0 && d == first {
                let sums = &self.left_sums[d];
                for j in 0..half {
                    child[j] = bit_node(parent[j], parent[j + half], sums[j]);
                }
            } else {
                for j in 0..half {
                    child[j] = check_node(parent[j], parent[j + half]);
                }
            }
        }
        self.alpha[depth][0]
    }

    /// Records bit `i` and propagates partial sums towards the root.
    fn set_bit(&mut self, i: usize, bit: u8, depth: usize) {
        self.u[i] = bit;
        let mut sums = vec![bit];
        let mut d = depth;
        while d > 0 {
            if (i >> (depth - d)) & 1 == 0 {
                self.left_sums[d].copy_from_slice(&sums);
                return;
            }
            let left = &self.left_sums[d];
            let mut merged = Vec::with_capacity(2 * sums.len());
            merged.extend(left.iter().zip(&sums).map(|(a, b)| a ^ b));
            merged.extend_from_slice(&sums);
            sums = merged;
            d -= 1;
        }
    }
}

/// Path-metric increment for deciding `bit` against leaf LLR `llr`.
#[inline]
fn penalty<T: Real>(llr: T, bit: u8) -> T {
    if bit == 0 {
        (-llr).softplus()
    } else {
        llr.softplus()
    }
}

/// Successive-cancellation list decoding.
///
/// Keeps the `list_size` lowest-metric paths. When the code carries a CRC the
/// best path passing it is returned, otherwise the best-metric path. With
/// `list_size == 1` the result equals [`super::polar_decode_sc`].
pub fn polar_decode_scl<T: Real>(
    spec: &PolarCodeSpec,
    llrs: &LlrBlock<T>,
    list_size: usize,
) -> Result<BitBlock> {
    if !LIST_SIZES.contains(&list_size) {
        return Err(Error::Parameter(format!(
            "list size {list_size} not in {LIST_SIZES:?}"
        )));
    }
    let channel = clipped_llrs(spec, llrs)?;
    let n = spec.n();
    let depth = n.trailing_zeros() as usize;
    let mut paths = vec![Path::<T>::new(n, depth)];

    for i in 0..n {
        let leaf: Vec<T> = paths
            .iter_mut()
            .map(|p| p.leaf_llr(i, depth, &channel))
            .collect();

        if spec.is_frozen(i) {
            for (p, &llr) in paths.iter_mut().zip(&leaf) {
                p.metric += penalty(llr, 0);
                p.set_bit(i, 0, depth);
            }
            continue;
        }

        // (metric, parent, bit); ties resolve to the lower parent then bit 0.
        let mut forks: Vec<(T, usize, u8)> = Vec::with_capacity(2 * paths.len());
        for (pi, (p, &llr)) in paths.iter().zip(&leaf).enumerate() {
            for bit in [0u8, 1] {
                forks.push((p.metric + penalty(llr, bit), pi, bit));
            }
        }
        forks.sort_by(|a, b| a.0.total_cmp(&b.0));
        forks.truncate(list_size);

        let mut uses = vec![0usize; paths.len()];
        for &(_, pi, _) in &forks {
            uses[pi] += 1;
        }
        let mut parents: Vec<Option<Path<T>>> = paths.into_iter().map(Some).collect();
        paths = Vec::with_capacity(forks.len());
        for (metric, pi, bit) in forks {
            uses[pi] -= 1;
            let mut child = if uses[pi] == 0 {
                parents[pi].take().expect("parent consumed once")
            } else {
                parents[pi].clone().expect("parent still available")
            };
            child.metric = metric;
            child.set_bit(i, bit, depth);
            paths.push(child);
        }
    }

    // `paths` is already in ascending metric order.
    let candidates = paths.iter().map(|p| extract_info(spec, &p.u));
    let mut best = None;
    for info in candidates {
        if spec.crc_width() == 0 || crc_check(&info, spec.crc_width())? {
            best = Some(info);
            break;
        }
        best.get_or_insert(info);
    }
    let info = best.expect("at least one surviving path");
    Ok(strip_crc(spec, info))
}
