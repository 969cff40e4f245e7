use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::bisect::{bisect, SizeBounds};
use super::{Graph, PartitionError};

/// Allowed subset size range for `n` nodes in `k` parts: each part within a
/// factor 1.10 of `n / k`, widened to `[floor(n/k), ceil(n/k)]` when rounding
/// makes the 1.10 window empty.
pub fn balance_bounds(n: usize, k: usize) -> (usize, usize) {
    let ideal = n as f64 / k as f64;
    let hi = ((1.10 * ideal).floor() as usize).max(n.div_ceil(k));
    let lo = ((ideal / 1.10).ceil() as usize).min(n / k).max(1);
    (lo, hi)
}

/// Recursive-bisection k-way partition. Returns the subset of every node.
pub fn partition_kway(g: &Graph, k: usize, seed: u64) -> Result<Vec<usize>, PartitionError> {
    let n = g.n_nodes();
    if k == 0 {
        return Err(PartitionError::ZeroParts);
    }
    if k > n {
        return Err(PartitionError::TooManyParts { k, nodes: n });
    }
    let mut labels = vec![0usize; n];
    if k == 1 {
        return Ok(labels);
    }
    let (lo, hi) = balance_bounds(n, k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes: Vec<usize> = (0..n).collect();
    split(g, &nodes, k, 0, (lo, hi), &mut rng, &mut labels);
    Ok(labels)
}

fn split(
    g: &Graph,
    nodes: &[usize],
    k: usize,
    first_label: usize,
    (lo, hi): (usize, usize),
    rng: &mut ChaCha8Rng,
    labels: &mut [usize],
) {
    if k == 1 {
        for &v in nodes {
            labels[v] = first_label;
        }
        return;
    }
    let s = nodes.len();
    let k0 = k / 2;
    let k1 = k - k0;
    // side 0 must leave side 1 a feasible size for its k1 parts, and vice versa
    let min = (k0 * lo).max(s.saturating_sub(k1 * hi));
    let max = (k0 * hi).min(s - k1 * lo);
    let target = ((s * k0 + k / 2) / k).clamp(min, max);
    let sub = g.induced_subgraph(nodes);
    let (side, _) = bisect(&sub, SizeBounds { target, min, max }, rng);
    let (mut a, mut b) = (Vec::with_capacity(target), Vec::with_capacity(s - target));
    for (local, &v) in nodes.iter().enumerate() {
        if side[local] == 0 {
            a.push(v);
        } else {
            b.push(v);
        }
    }
    split(g, &a, k0, first_label, (lo, hi), rng, labels);
    split(g, &b, k1, first_label + k0, (lo, hi), rng, labels);
}
