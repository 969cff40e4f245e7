use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::bisect::{bisect, SizeBounds};
use super::Graph;

/// Subgraphs at or below this size are ordered without further dissection.
const LEAF_SIZE: usize = 48;

/// Nested-dissection fill-reducing ordering. Returns `perm` with
/// `perm[new] = old`.
///
/// Each connected component is ordered on its own with a fresh generator
/// seeded by `seed`, so a component gets the same relative ordering whether
/// or not it is embedded in a larger graph.
pub fn nested_dissection(g: &Graph, seed: u64) -> Vec<usize> {
    let mut perm = Vec::with_capacity(g.n_nodes());
    for comp in g.connected_components() {
        let sub = g.induced_subgraph(&comp);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let local = dissect(&sub, &mut rng);
        perm.extend(local.into_iter().map(|l| comp[l]));
    }
    perm
}

fn dissect(g: &Graph, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = g.n_nodes();
    if n <= LEAF_SIZE {
        return minimum_degree(g);
    }
    let half = n / 2;
    let bounds = SizeBounds {
        target: half,
        min: n * 2 / 5,
        max: n * 3 / 5,
    };
    let (side, _) = bisect(g, bounds, rng);

    // vertex separator: the smaller of the two boundary layers
    let boundary = |s: u8| -> Vec<usize> {
        (0..n)
            .filter(|&v| side[v] == s && g.neighbors(v).iter().any(|&u| side[u] != s))
            .collect()
    };
    let (b0, b1) = (boundary(0), boundary(1));
    let sep = if b1.len() < b0.len() { b1 } else { b0 };
    if 3 * sep.len() > n {
        // no useful separator; the graph is close to dense
        return if n <= 4 * LEAF_SIZE { minimum_degree(g) } else { (0..n).collect() };
    }
    let mut in_sep = vec![false; n];
    for &v in &sep {
        in_sep[v] = true;
    }
    let part = |s: u8| -> Vec<usize> { (0..n).filter(|&v| side[v] == s && !in_sep[v]).collect() };
    let (a, b) = (part(0), part(1));

    let mut order = Vec::with_capacity(n);
    for nodes in [&a, &b] {
        let sub = g.induced_subgraph(nodes);
        order.extend(dissect(&sub, rng).into_iter().map(|l| nodes[l]));
    }
    order.extend(sep);
    order
}

/// Exact minimum-degree elimination on a small graph, lowest index on ties.
fn minimum_degree(g: &Graph) -> Vec<usize> {
    let n = g.n_nodes();
    let mut adj: Vec<Vec<bool>> = vec![vec![false; n]; n];
    for v in 0..n {
        for &u in g.neighbors(v) {
            adj[v][u] = true;
        }
    }
    let mut eliminated = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !eliminated[v])
            .min_by_key(|&v| (adj[v].iter().zip(&eliminated).filter(|(&a, &e)| a && !e).count(), v))
            .expect("a node remains");
        eliminated[v] = true;
        order.push(v);
        let nbrs: Vec<usize> = (0..n).filter(|&u| adj[v][u] && !eliminated[u]).collect();
        for &a in &nbrs {
            for &b in &nbrs {
                if a != b {
                    adj[a][b] = true;
                }
            }
        }
    }
    order
}
