//! Two-way graph partitioning: breadth-first region growing from a
//! pseudo-peripheral node, then boundary Fiduccia–Mattheyses passes.

use std::collections::{BinaryHeap, VecDeque};

use rand::Rng;

use super::Graph;

pub const MAX_REFINE_PASSES: usize = 10;

/// Consecutive non-improving moves tolerated inside one refinement pass.
const HILL_CLIMB_LIMIT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeBounds {
    /// Desired size of side 0.
    pub target: usize,
    pub min: usize,
    pub max: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BisectionTrace {
    pub initial_cut: usize,
    /// Cut after every refinement pass.
    pub pass_cuts: Vec<usize>,
}

/// Splits `g` into side 0 (about `bounds.target` nodes) and side 1.
pub fn bisect<R: Rng>(g: &Graph, bounds: SizeBounds, rng: &mut R) -> (Vec<u8>, BisectionTrace) {
    let n = g.n_nodes();
    debug_assert!(bounds.min <= bounds.target && bounds.target <= bounds.max && bounds.max <= n);
    let mut side = vec![1u8; n];
    if n == 0 || bounds.target == 0 {
        return (side, BisectionTrace::default());
    }
    if bounds.target == n {
        side.fill(0);
        return (side, BisectionTrace::default());
    }
    let start = pseudo_peripheral(g, rng.random_range(0..n));
    grow_region(g, start, bounds.target, &mut side);
    let initial_cut = cut_of(g, &side);
    let pass_cuts = refine(g, &mut side, bounds, MAX_REFINE_PASSES);
    (
        side,
        BisectionTrace {
            initial_cut,
            pass_cuts,
        },
    )
}

fn bfs_levels(g: &Graph, root: usize, level: &mut [usize]) -> usize {
    level.fill(usize::MAX);
    let mut queue = VecDeque::new();
    level[root] = 0;
    queue.push_back(root);
    let mut last = root;
    while let Some(v) = queue.pop_front() {
        last = v;
        for &u in g.neighbors(v) {
            if level[u] == usize::MAX {
                level[u] = level[v] + 1;
                queue.push_back(u);
            }
        }
    }
    last
}

/// Repeated BFS sweeps: jump to the last node reached until the
/// eccentricity stops growing.
fn pseudo_peripheral(g: &Graph, seed_node: usize) -> usize {
    let mut level = vec![0; g.n_nodes()];
    let mut node = seed_node;
    let mut far = bfs_levels(g, node, &mut level);
    let mut ecc = level[far];
    for _ in 0..8 {
        let next_far = bfs_levels(g, far, &mut level);
        let next_ecc = level[next_far];
        if next_ecc <= ecc {
            break;
        }
        node = far;
        far = next_far;
        ecc = next_ecc;
    }
    // `far` is at least as peripheral as `node`
    if ecc > 0 {
        far
    } else {
        node
    }
}

/// Breadth-first assignment of `target` nodes to side 0, restarting from the
/// lowest unvisited node whenever a component is exhausted.
fn grow_region(g: &Graph, start: usize, target: usize, side: &mut [u8]) {
    let n = g.n_nodes();
    let mut visited = vec![false; n];
    let mut queue = VecDeque::new();
    let mut taken = 0;
    let mut next_root = 0;
    visited[start] = true;
    queue.push_back(start);
    while taken < target {
        let v = match queue.pop_front() {
            Some(v) => v,
            None => {
                while visited[next_root] {
                    next_root += 1;
                }
                visited[next_root] = true;
                next_root
            }
        };
        side[v] = 0;
        taken += 1;
        for &u in g.neighbors(v) {
            if !visited[u] {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
}

pub(crate) fn cut_of(g: &Graph, side: &[u8]) -> usize {
    (0..g.n_nodes())
        .map(|v| g.neighbors(v).iter().filter(|&&u| u > v && side[u] != side[v]).count())
        .sum()
}

/// Boundary FM passes. Each pass keeps its best prefix of moves, so the cut
/// never increases. Returns the cut after each pass.
pub(crate) fn refine(g: &Graph, side: &mut [u8], bounds: SizeBounds, max_passes: usize) -> Vec<usize> {
    let n = g.n_nodes();
    let mut cut = cut_of(g, side) as i64;
    let mut size0 = side.iter().filter(|&&s| s == 0).count();
    let mut gain = vec![0i64; n];
    let mut locked = vec![false; n];
    let mut cuts = Vec::new();
    let imbalance = |s0: usize| (s0 as i64 - bounds.target as i64).abs();

    for _ in 0..max_passes {
        let start_cut = cut;
        let mut heaps = [BinaryHeap::new(), BinaryHeap::new()];
        for v in 0..n {
            locked[v] = false;
            let (mut ext, mut int) = (0i64, 0i64);
            for &u in g.neighbors(v) {
                if side[u] == side[v] {
                    int += 1;
                } else {
                    ext += 1;
                }
            }
            gain[v] = ext - int;
            if ext > 0 {
                heaps[side[v] as usize].push((gain[v], v));
            }
        }

        let mut moves: Vec<usize> = Vec::new();
        let mut best = (cut, imbalance(size0));
        let mut best_len = 0;
        loop {
            let mut top = [None, None];
            for s in 0..2 {
                while let Some(&(gv, v)) = heaps[s].peek() {
                    if locked[v] || gain[v] != gv || side[v] as usize != s {
                        heaps[s].pop();
                    } else {
                        top[s] = Some((gv, v));
                        break;
                    }
                }
            }
            let can0 = top[0].is_some() && size0 > bounds.min;
            let can1 = top[1].is_some() && size0 < bounds.max;
            let from = match (can0, can1) {
                (false, false) => break,
                (true, false) => 0,
                (false, true) => 1,
                (true, true) => {
                    let (g0, g1) = (top[0].unwrap().0, top[1].unwrap().0);
                    if g0 != g1 {
                        usize::from(g1 > g0)
                    } else {
                        usize::from(size0 < bounds.target)
                    }
                }
            };
            let (gv, v) = top[from].unwrap();
            heaps[from].pop();
            let to = 1 - from as u8;
            side[v] = to;
            locked[v] = true;
            cut -= gv;
            if to == 0 {
                size0 += 1;
            } else {
                size0 -= 1;
            }
            for &u in g.neighbors(v) {
                if side[u] == to {
                    gain[u] -= 2;
                } else {
                    gain[u] += 2;
                }
                if !locked[u] {
                    heaps[side[u] as usize].push((gain[u], u));
                }
            }
            moves.push(v);
            let score = (cut, imbalance(size0));
            if score < best {
                best = score;
                best_len = moves.len();
            }
            if moves.len() - best_len > HILL_CLIMB_LIMIT {
                break;
            }
        }
        for &v in moves[best_len..].iter().rev() {
            side[v] = 1 - side[v];
            if side[v] == 0 {
                size0 += 1;
            } else {
                size0 -= 1;
            }
        }
        cut = best.0;
        debug_assert_eq!(cut as usize, cut_of(g, side));
        cuts.push(cut as usize);
        if cut >= start_cut {
            break;
        }
    }
    cuts
}
