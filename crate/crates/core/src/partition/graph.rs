use crate::model::Problem;
use crate::sparse::SparseMatrix;

/// Undirected simple graph in adjacency-array form: sorted neighbor lists,
/// symmetric, no self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    adjacency: Vec<usize>,
}

impl Graph {
    /// Builds a graph from an edge list. Duplicate edges are merged and
    /// self-loops ignored.
    pub fn from_edges<I>(n_nodes: usize, edges: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut lists: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
        for (a, b) in edges {
            assert!(a < n_nodes && b < n_nodes, "edge ({a}, {b}) out of range");
            if a != b {
                lists[a].push(b);
                lists[b].push(a);
            }
        }
        Self::from_lists(lists)
    }

    fn from_lists(mut lists: Vec<Vec<usize>>) -> Self {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        offsets.push(0);
        let mut adjacency = Vec::new();
        for list in &mut lists {
            list.sort_unstable();
            list.dedup();
            adjacency.extend_from_slice(list);
            offsets.push(adjacency.len());
        }
        Self { offsets, adjacency }
    }

    /// Graph of the off-diagonal pattern of a square matrix (symmetrized).
    pub fn from_matrix_pattern(a: &SparseMatrix) -> Self {
        let n = a.n_rows().min(a.n_cols());
        let edges = (0..n).flat_map(|i| {
            let (cols, _) = a.row(i);
            cols.iter().copied().filter(move |&c| c < n).map(move |c| (i, c))
        });
        Self::from_edges(n, edges)
    }

    pub fn n_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.len() / 2
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn average_degree(&self) -> f64 {
        if self.n_nodes() == 0 {
            0.0
        } else {
            self.adjacency.len() as f64 / self.n_nodes() as f64
        }
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.neighbors(a).binary_search(&b).is_ok()
    }

    /// Subgraph induced by `nodes` (ascending); node `k` of the result is
    /// `nodes[k]`.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Graph {
        debug_assert!(nodes.windows(2).all(|w| w[0] < w[1]));
        let mut local = vec![usize::MAX; self.n_nodes()];
        for (k, &v) in nodes.iter().enumerate() {
            local[v] = k;
        }
        let mut offsets = Vec::with_capacity(nodes.len() + 1);
        offsets.push(0);
        let mut adjacency = Vec::new();
        for &v in nodes {
            // global order is preserved, so the local lists stay sorted
            adjacency.extend(self.neighbors(v).iter().map(|&u| local[u]).filter(|&l| l != usize::MAX));
            offsets.push(adjacency.len());
        }
        Graph { offsets, adjacency }
    }

    /// Connected components, each sorted ascending, ordered by smallest node.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let n = self.n_nodes();
        let mut seen = vec![false; n];
        let mut components = Vec::new();
        let mut stack = Vec::new();
        for root in 0..n {
            if seen[root] {
                continue;
            }
            seen[root] = true;
            stack.push(root);
            let mut comp = Vec::new();
            while let Some(v) = stack.pop() {
                comp.push(v);
                for &u in self.neighbors(v) {
                    if !seen[u] {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
            comp.sort_unstable();
            components.push(comp);
        }
        components
    }

    /// Number of edges whose endpoints carry different labels.
    pub fn cut_size(&self, labels: &[usize]) -> usize {
        (0..self.n_nodes())
            .map(|v| self.neighbors(v).iter().filter(|&&u| u > v && labels[u] != labels[v]).count())
            .sum()
    }
}

/// One node per point, an edge between two points whenever some observation
/// involves both.
pub fn build_variable_graph(problem: &Problem) -> Graph {
    let mut edges = Vec::new();
    for obs in problem.observations() {
        let ids = obs.point_ids();
        for a in 0..ids.len() {
            for b in a + 1..ids.len() {
                edges.push((ids[a], ids[b]));
            }
        }
    }
    Graph::from_edges(problem.n_points(), edges)
}
