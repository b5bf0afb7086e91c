//! Undirected graphs and the symmetric normalized adjacency.
//!
//! The normalized adjacency `Â = D^{-1/2} A D^{-1/2}` is the shift operator
//! every spectral filter in this workspace is built on. Its eigenvalues lie
//! in [-1, 1], which is the domain all polynomial bases are defined on.

use ndarray::Array2;

use crate::error::{CoreError, Result};

/// An undirected graph with node features and class labels.
///
/// Edges are stored as unordered pairs `(u, v)` with `u <= v`, deduplicated
/// at construction. Self-loops are rejected unless the graph is built with
/// [`Graph::new_with_self_loops`].
#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    features: Array2<f64>,
    labels: Vec<usize>,
    num_classes: usize,
}

impl Graph {
    /// Build a graph, rejecting self-loops.
    pub fn new(
        n: usize,
        edges: Vec<(usize, usize)>,
        features: Array2<f64>,
        labels: Vec<usize>,
    ) -> Result<Self> {
        Self::build(n, edges, features, labels, false)
    }

    /// Build a graph in which self-loops `(u, u)` are permitted. A self-loop
    /// contributes 1 to the node's degree.
    pub fn new_with_self_loops(
        n: usize,
        edges: Vec<(usize, usize)>,
        features: Array2<f64>,
        labels: Vec<usize>,
    ) -> Result<Self> {
        Self::build(n, edges, features, labels, true)
    }

    fn build(
        n: usize,
        edges: Vec<(usize, usize)>,
        features: Array2<f64>,
        labels: Vec<usize>,
        allow_self_loops: bool,
    ) -> Result<Self> {
        if n == 0 {
            return Err(CoreError::EmptyGraph);
        }
        if features.nrows() != n {
            return Err(CoreError::FeatureRowMismatch {
                rows: features.nrows(),
                n,
            });
        }
        if labels.len() != n {
            return Err(CoreError::LabelLenMismatch {
                len: labels.len(),
                n,
            });
        }
        let num_classes = labels.iter().copied().max().map_or(1, |m| m + 1);

        let mut normalized: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(CoreError::EdgeOutOfRange(u, v, n));
            }
            if u == v && !allow_self_loops {
                return Err(CoreError::SelfLoop(u));
            }
            normalized.push((u.min(v), u.max(v)));
        }
        // Duplicate pairs (including the (v, u) mirror of an existing (u, v))
        // collapse to a single undirected edge.
        normalized.sort_unstable();
        normalized.dedup();

        Ok(Self {
            n,
            edges: normalized,
            features,
            labels,
            num_classes,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Unordered edge pairs with `u <= v`, sorted, deduplicated.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Number of classes, taken as `max(label) + 1`.
    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Node degrees. A self-loop contributes 1.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.n];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            if u != v {
                deg[v] += 1;
            }
        }
        deg
    }
}

/// Symmetric normalized adjacency `Â = D^{-1/2} A D^{-1/2}`.
///
/// Entry `(i, j)` is `1/sqrt(d_i d_j)` for each edge. Isolated nodes keep an
/// all-zero row and column (their `D^{-1/2}` entry is defined as 0).
pub fn build_normalized_adjacency(graph: &Graph) -> Result<Array2<f64>> {
    let n = graph.num_nodes();
    if n == 0 {
        return Err(CoreError::EmptyGraph);
    }
    let deg = graph.degrees();
    let mut ahat = Array2::<f64>::zeros((n, n));
    for &(u, v) in graph.edges() {
        // Both endpoints of an edge have degree ≥ 1.
        let w = 1.0 / (deg[u] as f64 * deg[v] as f64).sqrt();
        ahat[(u, v)] = w;
        ahat[(v, u)] = w;
    }
    Ok(ahat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn features(n: usize, d: usize) -> Array2<f64> {
        Array2::zeros((n, d))
    }

    fn path3() -> Graph {
        Graph::new(3, vec![(0, 1), (1, 2)], features(3, 2), vec![0, 1, 0]).unwrap()
    }

    #[test]
    fn path_graph_normalized_adjacency() {
        let ahat = build_normalized_adjacency(&path3()).unwrap();
        let s = 1.0 / 2.0_f64.sqrt();
        assert_eq!(ahat[(0, 1)], s);
        assert_eq!(ahat[(1, 2)], s);
        assert_eq!(ahat[(1, 0)], s);
        for i in 0..3 {
            assert_eq!(ahat[(i, i)], 0.0);
        }
        assert_eq!(ahat[(0, 2)], 0.0);
    }

    #[test]
    fn single_isolated_node_gives_zero_matrix() {
        let g = Graph::new(1, vec![], features(1, 1), vec![0]).unwrap();
        let ahat = build_normalized_adjacency(&g).unwrap();
        assert_eq!(ahat[(0, 0)], 0.0);
    }

    #[test]
    fn triangle_entries_are_half() {
        let g = Graph::new(3, vec![(0, 1), (1, 2), (0, 2)], features(3, 1), vec![0; 3]).unwrap();
        let ahat = build_normalized_adjacency(&g).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 0.0 } else { 0.5 };
                assert_eq!(ahat[(i, j)], expect, "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn duplicate_and_mirrored_edges_collapse() {
        let g = Graph::new(
            3,
            vec![(0, 1), (1, 0), (0, 1), (2, 1)],
            features(3, 1),
            vec![0, 0, 0],
        )
        .unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn rejects_out_of_range_and_self_loops() {
        assert!(matches!(
            Graph::new(3, vec![(0, 5)], features(3, 1), vec![0; 3]),
            Err(CoreError::EdgeOutOfRange(0, 5, 3))
        ));
        assert!(matches!(
            Graph::new(3, vec![(1, 1)], features(3, 1), vec![0; 3]),
            Err(CoreError::SelfLoop(1))
        ));
        // Explicitly enabled self-loops add to the degree.
        let g = Graph::new_with_self_loops(2, vec![(0, 0), (0, 1)], features(2, 1), vec![0, 0])
            .unwrap();
        assert_eq!(g.degrees(), vec![2, 1]);
    }

    #[test]
    fn rejects_empty_graph_and_row_mismatch() {
        assert!(matches!(
            Graph::new(0, vec![], features(0, 1), vec![]),
            Err(CoreError::EmptyGraph)
        ));
        assert!(matches!(
            Graph::new(3, vec![], features(2, 1), vec![0; 3]),
            Err(CoreError::FeatureRowMismatch { rows: 2, n: 3 })
        ));
    }
}
