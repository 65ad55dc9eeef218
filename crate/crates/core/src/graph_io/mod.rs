//! Graph data model, TU Dortmund ingestion and synthetic datasets.

mod synth;
mod tu;

use std::collections::HashSet;

use crate::{Error, Result, Scalar};

pub use synth::{generate_synthetic, SyntheticKind};
pub use tu::{parse_tu_dataset, parse_tu_dataset_with_summary, write_tu_dataset, LoadSummary};

/// Undirected simple graph on vertices `0..n`.
///
/// Edges are stored once as `(u, v)` with `u < v`, sorted lexicographically.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    degree: Vec<usize>,
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph, rejecting self-loops, repeated pairs and out-of-range
    /// endpoints.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::arg("graph must have at least one vertex"));
        }
        let mut seen = HashSet::new();
        let mut normalized = Vec::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::arg(format!("edge ({u}, {v}) out of range for n = {n}")));
            }
            if u == v {
                return Err(Error::arg(format!("self-loop at vertex {u}")));
            }
            let e = (u.min(v), u.max(v));
            if !seen.insert(e) {
                return Err(Error::arg(format!("duplicate edge ({}, {})", e.0, e.1)));
            }
            normalized.push(e);
        }
        normalized.sort_unstable();
        let mut degree = vec![0; n];
        let mut neighbors = vec![Vec::new(); n];
        for &(u, v) in &normalized {
            degree[u] += 1;
            degree[v] += 1;
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        for adj in &mut neighbors {
            adj.sort_unstable();
        }
        Ok(Graph {
            n,
            edges: normalized,
            degree,
            neighbors,
        })
    }

    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::arg("a cycle needs at least 3 vertices"));
        }
        Graph::new(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    pub fn path(n: usize) -> Result<Self> {
        Graph::new(n, (1..n).map(|i| (i - 1, i)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degree(&self) -> &[usize] {
        &self.degree
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    /// Relabels vertex `i` as `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::arg("permutation length differs from vertex count"));
        }
        Graph::new(self.n, self.edges.iter().map(|&(u, v)| (perm[u], perm[v])))
    }

    /// Number of connected components, counted by breadth-first search.
    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.n];
        let mut count = 0;
        let mut queue = Vec::new();
        for s in 0..self.n {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            queue.push(s);
            while let Some(u) = queue.pop() {
                for &w in &self.neighbors[u] {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push(w);
                    }
                }
            }
        }
        count
    }
}

/// Vertex degrees as real values.
pub fn degree_signature<T: Scalar>(g: &Graph) -> Vec<T> {
    g.degree().iter().map(|&d| T::from_usize_lossy(d)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledDataset {
    graphs: Vec<Graph>,
    labels: Vec<usize>,
    num_classes: usize,
}

impl LabeledDataset {
    pub fn new(graphs: Vec<Graph>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if graphs.len() != labels.len() {
            return Err(Error::arg(format!(
                "{} graphs but {} labels",
                graphs.len(),
                labels.len()
            )));
        }
        if num_classes < 2 {
            return Err(Error::arg("need at least two classes"));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::arg(format!("label {bad} >= num_classes {num_classes}")));
        }
        let distinct: HashSet<_> = labels.iter().collect();
        if distinct.len() < 2 {
            return Err(Error::arg("at least two distinct classes must appear"));
        }
        Ok(LabeledDataset {
            graphs,
            labels,
            num_classes,
        })
    }

    pub fn graphs(&self) -> &[Graph] {
        &self.graphs
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_signature_examples() {
        let p3 = Graph::path(3).unwrap();
        assert_eq!(degree_signature::<f64>(&p3), vec![1.0, 2.0, 1.0]);
        let c4 = Graph::cycle(4).unwrap();
        assert_eq!(degree_signature::<f64>(&c4), vec![2.0; 4]);
        let iso = Graph::new(3, [(0, 1)]).unwrap();
        assert_eq!(degree_signature::<f32>(&iso), vec![1.0, 1.0, 0.0]);
    }

    #[test]
    fn rejects_non_simple_input() {
        assert!(Graph::new(3, [(1, 1)]).is_err());
        assert!(Graph::new(3, [(0, 1), (1, 0)]).is_err());
        assert!(Graph::new(3, [(0, 3)]).is_err());
        assert!(Graph::new(0, []).is_err());
    }

    #[test]
    fn edges_are_normalized() {
        let g = Graph::new(4, [(3, 1), (2, 0), (0, 1)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 2), (1, 3)]);
        assert_eq!(g.degree(), &[2, 2, 1, 1]);
        assert_eq!(g.component_count(), 1);
        assert_eq!(Graph::new(4, [(0, 1)]).unwrap().component_count(), 3);
    }

    #[test]
    fn dataset_invariants() {
        let g = Graph::path(3).unwrap();
        assert!(LabeledDataset::new(vec![g.clone(), g.clone()], vec![0, 1], 2).is_ok());
        assert!(LabeledDataset::new(vec![g.clone(), g.clone()], vec![0, 0], 2).is_err());
        assert!(LabeledDataset::new(vec![g.clone()], vec![0, 1], 2).is_err());
        assert!(LabeledDataset::new(vec![g.clone(), g], vec![0, 2], 2).is_err());
    }
}
