use rand::Rng;

use super::{Graph, LabeledDataset};
use crate::rng;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SyntheticKind {
    /// Class 0: cycles `C_n`; class 1: paths `P_n`.
    CyclesVsPaths,
    /// Two random-graph families with edge probability 0.15 (class 0) and
    /// 0.35 (class 1).
    DensityPair,
}

impl std::str::FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cycles_vs_paths" => Ok(SyntheticKind::CyclesVsPaths),
            "density_pair" => Ok(SyntheticKind::DensityPair),
            _ => Err(Error::arg(format!("unknown synthetic kind {s:?}"))),
        }
    }
}

const DENSITY: [f64; 2] = [0.15, 0.35];

/// Generates `count_per_class` graphs per class (class 0 first), with vertex
/// counts drawn uniformly from the inclusive `size_range`.
pub fn generate_synthetic(
    kind: SyntheticKind,
    count_per_class: usize,
    size_range: (usize, usize),
    seed: u64,
) -> Result<LabeledDataset> {
    let (lo, hi) = size_range;
    if count_per_class == 0 {
        return Err(Error::arg("count_per_class must be at least 1"));
    }
    if lo < 3 || lo > hi {
        return Err(Error::arg(format!(
            "size range ({lo}, {hi}) must satisfy 3 <= min <= max"
        )));
    }
    let mut rng = rng::stream(seed, &[rng::SYNTH]);
    let mut graphs = Vec::with_capacity(2 * count_per_class);
    let mut labels = Vec::with_capacity(2 * count_per_class);
    for class in 0..2 {
        for _ in 0..count_per_class {
            let n = rng.random_range(lo..=hi);
            let g = match kind {
                SyntheticKind::CyclesVsPaths if class == 0 => Graph::cycle(n)?,
                SyntheticKind::CyclesVsPaths => Graph::path(n)?,
                SyntheticKind::DensityPair => {
                    let p = DENSITY[class];
                    let mut edges = Vec::new();
                    for u in 0..n {
                        for v in u + 1..n {
                            if rng.random_bool(p) {
                                edges.push((u, v));
                            }
                        }
                    }
                    Graph::new(n, edges)?
                }
            };
            graphs.push(g);
            labels.push(class);
        }
    }
    LabeledDataset::new(graphs, labels, 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycles_vs_paths_minimal() {
        let ds = generate_synthetic(SyntheticKind::CyclesVsPaths, 1, (4, 4), 7).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.graphs()[0].m(), 4);
        assert_eq!(ds.graphs()[1].m(), 3);
        assert_eq!(ds.labels(), &[0, 1]);
    }

    #[test]
    fn deterministic() {
        let a = generate_synthetic(SyntheticKind::DensityPair, 5, (5, 12), 3).unwrap();
        let b = generate_synthetic(SyntheticKind::DensityPair, 5, (5, 12), 3).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic(SyntheticKind::DensityPair, 5, (5, 12), 4).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn density_pair_classes_differ() {
        let ds = generate_synthetic(SyntheticKind::DensityPair, 50, (20, 30), 1).unwrap();
        assert_eq!(ds.len(), 100);
        let mut sum = [0usize; 2];
        for (g, &l) in ds.graphs().iter().zip(ds.labels()) {
            sum[l] += g.m();
        }
        assert!(sum[1] > sum[0], "class edge totals {sum:?}");
    }

    #[test]
    fn bad_arguments() {
        assert!(generate_synthetic(SyntheticKind::CyclesVsPaths, 0, (4, 4), 0).is_err());
        assert!(generate_synthetic(SyntheticKind::CyclesVsPaths, 1, (2, 4), 0).is_err());
        assert!(generate_synthetic(SyntheticKind::CyclesVsPaths, 1, (6, 4), 0).is_err());
    }
}
