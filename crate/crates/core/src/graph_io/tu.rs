//! TU Dortmund benchmark format.
//!
//! A dataset `DS` is a directory holding `DS_A.txt` (one `u, v` row per
//! directed edge, 1-based global node ids), `DS_graph_indicator.txt` (graph id
//! of node `i` on line `i`) and `DS_graph_labels.txt` (label of graph `g` on
//! line `g`). Attribute files are ignored.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{Graph, LabeledDataset};
use crate::{Error, Result};

/// Counts reported after loading a TU dataset.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LoadSummary {
    pub graphs: usize,
    pub classes: usize,
    pub nodes: usize,
    pub edges: usize,
    pub edge_rows: usize,
    pub self_loop_rows: usize,
    pub duplicate_rows: usize,
}

impl fmt::Display for LoadSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "graphs={} classes={} nodes={} edges={} edge_rows={} dropped_self_loops={} dropped_duplicates={}",
            self.graphs,
            self.classes,
            self.nodes,
            self.edges,
            self.edge_rows,
            self.self_loop_rows,
            self.duplicate_rows
        )
    }
}

fn read_lines(dir: &Path, file: &str) -> Result<Vec<(usize, String)>> {
    let path = dir.join(file);
    let text = fs::read_to_string(&path).map_err(|source| Error::Ingestion {
        path: path.clone(),
        source,
    })?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim().to_string()))
        .filter(|(_, l)| !l.is_empty())
        .collect())
}

fn parse_int<T: std::str::FromStr>(file: &str, line: usize, s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::format(file, line, format!("expected an integer, found {s:?}")))
}

pub fn parse_tu_dataset(dir: impl AsRef<Path>, name: &str) -> Result<LabeledDataset> {
    parse_tu_dataset_with_summary(dir, name).map(|(ds, _)| ds)
}

pub fn parse_tu_dataset_with_summary(
    dir: impl AsRef<Path>,
    name: &str,
) -> Result<(LabeledDataset, LoadSummary)> {
    let dir = dir.as_ref();
    let a_file = format!("{name}_A.txt");
    let ind_file = format!("{name}_graph_indicator.txt");
    let lab_file = format!("{name}_graph_labels.txt");

    let label_lines = read_lines(dir, &lab_file)?;
    let indicator_lines = read_lines(dir, &ind_file)?;
    let edge_lines = read_lines(dir, &a_file)?;

    let raw_labels = label_lines
        .iter()
        .map(|(ln, s)| parse_int::<i64>(&lab_file, *ln, s))
        .collect::<Result<Vec<_>>>()?;
    let num_graphs = raw_labels.len();

    // node_graph[i] = 0-based graph of global node i; local[i] = index within it.
    let mut node_graph = Vec::with_capacity(indicator_lines.len());
    let mut sizes = vec![0usize; num_graphs];
    let mut local = Vec::with_capacity(indicator_lines.len());
    for (ln, s) in &indicator_lines {
        let gid: usize = parse_int(&ind_file, *ln, s)?;
        if gid == 0 || gid > num_graphs {
            return Err(Error::format(
                &ind_file,
                *ln,
                format!("graph id {gid} outside 1..={num_graphs}"),
            ));
        }
        node_graph.push(gid - 1);
        local.push(sizes[gid - 1]);
        sizes[gid - 1] += 1;
    }
    if let Some(empty) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::format(
            &ind_file,
            0,
            format!("graph {} has no nodes", empty + 1),
        ));
    }

    let mut summary = LoadSummary {
        graphs: num_graphs,
        nodes: node_graph.len(),
        ..LoadSummary::default()
    };
    let mut seen_rows = HashSet::new();
    let mut edge_sets: Vec<BTreeSet<(usize, usize)>> = vec![BTreeSet::new(); num_graphs];
    for (ln, s) in &edge_lines {
        let mut parts = s.split(',');
        let (u, v) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) => (
                parse_int::<usize>(&a_file, *ln, a)?,
                parse_int::<usize>(&a_file, *ln, b)?,
            ),
            _ => return Err(Error::format(&a_file, *ln, "expected `u, v`")),
        };
        for x in [u, v] {
            if x == 0 || x > node_graph.len() {
                return Err(Error::format(
                    &a_file,
                    *ln,
                    format!("node id {x} outside 1..={}", node_graph.len()),
                ));
            }
        }
        summary.edge_rows += 1;
        let (gu, gv) = (node_graph[u - 1], node_graph[v - 1]);
        if gu != gv {
            return Err(Error::format(
                &a_file,
                *ln,
                format!("edge ({u}, {v}) joins graphs {} and {}", gu + 1, gv + 1),
            ));
        }
        if u == v {
            summary.self_loop_rows += 1;
            continue;
        }
        if !seen_rows.insert((u, v)) {
            summary.duplicate_rows += 1;
            continue;
        }
        let (a, b) = (local[u - 1], local[v - 1]);
        edge_sets[gu].insert((a.min(b), a.max(b)));
    }

    let graphs = sizes
        .iter()
        .zip(edge_sets)
        .map(|(&n, edges)| Graph::new(n, edges))
        .collect::<Result<Vec<_>>>()?;
    summary.edges = graphs.iter().map(Graph::m).sum();

    let distinct: Vec<i64> = raw_labels
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if distinct.len() < 2 {
        return Err(Error::format(&lab_file, 0, "fewer than two distinct labels"));
    }
    let labels = raw_labels
        .iter()
        .map(|l| distinct.binary_search(l).expect("label present"))
        .collect();
    summary.classes = distinct.len();
    let ds = LabeledDataset::new(graphs, labels, distinct.len())?;
    log::info!("loaded {name}: {summary}");
    Ok((ds, summary))
}

/// Writes `ds` in TU format, listing each edge in both directions and using
/// the class index as the raw label.
pub fn write_tu_dataset(ds: &LabeledDataset, dir: impl AsRef<Path>, name: &str) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut a = BufWriter::new(fs::File::create(dir.join(format!("{name}_A.txt")))?);
    let mut ind = BufWriter::new(fs::File::create(
        dir.join(format!("{name}_graph_indicator.txt")),
    )?);
    let mut lab = BufWriter::new(fs::File::create(dir.join(format!("{name}_graph_labels.txt")))?);
    let mut offset = 1;
    for (gi, (g, &label)) in ds.graphs().iter().zip(ds.labels()).enumerate() {
        for _ in 0..g.n() {
            writeln!(ind, "{}", gi + 1)?;
        }
        for &(u, v) in g.edges() {
            writeln!(a, "{}, {}", u + offset, v + offset)?;
            writeln!(a, "{}, {}", v + offset, u + offset)?;
        }
        writeln!(lab, "{label}")?;
        offset += g.n();
    }
    a.flush()?;
    ind.flush()?;
    lab.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_files(dir: &Path, a: &str, ind: &str, lab: &str) {
        fs::write(dir.join("T_A.txt"), a).unwrap();
        fs::write(dir.join("T_graph_indicator.txt"), ind).unwrap();
        fs::write(dir.join("T_graph_labels.txt"), lab).unwrap();
    }

    #[test]
    fn triangle_and_edge() {
        let dir = tempfile::tempdir().unwrap();
        write_files(
            dir.path(),
            "1, 2\n2, 1\n2, 3\n3, 2\n1, 3\n3, 1\n4, 5\n5, 4\n",
            "1\n1\n1\n2\n2\n",
            "-1\n1\n",
        );
        let (ds, summary) = parse_tu_dataset_with_summary(dir.path(), "T").unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.graphs()[0].n(), 3);
        assert_eq!(ds.graphs()[0].m(), 3);
        assert_eq!(ds.graphs()[1].n(), 2);
        assert_eq!(ds.graphs()[1].edges(), &[(0, 1)]);
        assert_eq!(ds.labels(), &[0, 1]);
        assert_eq!(ds.num_classes(), 2);
        assert_eq!(summary.edge_rows, 8);
        assert_eq!(summary.self_loop_rows, 0);
    }

    #[test]
    fn symmetric_rows_dedup_and_self_loops_drop() {
        let dir = tempfile::tempdir().unwrap();
        write_files(dir.path(), "1, 2\n2, 1\n3, 3\n1, 2\n", "1\n1\n1\n2\n", "7\n3\n");
        let (ds, summary) = parse_tu_dataset_with_summary(dir.path(), "T").unwrap();
        assert_eq!(ds.graphs()[0].edges(), &[(0, 1)]);
        assert_eq!(ds.graphs()[0].n(), 3);
        assert_eq!(summary.self_loop_rows, 1);
        assert_eq!(summary.duplicate_rows, 1);
        // sorted raw labels: 3 -> 0, 7 -> 1
        assert_eq!(ds.labels(), &[1, 0]);
    }

    #[test]
    fn errors() {
        let dir = tempfile::tempdir().unwrap();
        match parse_tu_dataset(dir.path(), "T") {
            Err(Error::Ingestion { path, .. }) => {
                assert!(path.to_string_lossy().contains("T_graph_labels.txt"))
            }
            other => panic!("expected ingestion error, got {other:?}"),
        }

        write_files(dir.path(), "1, 2\n2, 3\n", "1\n1\n2\n", "0\n1\n");
        match parse_tu_dataset(dir.path(), "T") {
            Err(Error::Format { line, file, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(file, "T_A.txt");
            }
            other => panic!("expected format error, got {other:?}"),
        }

        write_files(dir.path(), "1, 2\n", "1\n1\n", "0\n1\n");
        assert!(matches!(
            parse_tu_dataset(dir.path(), "T"),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn round_trip() {
        let ds = crate::graph_io::generate_synthetic(
            crate::graph_io::SyntheticKind::DensityPair,
            6,
            (3, 9),
            11,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_tu_dataset(&ds, dir.path(), "RT").unwrap();
        let back = parse_tu_dataset(dir.path(), "RT").unwrap();
        assert_eq!(ds, back);
    }
}
