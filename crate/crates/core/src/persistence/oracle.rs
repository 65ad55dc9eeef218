//! Threshold-sweep reference for [`super::compute_diagram`].
//!
//! Recomputes the components of every sublevel graph from scratch, matches
//! them to the previous threshold by vertex-set inclusion and reads deaths
//! and cycle births off the differences. Quadratic or worse; small inputs
//! only.

use super::{build_filtration, cmp_values, Death, FiltrationValue, HomologyDim};
use super::{PersistenceDiagram, PersistencePoint};
use crate::graph_io::Graph;
use crate::{Error, Result};

pub const ORACLE_MAX_VERTICES: usize = 64;

/// Components of the subgraph induced by `present`, as sorted vertex lists.
fn components(g: &Graph, present: &[bool]) -> Vec<Vec<usize>> {
    let mut label = vec![usize::MAX; g.n()];
    let mut comps = Vec::new();
    for s in 0..g.n() {
        if !present[s] || label[s] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut members = vec![s];
        label[s] = id;
        let mut head = 0;
        while head < members.len() {
            let u = members[head];
            head += 1;
            for &w in g.neighbors(u) {
                if present[w] && label[w] == usize::MAX {
                    label[w] = id;
                    members.push(w);
                }
            }
        }
        members.sort_unstable();
        comps.push(members);
    }
    comps
}

pub fn compute_diagram_oracle<V: FiltrationValue>(
    g: &Graph,
    values: &[V],
) -> Result<PersistenceDiagram<V>> {
    if g.n() > ORACLE_MAX_VERTICES {
        return Err(Error::arg(format!(
            "oracle is limited to {ORACLE_MAX_VERTICES} vertices, got {}",
            g.n()
        )));
    }
    build_filtration(g, values)?;

    let mut thresholds = values.to_vec();
    thresholds.sort_by(cmp_values);
    thresholds.dedup_by(|a, b| cmp_values(a, b).is_eq());

    // Eldest vertex of a component: smallest (value, index).
    let eldest = |c: &[usize]| {
        *c.iter()
            .min_by(|&&a, &&b| cmp_values(&values[a], &values[b]).then(a.cmp(&b)))
            .expect("components are non-empty")
    };

    let mut points = Vec::new();
    let mut prev: Vec<Vec<usize>> = Vec::new();
    let mut prev_rank = 0usize;
    for &alpha in &thresholds {
        let present: Vec<bool> = values.iter().map(|v| cmp_values(v, &alpha).is_le()).collect();
        let comps = components(g, &present);

        for c in &comps {
            let mut merged: Vec<usize> = prev
                .iter()
                .filter(|p| p.iter().all(|v| c.binary_search(v).is_ok()))
                .map(|p| eldest(p))
                .collect();
            merged.sort_by(|&a, &b| cmp_values(&values[a], &values[b]).then(a.cmp(&b)));
            for &dying in merged.iter().skip(1) {
                points.push(PersistencePoint {
                    birth: values[dying],
                    death: Death::Finite(alpha),
                    dim: HomologyDim::Zero,
                });
            }
        }

        let n_t = present.iter().filter(|&&p| p).count();
        let m_t = g
            .edges()
            .iter()
            .filter(|&&(u, v)| present[u] && present[v])
            .count();
        let rank = m_t + comps.len() - n_t;
        for _ in prev_rank..rank {
            points.push(PersistencePoint {
                birth: alpha,
                death: Death::Infinite,
                dim: HomologyDim::One,
            });
        }
        prev_rank = rank;
        prev = comps;
    }
    for c in &prev {
        points.push(PersistencePoint {
            birth: values[eldest(c)],
            death: Death::Infinite,
            dim: HomologyDim::Zero,
        });
    }
    Ok(PersistenceDiagram { points })
}
