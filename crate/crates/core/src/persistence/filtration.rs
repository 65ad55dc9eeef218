use super::{cmp_values, FiltrationValue};
use crate::graph_io::Graph;
use crate::{Error, Result};

/// Insertion order of the sublevel filtration.
#[derive(Clone, Debug, PartialEq)]
pub struct FiltrationOrder<V> {
    /// Vertices by ascending `(value, index)`.
    pub vertex_order: Vec<usize>,
    pub vertex_value: Vec<V>,
    /// `max(value[u], value[v])`, aligned with `Graph::edges`.
    pub edge_value: Vec<V>,
    /// Edge indices by ascending `(edge value, u, v)`.
    pub edge_order: Vec<usize>,
}

pub fn build_filtration<V: FiltrationValue>(g: &Graph, values: &[V]) -> Result<FiltrationOrder<V>> {
    if values.len() != g.n() {
        return Err(Error::arg(format!(
            "{} descriptor values for {} vertices",
            values.len(),
            g.n()
        )));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite_value()) {
        return Err(Error::arg(format!(
            "descriptor value of vertex {i} is not finite: {:?}",
            values[i]
        )));
    }
    let mut vertex_order: Vec<usize> = (0..g.n()).collect();
    vertex_order.sort_by(|&a, &b| cmp_values(&values[a], &values[b]).then(a.cmp(&b)));

    let edge_value: Vec<V> = g
        .edges()
        .iter()
        .map(|&(u, v)| {
            if cmp_values(&values[u], &values[v]).is_ge() {
                values[u]
            } else {
                values[v]
            }
        })
        .collect();
    let mut edge_order: Vec<usize> = (0..g.m()).collect();
    // Graph::edges is already lexicographic, so the index breaks ties.
    edge_order.sort_by(|&a, &b| cmp_values(&edge_value[a], &edge_value[b]).then(a.cmp(&b)));

    Ok(FiltrationOrder {
        vertex_order,
        vertex_value: values.to_vec(),
        edge_value,
        edge_order,
    })
}
