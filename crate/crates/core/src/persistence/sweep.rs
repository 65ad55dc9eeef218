use super::{build_filtration, cmp_values, Death, FiltrationValue, HomologyDim};
use super::{PersistenceDiagram, PersistencePoint};
use crate::graph_io::Graph;
use crate::Result;

/// Union-find whose roots are always the eldest vertex of their component.
struct ElderForest {
    parent: Vec<usize>,
}

impl ElderForest {
    fn new(n: usize) -> Self {
        ElderForest {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }
}

/// 0-dimensional (essential and finite) and 1-dimensional (essential)
/// persistence of the sublevel filtration of `values` on `g`.
///
/// Components merge under the elder rule: the component whose root has the
/// smaller `(value, index)` survives. Points with `birth == death` are
/// dropped.
pub fn compute_diagram<V: FiltrationValue>(g: &Graph, values: &[V]) -> Result<PersistenceDiagram<V>> {
    let filt = build_filtration(g, values)?;
    let elder = |a: usize, b: usize| cmp_values(&values[a], &values[b]).then(a.cmp(&b)).is_lt();

    let mut forest = ElderForest::new(g.n());
    let mut points = Vec::new();
    // Vertices are inserted lazily: every vertex not above the current edge
    // value exists before the edge is processed. Vertex insertion itself
    // needs no bookkeeping since a fresh vertex is its own root.
    for &e in &filt.edge_order {
        let (u, v) = g.edges()[e];
        let at = filt.edge_value[e];
        let (ru, rv) = (forest.find(u), forest.find(v));
        if ru == rv {
            points.push(PersistencePoint {
                birth: at,
                death: Death::Infinite,
                dim: HomologyDim::One,
            });
            continue;
        }
        let (old, young) = if elder(ru, rv) { (ru, rv) } else { (rv, ru) };
        forest.parent[young] = old;
        let birth = values[young];
        if cmp_values(&birth, &at).is_lt() {
            points.push(PersistencePoint {
                birth,
                death: Death::Finite(at),
                dim: HomologyDim::Zero,
            });
        }
    }
    for &v in &filt.vertex_order {
        if forest.find(v) == v {
            points.push(PersistencePoint {
                birth: values[v],
                death: Death::Infinite,
                dim: HomologyDim::Zero,
            });
        }
    }
    Ok(PersistenceDiagram { points })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(birth: f64, death: Option<f64>, dim: HomologyDim) -> PersistencePoint<f64> {
        PersistencePoint {
            birth,
            death: death.map_or(Death::Infinite, Death::Finite),
            dim,
        }
    }

    #[test]
    fn path_degree_diagram() {
        let g = Graph::path(3).unwrap();
        let d = compute_diagram(&g, &[1.0, 2.0, 1.0]).unwrap();
        let want = PersistenceDiagram {
            points: vec![
                pt(1.0, None, HomologyDim::Zero),
                pt(1.0, Some(2.0), HomologyDim::Zero),
            ],
        };
        assert!(d.same_multiset(&want), "{d:?}");
    }

    #[test]
    fn constant_cycle_drops_zero_persistence() {
        let g = Graph::cycle(4).unwrap();
        let d = compute_diagram(&g, &[2.0; 4]).unwrap();
        let want = PersistenceDiagram {
            points: vec![pt(2.0, None, HomologyDim::Zero), pt(2.0, None, HomologyDim::One)],
        };
        assert!(d.same_multiset(&want), "{d:?}");
    }

    #[test]
    fn single_vertex() {
        let g = Graph::new(1, []).unwrap();
        let d = compute_diagram(&g, &[5.0]).unwrap();
        assert_eq!(d.points, vec![pt(5.0, None, HomologyDim::Zero)]);
    }

    #[test]
    fn elder_rule_kills_younger() {
        // 0(1) - 2(3) - 1(2): at 3 the components born at 1 and 2 merge.
        let g = Graph::new(3, [(0, 2), (1, 2)]).unwrap();
        let d = compute_diagram(&g, &[1.0, 2.0, 3.0]).unwrap();
        let want = PersistenceDiagram {
            points: vec![
                pt(1.0, None, HomologyDim::Zero),
                pt(2.0, Some(3.0), HomologyDim::Zero),
            ],
        };
        assert!(d.same_multiset(&want), "{d:?}");
    }

    #[test]
    fn disconnected_and_isolated() {
        let g = Graph::new(5, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let d = compute_diagram(&g, &[0.0, 1.0, 2.0, 0.5, 7.0]).unwrap();
        assert_eq!(d.count(HomologyDim::Zero, true), 3);
        assert_eq!(d.count(HomologyDim::One, true), 1);
        assert_eq!(d.count(HomologyDim::Zero, false), 0);
    }

    #[test]
    fn integer_values() {
        let g = Graph::path(3).unwrap();
        let d = compute_diagram(&g, &[1i64, 2, 1]).unwrap();
        assert_eq!(d.count(HomologyDim::Zero, false), 1);
    }
}
