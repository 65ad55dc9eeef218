//! Sublevel persistence of vertex-valued graphs.
//!
//! Vertices enter at their value, edges at the larger endpoint value. Only
//! 0- and 1-simplices exist, so every 1-cycle is essential.

mod filtration;
mod oracle;
mod sweep;

use std::cmp::Ordering;
use std::fmt::Debug;

pub use filtration::{build_filtration, FiltrationOrder};
pub use oracle::{compute_diagram_oracle, ORACLE_MAX_VERTICES};
pub use sweep::compute_diagram;

/// A totally ordered filtration value.
///
/// Implemented for the primitive floats and integers; any other exact type
/// (e.g. rationals) can opt in.
pub trait FiltrationValue: Copy + PartialOrd + Debug {
    fn is_finite_value(&self) -> bool;
}

macro_rules! float_value {
    ($($t:ty),*) => {$(
        impl FiltrationValue for $t {
            fn is_finite_value(&self) -> bool {
                self.is_finite()
            }
        }
    )*};
}

macro_rules! int_value {
    ($($t:ty),*) => {$(
        impl FiltrationValue for $t {
            fn is_finite_value(&self) -> bool {
                true
            }
        }
    )*};
}

float_value!(f32, f64);
int_value!(i32, i64, u32, u64, usize);

/// Compares finite filtration values.
pub(crate) fn cmp_values<V: FiltrationValue>(a: &V, b: &V) -> Ordering {
    a.partial_cmp(b).expect("filtration values are finite")
}

/// Death of a persistence point; `Infinite` sorts after every finite value.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub enum Death<V> {
    Finite(V),
    Infinite,
}

impl<V: Copy> Death<V> {
    pub fn finite(self) -> Option<V> {
        match self {
            Death::Finite(v) => Some(v),
            Death::Infinite => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HomologyDim {
    Zero,
    One,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PersistencePoint<V> {
    pub birth: V,
    pub death: Death<V>,
    pub dim: HomologyDim,
}

impl<V: FiltrationValue> PersistencePoint<V> {
    pub fn is_essential(&self) -> bool {
        matches!(self.death, Death::Infinite)
    }

    fn sort_key_cmp(&self, other: &Self) -> Ordering {
        self.dim
            .cmp(&other.dim)
            .then_with(|| cmp_values(&self.birth, &other.birth))
            .then_with(|| match (self.death, other.death) {
                (Death::Finite(a), Death::Finite(b)) => cmp_values(&a, &b),
                (Death::Finite(_), Death::Infinite) => Ordering::Less,
                (Death::Infinite, Death::Finite(_)) => Ordering::Greater,
                (Death::Infinite, Death::Infinite) => Ordering::Equal,
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PersistenceDiagram<V> {
    pub points: Vec<PersistencePoint<V>>,
}

impl<V: FiltrationValue> PersistenceDiagram<V> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points sorted by (dim, birth, death); equal multisets sort equal.
    pub fn sorted_points(&self) -> Vec<PersistencePoint<V>> {
        let mut pts = self.points.clone();
        pts.sort_by(PersistencePoint::sort_key_cmp);
        pts
    }

    pub fn same_multiset(&self, other: &Self) -> bool {
        self.sorted_points() == other.sorted_points()
    }

    pub fn count(&self, dim: HomologyDim, essential: bool) -> usize {
        self.points
            .iter()
            .filter(|p| p.dim == dim && p.is_essential() == essential)
            .count()
    }

    /// Applies `f` to every finite coordinate.
    pub fn map_values<W>(&self, f: impl Fn(V) -> W) -> PersistenceDiagram<W> {
        PersistenceDiagram {
            points: self
                .points
                .iter()
                .map(|p| PersistencePoint {
                    birth: f(p.birth),
                    death: match p.death {
                        Death::Finite(d) => Death::Finite(f(d)),
                        Death::Infinite => Death::Infinite,
                    },
                    dim: p.dim,
                })
                .collect(),
        }
    }
}
