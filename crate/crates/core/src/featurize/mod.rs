//! Persistence diagrams to fixed-shape feature tensors.
//!
//! Each graph yields `K` diagrams. Every point becomes a 5-vector
//! `[birth, death, is_h0_essential, is_h0_finite, is_h1_essential]` with the
//! coordinates divided by the largest finite coordinate of its diagram and
//! `+inf` mapped to 1. Diagrams are padded to a dataset-wide length `L`; a
//! mask marks the real points.

mod format;

use nalgebra::RealField;
use rayon::prelude::*;

use crate::graph_io::{degree_signature, Graph, LabeledDataset};
use crate::persistence::{compute_diagram, Death, HomologyDim, PersistenceDiagram};
use crate::signature::return_probabilities_spectral;
use crate::{Error, Result, Scalar};

pub use format::{decode_features, encode_features, read_features, write_features, FEATURE_MAGIC};

/// Width of one encoded point.
pub const POINT_WIDTH: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PointGroup {
    EssentialH0,
    FiniteH0,
    EssentialH1,
}

impl PointGroup {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn onehot<T: Scalar>(self) -> [T; 3] {
        let mut v = [T::zero(); 3];
        v[self.index()] = T::one();
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TaggedPoint<T> {
    pub birth: T,
    pub death: T,
    pub group: PointGroup,
}

impl<T: Scalar> TaggedPoint<T> {
    pub fn to_row(self) -> [T; POINT_WIDTH] {
        let [a, b, c] = self.group.onehot();
        [self.birth, self.death, a, b, c]
    }
}

/// Scales a diagram into `[0, 1]` and tags each point with its group.
///
/// The divisor is the largest finite birth or death; 1 if there is none or
/// it is not positive.
pub fn normalize_diagram<T: Scalar>(d: &PersistenceDiagram<T>) -> Vec<TaggedPoint<T>> {
    let max = d
        .points
        .iter()
        .flat_map(|p| std::iter::once(p.birth).chain(p.death.finite()))
        .fold(None, |acc: Option<T>, x| Some(acc.map_or(x, |a| a.max(x))));
    let divisor = match max {
        Some(m) if m > T::zero() => m,
        _ => T::one(),
    };
    d.points
        .iter()
        .map(|p| {
            let group = match (p.dim, p.death) {
                (HomologyDim::Zero, Death::Infinite) => PointGroup::EssentialH0,
                (HomologyDim::Zero, Death::Finite(_)) => PointGroup::FiniteH0,
                (HomologyDim::One, _) => PointGroup::EssentialH1,
            };
            TaggedPoint {
                birth: p.birth / divisor,
                death: p.death.finite().map_or(T::one(), |x| x / divisor),
                group,
            }
        })
        .collect()
}

fn sort_points<T: Scalar>(points: &mut [TaggedPoint<T>]) {
    points.sort_by(|a, b| {
        a.group
            .cmp(&b.group)
            .then(a.birth.partial_cmp(&b.birth).expect("finite"))
            .then(a.death.partial_cmp(&b.death).expect("finite"))
    });
}

/// One graph's `K x L x 5` features with a `K x L` validity mask.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTensor<T> {
    scales: usize,
    slots: usize,
    data: Vec<T>,
    mask: Vec<bool>,
    label: usize,
}

impl<T: Scalar> FeatureTensor<T> {
    /// Packs per-scale point lists into `slots` padded slots each.
    pub fn from_points(points: &[Vec<TaggedPoint<T>>], slots: usize, label: usize) -> Result<Self> {
        let scales = points.len();
        let mut data = vec![T::zero(); scales * slots * POINT_WIDTH];
        let mut mask = vec![false; scales * slots];
        for (k, pts) in points.iter().enumerate() {
            if pts.len() > slots {
                return Err(Error::arg(format!(
                    "diagram {k} has {} points but L = {slots}",
                    pts.len()
                )));
            }
            for (l, p) in pts.iter().enumerate() {
                let at = (k * slots + l) * POINT_WIDTH;
                data[at..at + POINT_WIDTH].copy_from_slice(&p.to_row());
                mask[k * slots + l] = true;
            }
        }
        Ok(FeatureTensor {
            scales,
            slots,
            data,
            mask,
            label,
        })
    }

    /// Builds a tensor from raw parts; padded slots must be zero.
    pub fn from_raw(
        scales: usize,
        slots: usize,
        data: Vec<T>,
        mask: Vec<bool>,
        label: usize,
    ) -> Result<Self> {
        if data.len() != scales * slots * POINT_WIDTH || mask.len() != scales * slots {
            return Err(Error::arg("feature tensor buffers do not match K x L x 5"));
        }
        let t = FeatureTensor {
            scales,
            slots,
            data,
            mask,
            label,
        };
        for k in 0..scales {
            for l in 0..slots {
                if !t.is_valid(k, l) && t.point(k, l).iter().any(|&x| x != T::zero()) {
                    return Err(Error::arg(format!("padded slot ({k}, {l}) is not zero")));
                }
            }
        }
        Ok(t)
    }

    pub fn scales(&self) -> usize {
        self.scales
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn label(&self) -> usize {
        self.label
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn point(&self, k: usize, l: usize) -> &[T] {
        let at = (k * self.slots + l) * POINT_WIDTH;
        &self.data[at..at + POINT_WIDTH]
    }

    pub fn is_valid(&self, k: usize, l: usize) -> bool {
        self.mask[k * self.slots + l]
    }

    pub fn valid_count(&self, k: usize) -> usize {
        self.mask[k * self.slots..(k + 1) * self.slots]
            .iter()
            .filter(|&&m| m)
            .count()
    }

    /// Per-group point counts of diagram `k`.
    pub fn group_counts(&self, k: usize) -> [usize; 3] {
        let mut counts = [0; 3];
        for l in 0..self.slots {
            if self.is_valid(k, l) {
                let p = self.point(k, l);
                for (c, &x) in counts.iter_mut().zip(&p[2..]) {
                    if x == T::one() {
                        *c += 1;
                    }
                }
            }
        }
        counts
    }

    /// Same tensor with `extra` masked zero slots appended to every diagram.
    pub fn padded(&self, extra: usize) -> Self {
        let slots = self.slots + extra;
        let mut data = vec![T::zero(); self.scales * slots * POINT_WIDTH];
        let mut mask = vec![false; self.scales * slots];
        for k in 0..self.scales {
            for l in 0..self.slots {
                let at = (k * slots + l) * POINT_WIDTH;
                data[at..at + POINT_WIDTH].copy_from_slice(self.point(k, l));
                mask[k * slots + l] = self.is_valid(k, l);
            }
        }
        FeatureTensor {
            scales: self.scales,
            slots,
            data,
            mask,
            label: self.label,
        }
    }

    /// Moves slot `l` of diagram `k` to slot `perm[k][l]`, data and mask
    /// together.
    pub fn permute_slots(&self, perm: &[Vec<usize>]) -> Self {
        let mut out = self.clone();
        for k in 0..self.scales {
            for l in 0..self.slots {
                let to = perm[k][l];
                let src = (k * self.slots + l) * POINT_WIDTH;
                let dst = (k * self.slots + to) * POINT_WIDTH;
                out.data[dst..dst + POINT_WIDTH].copy_from_slice(&self.data[src..src + POINT_WIDTH]);
                out.mask[k * self.slots + to] = self.mask[k * self.slots + l];
            }
        }
        out
    }

    /// Copy with the one-hot columns of every real point replaced by `onehot`.
    pub fn with_onehot(&self, onehot: [T; 3]) -> Self {
        let mut out = self.clone();
        for i in 0..self.scales * self.slots {
            if self.mask[i] {
                out.data[i * POINT_WIDTH + 2..(i + 1) * POINT_WIDTH].copy_from_slice(&onehot);
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureDataset<T> {
    tensors: Vec<FeatureTensor<T>>,
    scales: usize,
    slots: usize,
    num_classes: usize,
}

impl<T: Scalar> FeatureDataset<T> {
    pub fn new(
        tensors: Vec<FeatureTensor<T>>,
        scales: usize,
        slots: usize,
        num_classes: usize,
    ) -> Result<Self> {
        if let Some(t) = tensors.iter().find(|t| t.scales != scales || t.slots != slots) {
            return Err(Error::arg(format!(
                "tensor shape {}x{} differs from dataset shape {scales}x{slots}",
                t.scales, t.slots
            )));
        }
        if let Some(t) = tensors.iter().find(|t| t.label >= num_classes) {
            return Err(Error::arg(format!(
                "label {} >= num_classes {num_classes}",
                t.label
            )));
        }
        Ok(FeatureDataset {
            tensors,
            scales,
            slots,
            num_classes,
        })
    }

    pub fn tensors(&self) -> &[FeatureTensor<T>] {
        &self.tensors
    }

    pub fn scales(&self) -> usize {
        self.scales
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.tensors.iter().map(|t| t.label).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignatureMode {
    /// Return probabilities at hops `2..=K+1`.
    ReturnProb,
    /// Vertex degree; always a single scale.
    Degree,
}

impl std::str::FromStr for SignatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "return_prob" => Ok(SignatureMode::ReturnProb),
            "degree" => Ok(SignatureMode::Degree),
            _ => Err(Error::arg(format!("unknown signature mode {s:?}"))),
        }
    }
}

/// Normalized, sorted points of every scale of one graph.
pub fn graph_points<T: Scalar + RealField>(
    g: &Graph,
    scales: usize,
    mode: SignatureMode,
) -> Result<Vec<Vec<TaggedPoint<T>>>> {
    let descriptors: Vec<Vec<T>> = match mode {
        SignatureMode::Degree => vec![degree_signature(g)],
        SignatureMode::ReturnProb => {
            let sig = return_probabilities_spectral::<T>(g, scales)?;
            (0..scales).map(|c| sig.column(c)).collect()
        }
    };
    descriptors
        .iter()
        .map(|values| {
            let mut pts = normalize_diagram(&compute_diagram(g, values)?);
            sort_points(&mut pts);
            Ok(pts)
        })
        .collect()
}

/// Featurizes every graph of `ds`; `jobs > 1` spreads graphs over a thread
/// pool without changing the result.
pub fn extract_features<T: Scalar + RealField>(
    ds: &LabeledDataset,
    scales: usize,
    mode: SignatureMode,
    jobs: usize,
) -> Result<FeatureDataset<T>> {
    if ds.is_empty() {
        return Err(Error::arg("cannot extract features from an empty dataset"));
    }
    if scales == 0 {
        return Err(Error::arg("number of scales K must be at least 1"));
    }
    let scales = match mode {
        SignatureMode::Degree => {
            if scales != 1 {
                log::warn!("degree signature has a single scale; ignoring K = {scales}");
            }
            1
        }
        SignatureMode::ReturnProb => scales,
    };
    let per_graph = |g: &Graph| graph_points::<T>(g, scales, mode);
    let points: Vec<Vec<Vec<TaggedPoint<T>>>> = if jobs <= 1 {
        ds.graphs().iter().map(per_graph).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::State(e.to_string()))?;
        pool.install(|| ds.graphs().par_iter().map(per_graph).collect::<Result<_>>())?
    };
    let slots = points
        .iter()
        .flat_map(|scales| scales.iter().map(Vec::len))
        .max()
        .unwrap_or(0)
        .max(1);
    let tensors = points
        .iter()
        .zip(ds.labels())
        .map(|(p, &label)| FeatureTensor::from_points(p, slots, label))
        .collect::<Result<Vec<_>>>()?;
    FeatureDataset::new(tensors, scales, slots, ds.num_classes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::persistence::PersistencePoint;

    fn pt(birth: f64, death: Option<f64>, dim: HomologyDim) -> PersistencePoint<f64> {
        PersistencePoint {
            birth,
            death: death.map_or(Death::Infinite, Death::Finite),
            dim,
        }
    }

    #[test]
    fn normalize_examples() {
        let d = PersistenceDiagram {
            points: vec![
                pt(1.0, None, HomologyDim::Zero),
                pt(1.0, Some(2.0), HomologyDim::Zero),
            ],
        };
        let n = normalize_diagram(&d);
        assert_eq!(n[0].to_row(), [0.5, 1.0, 1.0, 0.0, 0.0]);
        assert_eq!(n[1].to_row(), [0.5, 1.0, 0.0, 1.0, 0.0]);

        let d = PersistenceDiagram {
            points: vec![pt(0.0, None, HomologyDim::Zero)],
        };
        assert_eq!(normalize_diagram(&d)[0].to_row(), [0.0, 1.0, 1.0, 0.0, 0.0]);

        let d = PersistenceDiagram {
            points: vec![pt(2.0, None, HomologyDim::One)],
        };
        assert_eq!(normalize_diagram(&d)[0].to_row(), [1.0, 1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn single_vertex_dataset() {
        let g = Graph::new(1, []).unwrap();
        let ds = LabeledDataset::new(vec![g.clone(), g], vec![0, 1], 2).unwrap();
        let fd = extract_features::<f64>(&ds, 2, SignatureMode::ReturnProb, 1).unwrap();
        assert_eq!((fd.scales(), fd.slots()), (2, 1));
        let t = &fd.tensors()[0];
        for k in 0..2 {
            assert!(t.is_valid(k, 0));
            assert_eq!(t.point(k, 0), &[0.0, 1.0, 1.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn degree_mode_forest_has_no_cycles() {
        let ds = LabeledDataset::new(
            vec![
                Graph::path(5).unwrap(),
                Graph::new(6, [(0, 1), (0, 2), (0, 3), (4, 5)]).unwrap(),
            ],
            vec![0, 1],
            2,
        )
        .unwrap();
        let fd = extract_features::<f64>(&ds, 4, SignatureMode::Degree, 1).unwrap();
        assert_eq!(fd.scales(), 1);
        for t in fd.tensors() {
            assert_eq!(t.group_counts(0)[2], 0);
        }
    }

    #[test]
    fn parallel_extraction_matches_serial() {
        let ds = crate::graph_io::generate_synthetic(
            crate::graph_io::SyntheticKind::DensityPair,
            8,
            (5, 15),
            2,
        )
        .unwrap();
        let a = extract_features::<f64>(&ds, 3, SignatureMode::ReturnProb, 1).unwrap();
        let b = extract_features::<f64>(&ds, 3, SignatureMode::ReturnProb, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn padding_and_slot_helpers() {
        let pts = vec![vec![
            TaggedPoint { birth: 0.25, death: 1.0, group: PointGroup::FiniteH0 },
            TaggedPoint { birth: 0.5, death: 1.0, group: PointGroup::EssentialH0 },
        ]];
        let t = FeatureTensor::from_points(&pts, 3, 1).unwrap();
        assert_eq!(t.valid_count(0), 2);
        let p = t.padded(2);
        assert_eq!(p.slots(), 5);
        assert_eq!(p.valid_count(0), 2);
        assert!(p.data()[10..].iter().all(|&x| x == 0.0));
        let q = t.permute_slots(&[vec![2, 0, 1]]);
        assert_eq!(q.point(0, 2), t.point(0, 0));
        assert!(!q.is_valid(0, 1));
        assert!(FeatureTensor::from_points(&pts, 1, 0).is_err());
    }

    #[test]
    fn empty_dataset_rejected() {
        let g = Graph::new(1, []).unwrap();
        let ds = LabeledDataset::new(vec![g.clone(), g], vec![0, 1], 2).unwrap();
        assert!(extract_features::<f64>(&ds, 0, SignatureMode::ReturnProb, 1).is_err());
    }
}
