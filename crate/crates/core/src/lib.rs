//! Graph classification from persistence diagrams of multi-scale random-walk
//! return probabilities.
//!
//! The pipeline is: [`graph_io`] loads or generates labeled graphs,
//! [`signature`] computes per-vertex return probabilities for several walk
//! lengths, [`persistence`] turns each signature into a 0/1-dimensional
//! sublevel persistence diagram, [`featurize`] encodes the diagrams as padded
//! `K x L x 5` tensors, and [`model`] / [`train`] fit a permutation-invariant
//! set network on them with cross-validation.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix the precision used by the CLI and the file formats.

pub mod cli;
pub mod error;
pub mod featurize;
pub mod graph_io;
pub mod model;
pub mod nn;
pub mod persistence;
pub mod rng;
pub mod scalar;
pub mod signature;
pub mod train;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use featurize::{FeatureDataset, FeatureTensor, PointGroup, SignatureMode, TaggedPoint};
pub use graph_io::{Graph, LabeledDataset, SyntheticKind};
pub use model::{DiagramPool, RpnetConfig, RpnetModel};
pub use nn::{Activation, NormKind, Tensor};
pub use persistence::{Death, HomologyDim, PersistenceDiagram, PersistencePoint};
pub use signature::SignatureMatrix;
pub use train::{CvReport, FoldResult, TrainConfig};

pub type Tensor64 = Tensor<f64>;
pub type Tensor32 = Tensor<f32>;
pub type SignatureMatrix64 = SignatureMatrix<f64>;
pub type PersistenceDiagram64 = PersistenceDiagram<f64>;
pub type FeatureTensor64 = FeatureTensor<f64>;
pub type FeatureDataset64 = FeatureDataset<f64>;
pub type RpnetModel64 = RpnetModel<f64>;
pub type RpnetModel32 = RpnetModel<f32>;
