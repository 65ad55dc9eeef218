//! Dense reverse-mode substrate for the set network.

mod adam;
mod block;
mod checkpoint;
mod params;
mod tape;
mod tensor;

pub use adam::Adam;
pub use block::{block_forward, Activation, Block, BlockSpec, Linear, Mode, NormKind};
pub use checkpoint::{decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use params::{ParamId, ParamStore};
pub use tape::{softmax_rows, Gradients, Tape, Var};
pub use tensor::Tensor;

/// Softmax of a single vector.
pub fn softmax<T: crate::Scalar>(x: &[T]) -> Vec<T> {
    tape::softmax_rows(x, x.len().max(1))
}
