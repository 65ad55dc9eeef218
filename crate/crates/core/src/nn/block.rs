//! Linear -> norm -> dropout -> activation blocks.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{ParamId, ParamStore, Tape, Tensor, Var};
use crate::{rng, Error, Result, Scalar};

const NORM_EPS: f64 = 1e-5;
const RUNNING_MOMENTUM: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    Layer,
    Batch,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Elu,
}

impl std::str::FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "layer" => Ok(NormKind::Layer),
            "batch" => Ok(NormKind::Batch),
            "none" => Ok(NormKind::None),
            _ => Err(Error::Config(format!("unknown norm {s:?}"))),
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "elu" => Ok(Activation::Elu),
            _ => Err(Error::Config(format!("unknown activation {s:?}"))),
        }
    }
}

/// Training draws dropout masks from the given stream; evaluation is
/// deterministic.
pub enum Mode<'a> {
    Train(&'a mut ChaCha8Rng),
    Eval,
}

impl Mode<'_> {
    pub fn is_training(&self) -> bool {
        matches!(self, Mode::Train(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockSpec {
    pub input: usize,
    pub output: usize,
    pub norm: NormKind,
    pub dropout: f64,
    pub activation: Activation,
}

/// Affine map `x W^T + b`, `W: out x in`.
#[derive(Clone, Debug)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
    pub input: usize,
    pub output: usize,
}

impl Linear {
    /// Glorot-uniform weights, zero bias.
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        name: &str,
        input: usize,
        output: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let bound = (6.0 / (input + output) as f64).sqrt();
        let w = (0..input * output)
            .map(|_| T::lit(rng.random_range(-bound..=bound)))
            .collect();
        let weight = store.add(
            format!("{name}.weight"),
            Tensor::matrix(output, input, w).expect("shape"),
            true,
        );
        let bias = store.add(format!("{name}.bias"), Tensor::zeros(vec![output]), true);
        Linear {
            weight,
            bias,
            input,
            output,
        }
    }

    pub fn forward<T: Scalar>(&self, tape: &mut Tape<T>, store: &ParamStore<T>, x: Var) -> Result<Var> {
        let w = tape.param(store, self.weight)?;
        let b = tape.param(store, self.bias)?;
        tape.linear(x, w, b)
    }
}

#[derive(Clone, Debug)]
struct NormParams {
    gamma: ParamId,
    beta: ParamId,
    running: Option<(ParamId, ParamId)>,
}

#[derive(Clone, Debug)]
pub struct Block {
    pub spec: BlockSpec,
    pub linear: Linear,
    norm: Option<NormParams>,
}

impl Block {
    pub fn new<T: Scalar>(
        store: &mut ParamStore<T>,
        name: &str,
        spec: BlockSpec,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&spec.dropout) {
            return Err(Error::Config(format!("dropout rate {} not in [0, 1)", spec.dropout)));
        }
        if spec.input == 0 || spec.output == 0 {
            return Err(Error::Config(format!("{name}: zero-width layer")));
        }
        let linear = Linear::new(store, name, spec.input, spec.output, rng);
        let norm = match spec.norm {
            NormKind::None => None,
            kind => {
                let ones = Tensor::new(vec![spec.output], vec![T::one(); spec.output])?;
                let gamma = store.add(format!("{name}.norm.scale"), ones.clone(), true);
                let beta = store.add(format!("{name}.norm.shift"), Tensor::zeros(vec![spec.output]), true);
                let running = (kind == NormKind::Batch).then(|| {
                    (
                        store.add(format!("{name}.norm.running_mean"), Tensor::zeros(vec![spec.output]), false),
                        store.add(format!("{name}.norm.running_var"), ones, false),
                    )
                });
                Some(NormParams { gamma, beta, running })
            }
        };
        Ok(Block { spec, linear, norm })
    }

    pub fn forward<T: Scalar>(
        &self,
        tape: &mut Tape<T>,
        store: &ParamStore<T>,
        x: Var,
        mode: &mut Mode<'_>,
    ) -> Result<Var> {
        let width = tape.value(x).cols();
        if width != self.spec.input {
            return Err(Error::arg(format!(
                "block expects width {}, got {width}",
                self.spec.input
            )));
        }
        let mut h = self.linear.forward(tape, store, x)?;
        if let Some(norm) = &self.norm {
            let gamma = tape.param(store, norm.gamma)?;
            let beta = tape.param(store, norm.beta)?;
            let eps = T::lit(NORM_EPS);
            h = match (self.spec.norm, &norm.running, mode.is_training()) {
                (NormKind::Batch, Some((rm, rv)), true) => {
                    let rows = tape.value(h).rows();
                    let (out, mean, var) = tape.norm(h, gamma, beta, false, eps)?;
                    let m = T::lit(RUNNING_MOMENTUM);
                    let unbias = if rows > 1 {
                        T::from_usize_lossy(rows) / T::from_usize_lossy(rows - 1)
                    } else {
                        T::one()
                    };
                    let blend = |old: &Tensor<T>, new: &[T], f: T| {
                        Tensor::vector(
                            old.data()
                                .iter()
                                .zip(new)
                                .map(|(&o, &n)| (T::one() - m) * o + m * n * f)
                                .collect(),
                        )
                    };
                    let new_mean = blend(store.get(*rm), &mean, T::one());
                    let new_var = blend(store.get(*rv), &var, unbias);
                    tape.queue_buffer_update(*rm, new_mean);
                    tape.queue_buffer_update(*rv, new_var);
                    out
                }
                (NormKind::Batch, Some((rm, rv)), false) => {
                    let mean = store.get(*rm).data().to_vec();
                    let var = store.get(*rv).data().to_vec();
                    tape.norm_fixed(h, gamma, beta, &mean, &var, eps)?
                }
                _ => tape.norm(h, gamma, beta, true, eps)?.0,
            };
        }
        if let Mode::Train(rng) = mode {
            if self.spec.dropout > 0.0 {
                let keep = 1.0 - self.spec.dropout;
                let scale = T::lit(1.0 / keep);
                let factors = (0..tape.value(h).len())
                    .map(|_| if rng.random::<f64>() < keep { scale } else { T::zero() })
                    .collect();
                h = tape.scale(h, factors)?;
            }
        }
        match self.spec.activation {
            Activation::Relu => tape.relu(h),
            Activation::Elu => tape.elu(h),
        }
    }
}

/// Runs one block on `x` outside of any larger graph. `seed` drives the
/// dropout mask when `training` is set.
pub fn block_forward<T: Scalar>(
    block: &Block,
    store: &ParamStore<T>,
    x: &Tensor<T>,
    training: bool,
    seed: u64,
) -> Result<Tensor<T>> {
    let mut tape = Tape::new();
    let xv = tape.constant(x.clone())?;
    let mut rng = rng::stream(seed, &[rng::DROPOUT]);
    let mut mode = if training { Mode::Train(&mut rng) } else { Mode::Eval };
    let y = block.forward(&mut tape, store, xv, &mut mode)?;
    Ok(tape.value(y).clone())
}
