//! The set network over `K` padded diagrams.
//!
//! Per point: encoder on the 5-vector (or its birth/death pair), the input
//! one-hot appended, decoder to width `d`. Points are sum-pooled per diagram
//! (masked slots excluded), diagrams are pooled with weights `softmax(w)` or
//! uniformly, and an MLP head produces class logits.

use std::cmp::Ordering;

use crate::featurize::{FeatureTensor, POINT_WIDTH};
use crate::nn::{Activation, Block, BlockSpec, Linear, Mode, NormKind, ParamId, ParamStore, Tape, Tensor, Var};
use crate::{rng, Error, Result, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiagramPool {
    SoftmaxWeighted,
    Average,
}

impl std::str::FromStr for DiagramPool {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "softmax_weighted" | "weighted" => Ok(DiagramPool::SoftmaxWeighted),
            "average" | "avg" => Ok(DiagramPool::Average),
            _ => Err(Error::Config(format!("unknown diagram pooling {s:?}"))),
        }
    }
}

/// Architecture ablations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ablation {
    /// Encoder sees only birth and death.
    NoOnehotInput,
    /// One-hot is not re-appended before the decoder.
    NoOnehotConcat,
    /// Diagrams are averaged instead of softmax-weighted.
    AveragePool,
}

impl Ablation {
    pub const ALL: [Ablation; 3] = [Ablation::NoOnehotInput, Ablation::NoOnehotConcat, Ablation::AveragePool];

    pub fn name(self) -> &'static str {
        match self {
            Ablation::NoOnehotInput => "no_onehot_1",
            Ablation::NoOnehotConcat => "no_onehot_2",
            Ablation::AveragePool => "avg_pool",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RpnetConfig {
    pub scales: usize,
    pub num_classes: usize,
    /// Encoder block widths; 2 to 5 blocks, the last width is `d'`.
    pub encoder_widths: Vec<usize>,
    /// Decoder block widths; the last width is `d`.
    pub decoder_widths: Vec<usize>,
    /// Hidden head widths before the final linear layer to `num_classes`.
    pub head_widths: Vec<usize>,
    pub norm: NormKind,
    pub dropout: f64,
    pub activation: Activation,
    pub diagram_pool: DiagramPool,
    pub use_onehot_input: bool,
    pub use_onehot_concat: bool,
}

impl RpnetConfig {
    pub fn new(scales: usize, num_classes: usize) -> Self {
        RpnetConfig {
            scales,
            num_classes,
            encoder_widths: vec![64, 64],
            decoder_widths: vec![64],
            head_widths: vec![64],
            norm: NormKind::Layer,
            dropout: 0.1,
            activation: Activation::Relu,
            diagram_pool: DiagramPool::SoftmaxWeighted,
            use_onehot_input: true,
            use_onehot_concat: true,
        }
    }

    pub fn encoder_input_width(&self) -> usize {
        if self.use_onehot_input {
            POINT_WIDTH
        } else {
            2
        }
    }

    pub fn decoder_input_width(&self) -> usize {
        let d_enc = *self.encoder_widths.last().unwrap_or(&0);
        if self.use_onehot_concat {
            d_enc + 3
        } else {
            d_enc
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.scales == 0 {
            return Err(Error::Config("K must be at least 1".into()));
        }
        if self.num_classes < 2 {
            return Err(Error::Config("need at least two classes".into()));
        }
        if !(2..=5).contains(&self.encoder_widths.len()) {
            return Err(Error::Config(format!(
                "encoder needs 2 to 5 blocks, got {}",
                self.encoder_widths.len()
            )));
        }
        if self.decoder_widths.is_empty() {
            return Err(Error::Config("decoder needs at least one block".into()));
        }
        let widths = self.encoder_widths.iter().chain(&self.decoder_widths).chain(&self.head_widths);
        if widths.into_iter().any(|&w| w == 0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} not in [0, 1)", self.dropout)));
        }
        Ok(())
    }

    pub fn ablation_variant(&self, which: Ablation) -> Self {
        let mut c = self.clone();
        match which {
            Ablation::NoOnehotInput => c.use_onehot_input = false,
            Ablation::NoOnehotConcat => c.use_onehot_concat = false,
            Ablation::AveragePool => c.diagram_pool = DiagramPool::Average,
        }
        c
    }
}

#[derive(Clone, Debug)]
pub struct RpnetModel<T> {
    config: RpnetConfig,
    store: ParamStore<T>,
    encoder: Vec<Block>,
    decoder: Vec<Block>,
    head: Vec<Block>,
    output: Linear,
    diagram_logits: ParamId,
}

fn stack<T: Scalar>(
    store: &mut ParamStore<T>,
    prefix: &str,
    input: usize,
    widths: &[usize],
    config: &RpnetConfig,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<Vec<Block>> {
    let mut blocks = Vec::with_capacity(widths.len());
    let mut from = input;
    for (i, &w) in widths.iter().enumerate() {
        let spec = BlockSpec {
            input: from,
            output: w,
            norm: config.norm,
            dropout: config.dropout,
            activation: config.activation,
        };
        blocks.push(Block::new(store, &format!("{prefix}.{i}"), spec, rng)?);
        from = w;
    }
    Ok(blocks)
}

/// Rows of `probs` are distributions; returns the mean negative
/// log-probability of `labels`.
pub fn cross_entropy<T: Scalar>(probs: &Tensor<T>, labels: &[usize]) -> Result<T> {
    let classes = probs.cols();
    if labels.len() != probs.rows() {
        return Err(Error::arg("label count differs from batch size"));
    }
    let mut total = T::zero();
    for (r, &y) in labels.iter().enumerate() {
        if y >= classes {
            return Err(Error::arg(format!("label {y} >= number of classes {classes}")));
        }
        total -= probs.at(r, y).ln();
    }
    Ok(total / T::from_usize_lossy(labels.len().max(1)))
}

fn cmp_rows<T: Scalar>(a: &[T], b: &[T]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.partial_cmp(y).unwrap_or(Ordering::Equal))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

impl<T: Scalar> RpnetModel<T> {
    pub fn new(config: RpnetConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = rng::stream(seed, &[rng::INIT]);
        let mut store = ParamStore::new();
        let encoder = stack(&mut store, "encoder", config.encoder_input_width(), &config.encoder_widths, &config, &mut rng)?;
        let decoder = stack(&mut store, "decoder", config.decoder_input_width(), &config.decoder_widths, &config, &mut rng)?;
        let d = *config.decoder_widths.last().expect("validated");
        let head = stack(&mut store, "head", d, &config.head_widths, &config, &mut rng)?;
        let last = config.head_widths.last().copied().unwrap_or(d);
        let output = Linear::new(&mut store, "head.out", last, config.num_classes, &mut rng);
        let diagram_logits = store.add("diagram_logits", Tensor::zeros(vec![config.scales]), true);
        Ok(RpnetModel {
            config,
            store,
            encoder,
            decoder,
            head,
            output,
            diagram_logits,
        })
    }

    pub fn config(&self) -> &RpnetConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore<T> {
        &self.store
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.store
    }

    pub fn diagram_logits(&self) -> ParamId {
        self.diagram_logits
    }

    /// Replaces all tensors with those of `store`, which must have the same
    /// names and shapes.
    pub fn load_params(&mut self, store: ParamStore<T>) -> Result<()> {
        let compatible = store.len() == self.store.len()
            && self.store.ids().all(|id| {
                store.name(id) == self.store.name(id) && store.get(id).shape() == self.store.get(id).shape()
            });
        if !compatible {
            return Err(Error::arg("checkpoint does not match the model architecture"));
        }
        self.store = store;
        Ok(())
    }

    /// Diagram pooling weights currently in effect.
    pub fn diagram_weights(&self) -> Vec<T> {
        let k = self.config.scales;
        match self.config.diagram_pool {
            DiagramPool::Average => vec![T::from_usize_lossy(k).recip(); k],
            DiagramPool::SoftmaxWeighted => crate::nn::softmax(self.store.get(self.diagram_logits).data()),
        }
    }

    /// Records the network on `tape` and returns the `batch x C` logits.
    ///
    /// The real points of each diagram are visited in lexicographic order of
    /// their 5-vectors, so the result does not depend on slot order or on
    /// padding.
    pub fn forward_logits(&self, tape: &mut Tape<T>, batch: &[&FeatureTensor<T>], mode: &mut Mode<'_>) -> Result<Var> {
        let k = self.config.scales;
        let in_width = self.config.encoder_input_width();
        let mut inputs = Vec::new();
        let mut onehots = Vec::new();
        let mut segment = Vec::new();
        for (b, t) in batch.iter().enumerate() {
            if t.scales() != k {
                return Err(Error::arg(format!("feature tensor has K = {}, model expects {k}", t.scales())));
            }
            for s in 0..k {
                let mut slots: Vec<usize> = (0..t.slots()).filter(|&l| t.is_valid(s, l)).collect();
                slots.sort_by(|&x, &y| cmp_rows(t.point(s, x), t.point(s, y)));
                for l in slots {
                    let p = t.point(s, l);
                    inputs.extend_from_slice(&p[..in_width]);
                    onehots.extend_from_slice(&p[2..]);
                    segment.push(b * k + s);
                }
            }
        }
        let rows = segment.len();
        let mut h = tape.constant(Tensor::matrix(rows, in_width, inputs)?)?;
        for block in &self.encoder {
            h = block.forward(tape, &self.store, h, mode)?;
        }
        if self.config.use_onehot_concat {
            let oh = tape.constant(Tensor::matrix(rows, 3, onehots)?)?;
            h = tape.concat_cols(h, oh)?;
        }
        for block in &self.decoder {
            h = block.forward(tape, &self.store, h, mode)?;
        }
        let per_diagram = tape.segment_sum(h, segment, batch.len() * k)?;
        let logits = match self.config.diagram_pool {
            DiagramPool::SoftmaxWeighted => Some(tape.param(&self.store, self.diagram_logits)?),
            DiagramPool::Average => None,
        };
        let mut g = tape.diagram_pool(per_diagram, k, logits)?;
        for block in &self.head {
            g = block.forward(tape, &self.store, g, mode)?;
        }
        self.output.forward(tape, &self.store, g)
    }

    /// Class probabilities, one row per graph. `seed` drives dropout when
    /// `training` is set.
    pub fn forward(&self, batch: &[&FeatureTensor<T>], training: bool, seed: u64) -> Result<Tensor<T>> {
        let mut tape = Tape::new();
        let mut rng = rng::stream(seed, &[rng::DROPOUT]);
        let mut mode = if training { Mode::Train(&mut rng) } else { Mode::Eval };
        let logits = self.forward_logits(&mut tape, batch, &mut mode)?;
        let z = tape.value(logits);
        Tensor::matrix(z.rows(), z.cols(), crate::nn::softmax_rows(z.data(), z.cols()))
    }

    pub fn predict(&self, batch: &[&FeatureTensor<T>]) -> Result<Vec<usize>> {
        let probs = self.forward(batch, false, 0)?;
        Ok((0..probs.rows())
            .map(|r| {
                probs
                    .row(r)
                    .iter()
                    .enumerate()
                    .fold((0, T::neg_infinity()), |best, (c, &p)| if p > best.1 { (c, p) } else { best })
                    .0
            })
            .collect())
    }

    /// Records the fused cross-entropy of the batch against its labels.
    pub fn loss_on_tape(&self, tape: &mut Tape<T>, batch: &[&FeatureTensor<T>], mode: &mut Mode<'_>) -> Result<Var> {
        let logits = self.forward_logits(tape, batch, mode)?;
        let labels: Vec<usize> = batch.iter().map(|t| t.label()).collect();
        tape.softmax_cross_entropy(logits, &labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featurize::{PointGroup, TaggedPoint};
    use rand::{Rng, SeedableRng};

    fn small_config(scales: usize) -> RpnetConfig {
        RpnetConfig {
            encoder_widths: vec![6, 6],
            decoder_widths: vec![6],
            head_widths: vec![6],
            dropout: 0.0,
            ..RpnetConfig::new(scales, 2)
        }
    }

    fn random_tensor(rng: &mut rand_chacha::ChaCha8Rng, scales: usize, slots: usize) -> FeatureTensor<f64> {
        let groups = [PointGroup::EssentialH0, PointGroup::FiniteH0, PointGroup::EssentialH1];
        let points: Vec<Vec<TaggedPoint<f64>>> = (0..scales)
            .map(|_| {
                let n = rng.random_range(0..=slots);
                (0..n)
                    .map(|_| {
                        let b: f64 = rng.random();
                        TaggedPoint { birth: b, death: b + (1.0 - b) * rng.random::<f64>(), group: groups[rng.random_range(0..3)] }
                    })
                    .collect()
            })
            .collect();
        FeatureTensor::from_points(&points, slots, rng.random_range(0..2)).unwrap()
    }

    #[test]
    fn ablation_widths() {
        let c = small_config(2);
        assert_eq!(c.decoder_input_width(), 9);
        assert_eq!(c.ablation_variant(Ablation::NoOnehotConcat).decoder_input_width(), 6);
        assert_eq!(c.ablation_variant(Ablation::NoOnehotInput).encoder_input_width(), 2);
        assert_eq!(c.ablation_variant(Ablation::AveragePool).diagram_pool, DiagramPool::Average);
    }

    #[test]
    fn config_validation() {
        let mut c = small_config(2);
        c.encoder_widths = vec![4];
        assert!(c.validate().is_err());
        c.encoder_widths = vec![4; 6];
        assert!(c.validate().is_err());
        let mut c = small_config(2);
        c.num_classes = 1;
        assert!(c.validate().is_err());
    }

    #[test]
    fn rows_are_distributions_and_slot_order_is_irrelevant() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let model = RpnetModel::<f64>::new(small_config(3), 4).unwrap();
        let batch: Vec<_> = (0..4).map(|_| random_tensor(&mut rng, 3, 5)).collect();
        let refs: Vec<_> = batch.iter().collect();
        let probs = model.forward(&refs, false, 0).unwrap();
        for r in 0..4 {
            assert!((probs.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(probs.row(r).iter().all(|&p| p >= 0.0));
        }
        let shuffled: Vec<_> = batch.iter().map(|t| t.permute_slots(&vec![vec![4, 2, 0, 1, 3]; 3])).collect();
        let padded: Vec<_> = batch.iter().map(|t| t.padded(7)).collect();
        for other in [shuffled, padded] {
            let refs: Vec<_> = other.iter().collect();
            assert_eq!(model.forward(&refs, false, 0).unwrap(), probs);
        }
    }

    #[test]
    fn zero_logits_equal_average_pool() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let batch: Vec<_> = (0..3).map(|_| random_tensor(&mut rng, 4, 4)).collect();
        let refs: Vec<_> = batch.iter().collect();
        let weighted = RpnetModel::<f64>::new(small_config(4), 9).unwrap();
        let averaged = RpnetModel::<f64>::new(small_config(4).ablation_variant(Ablation::AveragePool), 9).unwrap();
        let a = weighted.forward(&refs, false, 0).unwrap();
        let b = averaged.forward(&refs, false, 0).unwrap();
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn single_scale_pooling_ignores_logits() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let batch: Vec<_> = (0..2).map(|_| random_tensor(&mut rng, 1, 4)).collect();
        let refs: Vec<_> = batch.iter().collect();
        let mut model = RpnetModel::<f64>::new(small_config(1), 1).unwrap();
        let before = model.forward(&refs, false, 0).unwrap();
        let w = model.diagram_logits();
        *model.params_mut().get_mut(w) = Tensor::vector(vec![3.7]);
        assert_eq!(model.diagram_weights(), vec![1.0]);
        assert_eq!(model.forward(&refs, false, 0).unwrap(), before);
    }

    #[test]
    fn average_pool_leaves_logits_without_gradient() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let batch: Vec<_> = (0..3).map(|_| random_tensor(&mut rng, 2, 4)).collect();
        let refs: Vec<_> = batch.iter().collect();
        let model = RpnetModel::<f64>::new(small_config(2).ablation_variant(Ablation::AveragePool), 2).unwrap();
        let mut tape = Tape::new();
        let loss = model.loss_on_tape(&mut tape, &refs, &mut Mode::Eval).unwrap();
        let grads = tape.backward(loss).unwrap();
        assert!(grads
            .param(model.diagram_logits())
            .is_none_or(|g| g.data().iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn onehot_blind_variant_ignores_onehot() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let config = small_config(2)
            .ablation_variant(Ablation::NoOnehotInput)
            .ablation_variant(Ablation::NoOnehotConcat);
        let model = RpnetModel::<f64>::new(config, 3).unwrap();
        let t = random_tensor(&mut rng, 2, 6);
        let u = t.with_onehot([0.0, 0.0, 1.0]);
        assert_ne!(t, u);
        assert_eq!(model.forward(&[&t], false, 0).unwrap(), model.forward(&[&u], false, 0).unwrap());
    }

    #[test]
    fn shape_mismatch_and_empty_diagrams() {
        let model = RpnetModel::<f64>::new(small_config(2), 0).unwrap();
        let t = FeatureTensor::<f64>::from_points(&[vec![]], 3, 0).unwrap();
        assert!(model.forward(&[&t], false, 0).is_err());
        let empty = FeatureTensor::<f64>::from_points(&[vec![], vec![]], 3, 0).unwrap();
        let p = model.forward(&[&empty], false, 0).unwrap();
        assert!((p.row(0).iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_examples() {
        let uniform = Tensor::matrix(2, 3, vec![1.0 / 3.0; 6]).unwrap();
        assert!((cross_entropy(&uniform, &[0, 2]).unwrap() - 3f64.ln()).abs() < 1e-15);
        let sure = Tensor::matrix(1, 2, vec![0.0, 1.0]).unwrap();
        assert_eq!(cross_entropy(&sure, &[1]).unwrap(), 0.0);
        let p = Tensor::matrix(2, 2, vec![0.5, 0.5, 0.75, 0.25]).unwrap();
        assert!((cross_entropy(&p, &[0, 1]).unwrap() - 1.039_720_770_839_918_f64).abs() < 1e-12);
        assert!(cross_entropy(&p, &[0, 2]).is_err());
    }

    #[test]
    fn single_precision_model() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        let t = random_tensor(&mut rng, 2, 4);
        let t32 = FeatureTensor::<f32>::from_raw(
            2,
            4,
            t.data().iter().map(|&x| x as f32).collect(),
            t.mask().to_vec(),
            t.label(),
        )
        .unwrap();
        let model = RpnetModel::<f32>::new(small_config(2), 1).unwrap();
        let p = model.forward(&[&t32], false, 0).unwrap();
        assert!((p.row(0).iter().sum::<f32>() - 1.0).abs() < 1e-5);
    }
}
