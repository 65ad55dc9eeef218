//! Self-check suites run by `rpnet verify`.
//!
//! Each suite draws seeded random cases and compares a fast code path
//! against an independent reference. The generators are public so tests can
//! reuse them.

use std::fmt;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::featurize::{FeatureTensor, PointGroup, TaggedPoint};
use crate::graph_io::Graph;
use crate::model::{Ablation, RpnetConfig, RpnetModel};
use crate::nn::{Mode, Tape};
use crate::persistence::{compute_diagram, compute_diagram_oracle, HomologyDim};
use crate::signature::{hop_of_scale, return_probabilities_naive, return_probabilities_spectral};
use crate::{rng, Result};

/// Step for central differences.
pub const GRAD_STEP: f64 = 1e-5;
/// Largest accepted relative error between analytic and numeric gradients.
pub const GRAD_TOLERANCE: f64 = 1e-4;
/// Denominator floor for the relative error. Below it the comparison is
/// effectively absolute, since central differences cannot resolve smaller
/// gradients at this step size.
pub const GRAD_FLOOR: f64 = 1e-5;
/// Largest accepted spectral vs naive difference.
pub const SIGNATURE_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub name: &'static str,
    pub checked: usize,
    pub failures: Vec<String>,
    pub elapsed: Duration,
    /// Suite-specific summary, e.g. the worst error seen.
    pub detail: String,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<12} {} ({} cases, {:.2?}{}{})",
            self.name,
            if self.passed() { "PASS" } else { "FAIL" },
            self.checked,
            self.elapsed,
            if self.detail.is_empty() { "" } else { ", " },
            self.detail
        )?;
        for msg in self.failures.iter().take(5) {
            write!(f, "\n    {msg}")?;
        }
        if self.failures.len() > 5 {
            write!(f, "\n    ... {} more", self.failures.len() - 5)?;
        }
        Ok(())
    }
}

/// Simple graph with `n` vertices and up to `max_edges` distinct random edges.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, max_edges: usize) -> Graph {
    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    pairs.shuffle(rng);
    let m = rng.random_range(0..=max_edges.min(pairs.len()));
    pairs.truncate(m);
    Graph::new(n, pairs).expect("distinct pairs form a simple graph")
}

/// Random bipartite graph on `n >= 2` vertices.
pub fn random_bipartite_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Graph {
    let left = rng.random_range(1..n);
    let mut side: Vec<bool> = (0..n).map(|i| i < left).collect();
    side.shuffle(rng);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if side[u] != side[v] && rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::new(n, edges).expect("generated edges are simple")
}

/// Vertex values with frequent ties: drawn from a handful of quarter steps
/// or, with a fixed chance, from a continuous range.
pub fn random_values(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let levels = rng.random_range(1..=4);
    (0..n)
        .map(|_| {
            if rng.random_bool(0.7) {
                rng.random_range(0..levels) as f64 * 0.25
            } else {
                rng.random_range(-1.0..1.0)
            }
        })
        .collect()
}

/// Feature tensor with a random number of valid points per scale.
pub fn random_feature_tensor(rng: &mut ChaCha8Rng, scales: usize, slots: usize, classes: usize) -> FeatureTensor<f64> {
    let groups = [PointGroup::EssentialH0, PointGroup::FiniteH0, PointGroup::EssentialH1];
    let points: Vec<Vec<TaggedPoint<f64>>> = (0..scales)
        .map(|_| {
            let n = rng.random_range(0..=slots);
            (0..n)
                .map(|_| {
                    let birth: f64 = rng.random();
                    let group = groups[rng.random_range(0..3)];
                    let death = if group == PointGroup::FiniteH0 { birth + (1.0 - birth) * rng.random::<f64>() } else { 1.0 };
                    TaggedPoint { birth, death, group }
                })
                .collect()
        })
        .collect();
    FeatureTensor::from_points(&points, slots, rng.random_range(0..classes)).expect("points fit in the slots")
}

/// Like [`random_feature_tensor`], but every scale starts with an essential
/// 0-dimensional point, as extracted diagrams always do.
pub fn random_graph_like_tensor(rng: &mut ChaCha8Rng, scales: usize, slots: usize, classes: usize) -> FeatureTensor<f64> {
    let t = random_feature_tensor(rng, scales, slots, classes);
    let points: Vec<Vec<TaggedPoint<f64>>> = (0..scales)
        .map(|k| {
            let mut pts = vec![TaggedPoint { birth: rng.random(), death: 1.0, group: PointGroup::EssentialH0 }];
            pts.extend((0..t.slots()).filter(|&l| t.is_valid(k, l)).take(slots - 1).map(|l| {
                let p = t.point(k, l);
                let group = [PointGroup::EssentialH0, PointGroup::FiniteH0, PointGroup::EssentialH1][(2..5).find(|&i| p[i] == 1.0).unwrap_or(2) - 2];
                TaggedPoint { birth: p[0], death: p[1], group }
            }));
            pts
        })
        .collect();
    FeatureTensor::from_points(&points, slots, t.label()).expect("points fit in the slots")
}

fn timed(name: &'static str, f: impl FnOnce(&mut SuiteReport)) -> SuiteReport {
    let start = Instant::now();
    let mut report = SuiteReport {
        name,
        checked: 0,
        failures: Vec::new(),
        elapsed: Duration::ZERO,
        detail: String::new(),
    };
    f(&mut report);
    report.elapsed = start.elapsed();
    report
}

/// Union-find sweep against the threshold-sweep oracle on graphs with
/// `n <= 12`, `m <= 20`.
pub fn persistence_suite(cases: usize, seed: u64) -> SuiteReport {
    timed("persistence", |r| {
        let mut rng = rng::stream(seed, &[1]);
        for case in 0..cases {
            let n = rng.random_range(1..=12);
            let g = random_graph(&mut rng, n, 20);
            let values = random_values(&mut rng, n);
            r.checked += 1;
            match (compute_diagram(&g, &values), compute_diagram_oracle(&g, &values)) {
                (Ok(a), Ok(b)) if a.same_multiset(&b) => {}
                (Ok(a), Ok(b)) => r.failures.push(format!(
                    "case {case}: n={n} m={} values={values:?}: sweep {:?} vs oracle {:?}",
                    g.m(),
                    a.sorted_points(),
                    b.sorted_points()
                )),
                (a, b) => r.failures.push(format!("case {case}: errors {:?} / {:?}", a.err(), b.err())),
            }
        }
    })
}

/// Components by union-find over the edge list, independent of adjacency.
fn union_find_components(g: &Graph) -> usize {
    let mut parent: Vec<usize> = (0..g.n()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut count = g.n();
    for &(u, v) in g.edges() {
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        if a != b {
            parent[a] = b;
            count -= 1;
        }
    }
    count
}

/// Essential 0-dimensional points count components; 1-dimensional points
/// count independent cycles.
pub fn betti_suite(cases: usize, seed: u64) -> SuiteReport {
    timed("betti", |r| {
        let mut rng = rng::stream(seed, &[2]);
        for case in 0..cases {
            let n = rng.random_range(1..=30);
            let g = random_graph(&mut rng, n, 45);
            let values = random_values(&mut rng, n);
            r.checked += 1;
            let d = match compute_diagram(&g, &values) {
                Ok(d) => d,
                Err(e) => {
                    r.failures.push(format!("case {case}: {e}"));
                    continue;
                }
            };
            let c = union_find_components(&g);
            let h0 = d.count(HomologyDim::Zero, true);
            let h1 = d.count(HomologyDim::One, true) + d.count(HomologyDim::One, false);
            let rank = g.m() + c - g.n();
            if h0 != c || h1 != rank {
                r.failures.push(format!("case {case}: n={n} m={}: h0 {h0} vs {c}, h1 {h1} vs {rank}", g.m()));
            }
        }
    })
}

/// Spectral vs naive return probabilities, plus exact zeros at odd hops on
/// bipartite graphs.
pub fn signature_suite(cases: usize, seed: u64) -> SuiteReport {
    timed("signature", |r| {
        let mut rng = rng::stream(seed, &[3]);
        let mut worst = 0.0f64;
        for case in 0..cases {
            let n = rng.random_range(1..=25);
            let g = random_graph(&mut rng, n, n * (n - 1) / 2);
            let k = rng.random_range(1..=8);
            r.checked += 1;
            let (a, b) = match (return_probabilities_naive::<f64>(&g, k), return_probabilities_spectral::<f64>(&g, k)) {
                (Ok(a), Ok(b)) => (a, b),
                (a, b) => {
                    r.failures.push(format!("case {case}: errors {:?} / {:?}", a.err(), b.err()));
                    continue;
                }
            };
            let diff = a.max_abs_diff(&b);
            worst = worst.max(diff);
            if diff >= SIGNATURE_TOLERANCE {
                r.failures.push(format!("case {case}: n={n} m={} K={k}: max difference {diff:e}", g.m()));
            }
        }
        for case in 0..cases.div_ceil(4) {
            let n = rng.random_range(2..=25);
            let g = random_bipartite_graph(&mut rng, n, 0.3);
            r.checked += 1;
            for (path, sig) in [
                ("naive", return_probabilities_naive::<f64>(&g, 8)),
                ("spectral", return_probabilities_spectral::<f64>(&g, 8)),
            ] {
                let sig = match sig {
                    Ok(s) => s,
                    Err(e) => {
                        r.failures.push(format!("bipartite case {case}: {e}"));
                        continue;
                    }
                };
                for col in (0..8).filter(|&c| hop_of_scale(c + 1) % 2 == 1) {
                    if let Some(v) = (0..n).find(|&v| sig.get(v, col) != 0.0) {
                        r.failures.push(format!(
                            "bipartite case {case}: {path} hop {} vertex {v} = {:e}",
                            hop_of_scale(col + 1),
                            sig.get(v, col)
                        ));
                    }
                }
            }
        }
        r.detail = format!("max difference {worst:.1e}");
    })
}

/// The small network used for gradient checks.
pub fn toy_config() -> RpnetConfig {
    RpnetConfig {
        encoder_widths: vec![6, 6],
        decoder_widths: vec![6],
        head_widths: vec![6],
        dropout: 0.0,
        ..RpnetConfig::new(2, 2)
    }
}

/// Worst relative error over every trainable parameter entry.
#[derive(Clone, Debug)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub worst: String,
    pub entries: usize,
    /// Entries whose `+h` and `-h` evaluations fall on different sides of
    /// an activation kink; central differences do not estimate the
    /// derivative there, so they are not compared.
    pub kink_skips: usize,
}

fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(GRAD_FLOOR)
}

/// Compares backpropagated gradients of the batch loss with central
/// differences. `training` evaluates norms in training mode (batch
/// statistics); dropout must be off for the loss to be deterministic.
pub fn gradient_check(model: &mut RpnetModel<f64>, batch: &[&FeatureTensor<f64>], training: bool) -> Result<GradCheck> {
    gradient_check_with_step(model, batch, training, GRAD_STEP)
}

/// [`gradient_check`] with an explicit difference step.
pub fn gradient_check_with_step(
    model: &mut RpnetModel<f64>,
    batch: &[&FeatureTensor<f64>],
    training: bool,
    step: f64,
) -> Result<GradCheck> {
    fn record(model: &RpnetModel<f64>, batch: &[&FeatureTensor<f64>], training: bool) -> Result<(Tape<f64>, crate::nn::Var)> {
        let mut rng = rng::stream(0, &[rng::DROPOUT]);
        let mut mode = if training { Mode::Train(&mut rng) } else { Mode::Eval };
        let mut tape = Tape::new();
        let loss = model.loss_on_tape(&mut tape, batch, &mut mode)?;
        Ok((tape, loss))
    }
    let (tape, loss) = record(model, batch, training)?;
    let grads = tape.backward(loss)?;
    let ids: Vec<_> = model.params().ids().filter(|&id| model.params().is_trainable(id)).collect();
    let mut check = GradCheck {
        max_rel_error: 0.0,
        worst: String::new(),
        entries: 0,
        kink_skips: 0,
    };
    for id in ids {
        let len = model.params().get(id).len();
        let analytic: Vec<f64> = grads.param(id).map_or(vec![0.0; len], |g| g.data().to_vec());
        for i in 0..len {
            let orig = model.params().get(id).data()[i];
            model.params_mut().get_mut(id).data_mut()[i] = orig + step;
            let (up_tape, up) = record(model, batch, training)?;
            model.params_mut().get_mut(id).data_mut()[i] = orig - step;
            let (down_tape, down) = record(model, batch, training)?;
            model.params_mut().get_mut(id).data_mut()[i] = orig;
            check.entries += 1;
            if up_tape.activation_pattern() != down_tape.activation_pattern() {
                check.kink_skips += 1;
                continue;
            }
            let numeric = (up_tape.value(up).data()[0] - down_tape.value(down).data()[0]) / (2.0 * step);
            let err = rel_error(analytic[i], numeric);
            if err > check.max_rel_error {
                check.max_rel_error = err;
                check.worst = format!("{}[{i}]: analytic {:e}, numeric {:e}", model.params().name(id), analytic[i], numeric);
            }
        }
    }
    Ok(check)
}

/// Finite-difference checks on toy networks (K=2, L=4, widths 6, C=2,
/// dropout off) with random graph-like inputs and random diagram-pool
/// logits. A batch row with no points at all would put every head unit
/// exactly on the activation kink, where central differences are off by
/// O(h); extracted diagrams never are empty. The
/// first case uses the default configuration; later ones vary the norm,
/// activation and ablation flags.
pub fn gradient_suite(cases: usize, seed: u64) -> SuiteReport {
    use crate::nn::{Activation, NormKind};
    timed("gradient", |r| {
        let mut rng = rng::stream(seed, &[4]);
        let mut worst = 0.0f64;
        let (mut entries, mut skips) = (0, 0);
        for case in 0..cases {
            let mut config = toy_config();
            if case > 0 {
                config.norm = [NormKind::Layer, NormKind::Batch, NormKind::None][case % 3];
                config.activation = [Activation::Relu, Activation::Elu][(case / 3) % 2];
                if case % 4 == 3 {
                    config = config.ablation_variant(Ablation::NoOnehotConcat);
                }
                if case % 5 == 4 {
                    config = config.ablation_variant(Ablation::NoOnehotInput);
                }
            }
            let norm = config.norm;
            let mut model = match RpnetModel::<f64>::new(config, rng.random()) {
                Ok(m) => m,
                Err(e) => {
                    r.failures.push(format!("case {case}: {e}"));
                    continue;
                }
            };
            let w = model.diagram_logits();
            for x in model.params_mut().get_mut(w).data_mut() {
                *x = rng.random_range(-1.0..1.0);
            }
            let tensors: Vec<_> = (0..4).map(|_| random_graph_like_tensor(&mut rng, 2, 4, 2)).collect();
            let batch: Vec<_> = tensors.iter().collect();
            let training = norm == NormKind::Batch;
            r.checked += 1;
            match gradient_check(&mut model, &batch, training) {
                Ok(c) => {
                    worst = worst.max(c.max_rel_error);
                    entries += c.entries;
                    skips += c.kink_skips;
                    if c.max_rel_error >= GRAD_TOLERANCE {
                        r.failures.push(format!("case {case} ({norm:?}): rel error {:.2e} at {}", c.max_rel_error, c.worst));
                    }
                }
                Err(e) => r.failures.push(format!("case {case}: {e}")),
            }
        }
        r.detail = format!("max relative error {worst:.1e}, {entries} entries, {skips} skipped at kinks");
    })
}

/// Slot permutation and padding leave outputs bitwise equal; zero pooling
/// logits match average pooling.
pub fn invariance_suite(cases: usize, seed: u64) -> SuiteReport {
    timed("invariance", |r| {
        let mut rng = rng::stream(seed, &[5]);
        let mut worst = 0.0f64;
        for case in 0..cases {
            let k = rng.random_range(1..=4);
            let slots = rng.random_range(1..=8);
            let config = RpnetConfig {
                encoder_widths: vec![8, 8],
                decoder_widths: vec![8],
                head_widths: vec![8],
                ..RpnetConfig::new(k, 3)
            };
            let result = (|| -> Result<Option<String>> {
                let model = RpnetModel::<f64>::new(config.clone(), rng.random())?;
                let tensors: Vec<_> = (0..3).map(|_| random_feature_tensor(&mut rng, k, slots, 3)).collect();
                let base = model.forward(&tensors.iter().collect::<Vec<_>>(), false, 0)?;
                let permuted: Vec<_> = tensors
                    .iter()
                    .map(|t| {
                        let perm: Vec<Vec<usize>> = (0..k)
                            .map(|_| {
                                let mut p: Vec<usize> = (0..slots).collect();
                                p.shuffle(&mut rng);
                                p
                            })
                            .collect();
                        t.permute_slots(&perm)
                    })
                    .collect();
                let extra = rng.random_range(1..=6);
                let padded: Vec<_> = tensors.iter().map(|t| t.padded(extra)).collect();
                for (what, other) in [("permuted", &permuted), ("padded", &padded)] {
                    if model.forward(&other.iter().collect::<Vec<_>>(), false, 0)? != base {
                        return Ok(Some(format!("{what} input changed the output")));
                    }
                }
                let averaged = RpnetModel::<f64>::new(config.ablation_variant(Ablation::AveragePool), 0).and_then(|mut m| {
                    m.load_params(model.params().clone())?;
                    m.forward(&tensors.iter().collect::<Vec<_>>(), false, 0)
                })?;
                let diff = base.data().iter().zip(averaged.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                worst = worst.max(diff);
                if diff >= 1e-12 {
                    return Ok(Some(format!("zero logits differ from average pooling by {diff:e}")));
                }
                Ok(None)
            })();
            r.checked += 1;
            match result {
                Ok(None) => {}
                Ok(Some(msg)) => r.failures.push(format!("case {case}: {msg}")),
                Err(e) => r.failures.push(format!("case {case}: {e}")),
            }
        }
        r.detail = format!("max pooling difference {worst:.1e}");
    })
}

/// Runs every suite. `quick` shrinks the case counts to a few seconds' work.
pub fn run_suites(quick: bool, seed: u64) -> Vec<SuiteReport> {
    let scale = |full: usize, fast: usize| if quick { fast } else { full };
    vec![
        persistence_suite(scale(500, 100), seed),
        betti_suite(scale(200, 50), seed),
        signature_suite(scale(200, 40), seed),
        gradient_suite(scale(12, 3), seed),
        invariance_suite(scale(100, 20), seed),
    ]
}
