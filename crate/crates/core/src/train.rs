//! Cross-validated training.
//!
//! Each fold trains with mini-batch Adam under a step-decayed learning rate
//! and stops once the training epoch loss has gone `patience` epochs without
//! a new strict minimum. The reported accuracy of a fold is its test accuracy
//! at the epoch of lowest training loss, and the returned model is restored
//! to that epoch. The test fold never influences selection.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::RealField;
use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::featurize::{FeatureDataset, FeatureTensor};
use crate::model::{RpnetConfig, RpnetModel};
use crate::nn::{Adam, Mode, Tape};
use crate::{rng, Error, Result, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub patience: usize,
    pub initial_lr: f64,
    pub lr_decay: f64,
    pub decay_every: usize,
    pub max_decays: u32,
    pub batch_size: usize,
    pub folds: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 500,
            patience: 50,
            initial_lr: 0.01,
            lr_decay: 0.5,
            decay_every: 25,
            max_decays: 6,
            batch_size: 32,
            folds: 10,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.max_epochs == 0 || self.patience >= self.max_epochs {
            return fail(format!(
                "need 0 <= patience < max_epochs, got {} and {}",
                self.patience, self.max_epochs
            ));
        }
        if !(0.001..=0.01).contains(&self.initial_lr) {
            return fail(format!("initial learning rate {} outside [0.001, 0.01]", self.initial_lr));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay < 1.0) {
            return fail(format!("lr decay {} outside (0, 1)", self.lr_decay));
        }
        if self.decay_every == 0 || self.batch_size == 0 {
            return fail("decay interval and batch size must be positive".into());
        }
        if self.folds < 2 {
            return fail(format!("need at least 2 folds, got {}", self.folds));
        }
        Ok(())
    }
}

/// `initial_lr * lr_decay^min(epoch / decay_every, max_decays)`.
pub fn lr_at(config: &TrainConfig, epoch: usize) -> f64 {
    let decays = (epoch / config.decay_every).min(config.max_decays as usize);
    config.initial_lr * config.lr_decay.powi(decays as i32)
}

/// Tracks the best training loss and the run of epochs since it.
#[derive(Clone, Debug)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: Option<usize>,
    stale: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best: f64::INFINITY,
            best_epoch: None,
            stale: 0,
        }
    }

    /// Records `loss` for `epoch`; returns true when training should stop.
    pub fn observe(&mut self, epoch: usize, loss: f64) -> bool {
        if loss < self.best {
            self.best = loss;
            self.best_epoch = Some(epoch);
            self.stale = 0;
        } else {
            self.stale += 1;
        }
        self.stale >= self.patience
    }

    pub fn improved_at(&self, epoch: usize) -> bool {
        self.best_epoch == Some(epoch)
    }

    pub fn best_epoch(&self) -> Option<usize> {
        self.best_epoch
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FoldResult {
    pub fold: usize,
    pub seed: u64,
    pub train_loss: Vec<f64>,
    pub test_accuracy: Vec<f64>,
    pub selected_epoch: usize,
    pub reported_accuracy: f64,
}

impl FoldResult {
    pub fn epochs_run(&self) -> usize {
        self.train_loss.len()
    }
}

/// A fold's result together with the model restored to the selected epoch.
#[derive(Clone, Debug)]
pub struct TrainedFold<T> {
    pub result: FoldResult,
    pub model: RpnetModel<T>,
}

pub fn accuracy<T: Scalar>(model: &RpnetModel<T>, tensors: &[&FeatureTensor<T>]) -> Result<f64> {
    if tensors.is_empty() {
        return Ok(0.0);
    }
    let predicted = model.predict(tensors)?;
    let correct = predicted
        .iter()
        .zip(tensors)
        .filter(|(&p, t)| p == t.label())
        .count();
    Ok(correct as f64 / tensors.len() as f64)
}

/// Trains one model on `train` and tracks accuracy on `test`. `seed` is the
/// fold seed; initialisation, batch order and dropout derive from it.
pub fn train_fold<T: Scalar>(
    train: &[&FeatureTensor<T>],
    test: &[&FeatureTensor<T>],
    model_config: &RpnetConfig,
    config: &TrainConfig,
    seed: u64,
) -> Result<TrainedFold<T>> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::arg("empty training set"));
    }
    let mut model = RpnetModel::<T>::new(model_config.clone(), seed)?;
    let mut adam = Adam::new(model.params());
    let mut stopper = EarlyStopping::new(config.patience);
    let mut best_params = model.params().clone();
    let mut train_loss = Vec::new();
    let mut test_accuracy = Vec::new();
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 0..config.max_epochs {
        order.shuffle(&mut rng::stream(seed, &[rng::SHUFFLE, epoch as u64]));
        let lr = T::lit(lr_at(config, epoch));
        let mut total = 0.0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<&FeatureTensor<T>> = chunk.iter().map(|&i| train[i]).collect();
            let mut dropout = rng::stream(seed, &[rng::DROPOUT, epoch as u64, b as u64]);
            let mut tape = Tape::new();
            let loss = model
                .loss_on_tape(&mut tape, &batch, &mut Mode::Train(&mut dropout))
                .map_err(|e| Error::NonFinite(format!("epoch {epoch}, batch {b}: {e}")))?;
            let value = tape.value(loss).data()[0].to_f64_lossy();
            let grads = tape.backward(loss)?;
            adam.step(model.params_mut(), &grads, lr)?;
            for (id, value) in tape.take_buffer_updates() {
                *model.params_mut().get_mut(id) = value;
            }
            total += value * batch.len() as f64;
        }
        let epoch_loss = total / train.len() as f64;
        if !epoch_loss.is_finite() {
            return Err(Error::NonFinite(format!("training loss at epoch {epoch}")));
        }
        train_loss.push(epoch_loss);
        test_accuracy.push(accuracy(&model, test)?);
        let stop = stopper.observe(epoch, epoch_loss);
        if stopper.improved_at(epoch) {
            best_params = model.params().clone();
        }
        log::debug!("epoch {epoch}: loss {epoch_loss:.6}, test accuracy {:.4}", test_accuracy[epoch]);
        if stop {
            break;
        }
    }
    let selected_epoch = stopper.best_epoch().unwrap_or(0);
    model.load_params(best_params)?;
    Ok(TrainedFold {
        result: FoldResult {
            fold: 0,
            seed,
            reported_accuracy: test_accuracy[selected_epoch],
            train_loss,
            test_accuracy,
            selected_epoch,
        },
        model,
    })
}

/// Test-set indices of each fold, stratified by label.
///
/// Each class is shuffled and dealt round-robin, continuing the fold cursor
/// from the previous class so fold sizes differ by at most one. Classes with
/// fewer members than folds are pooled and dealt after the others.
pub fn stratified_folds(labels: &[usize], folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::arg("need at least two folds"));
    }
    if labels.len() < folds {
        return Err(Error::arg(format!("{} items cannot fill {folds} folds", labels.len())));
    }
    let classes = labels.iter().max().map_or(0, |&m| m + 1);
    let mut rng = rng::stream(seed, &[rng::SPLIT]);
    let mut out = vec![Vec::new(); folds];
    let mut cursor = 0;
    let mut pooled = Vec::new();
    for c in 0..classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < folds {
            log::warn!(
                "class {c} has {} members, fewer than {folds} folds; it is not stratified",
                members.len()
            );
            pooled.extend(members);
            continue;
        }
        members.shuffle(&mut rng);
        for i in members {
            out[cursor % folds].push(i);
            cursor += 1;
        }
    }
    pooled.shuffle(&mut rng);
    for i in pooled {
        out[cursor % folds].push(i);
        cursor += 1;
    }
    for f in &mut out {
        f.sort_unstable();
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvReport {
    pub mean: f64,
    /// Population standard deviation across folds.
    pub std: f64,
    pub folds: Vec<FoldResult>,
}

impl CvReport {
    pub fn summary_line(&self) -> String {
        format!("accuracy: {:.4} +- {:.4}", self.mean, self.std)
    }

    /// Header line, then one CSV row per fold.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("fold,seed,epochs,selected_epoch,accuracy\n");
        for f in &self.folds {
            let _ = writeln!(
                s,
                "{},{},{},{},{:.6}",
                f.fold,
                f.seed,
                f.epochs_run(),
                f.selected_epoch,
                f.reported_accuracy
            );
        }
        s
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Stratified k-fold cross-validation. Folds run on `jobs` threads; the
/// result is independent of `jobs`.
pub fn cross_validate<T: Scalar + RealField>(
    features: &FeatureDataset<T>,
    model_config: &RpnetConfig,
    config: &TrainConfig,
    jobs: usize,
) -> Result<CvReport> {
    config.validate()?;
    model_config.validate()?;
    if model_config.scales != features.scales() || model_config.num_classes != features.num_classes() {
        return Err(Error::Config(format!(
            "model expects K = {}, C = {}; features have K = {}, C = {}",
            model_config.scales,
            model_config.num_classes,
            features.scales(),
            features.num_classes()
        )));
    }
    let splits = stratified_folds(&features.labels(), config.folds, config.seed)?;
    let run = |fold: usize| -> Result<FoldResult> {
        let test_idx = &splits[fold];
        let tensors = features.tensors();
        let test: Vec<_> = test_idx.iter().map(|&i| &tensors[i]).collect();
        let train: Vec<_> = (0..tensors.len())
            .filter(|i| test_idx.binary_search(i).is_err())
            .map(|i| &tensors[i])
            .collect();
        let seed = rng::derive_seed(config.seed, &[rng::FOLD, fold as u64]);
        let mut result = train_fold(&train, &test, model_config, config, seed)?.result;
        result.fold = fold;
        log::info!(
            "fold {fold}: {} epochs, selected {}, accuracy {:.4}",
            result.epochs_run(),
            result.selected_epoch,
            result.reported_accuracy
        );
        Ok(result)
    };
    let folds: Vec<FoldResult> = if jobs <= 1 {
        (0..config.folds).map(run).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::State(e.to_string()))?;
        pool.install(|| (0..config.folds).into_par_iter().map(run).collect::<Result<_>>())?
    };
    let n = folds.len() as f64;
    let mean = folds.iter().map(|f| f.reported_accuracy).sum::<f64>() / n;
    let var = folds.iter().map(|f| (f.reported_accuracy - mean).powi(2)).sum::<f64>() / n;
    Ok(CvReport {
        mean,
        std: var.sqrt(),
        folds,
    })
}
