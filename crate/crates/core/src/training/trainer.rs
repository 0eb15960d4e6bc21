//! Minibatch SGD training loop with well-level validation and early stopping.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::loss::{compute_class_weights, label_index};
use super::optim::sgd_step;
use crate::error::{Error, Result};
use crate::evaluation::{confusion, precision_recall_f1};
use crate::network::{
    backward_example, forward_example, infer, init_params, Checkpoint, ModelParams, ModelSpec,
    REDUCE_CHUNK,
};
use crate::rng::{self, Stream};
use crate::tensor::{layer_backward, softmax_cross_entropy, Scalar, Tensor};
use crate::welldata::{
    extract_windows, facies_counts, prepare_wells, Standardizer, Well, WindowSet, NUM_FACIES,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Depth window length in samples (odd).
    pub window: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Upper bound on epochs.
    pub epochs: usize,
    pub dropout: f64,
    pub seed: u64,
    /// Weight the loss by inverse class frequency.
    pub class_weighting: bool,
    pub validation_wells: Vec<String>,
    /// Stop after this many epochs without a better validation macro-F1; 0 disables.
    pub patience: usize,
    /// Multiply the learning rate by `lr_decay_factor` every this many epochs; 0 disables.
    pub lr_decay_every: usize,
    pub lr_decay_factor: f64,
    /// Fill PE gaps with the training mean.
    pub impute_pe: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            window: 31,
            batch_size: 64,
            learning_rate: 1e-2,
            momentum: 0.9,
            epochs: 60,
            dropout: 0.5,
            seed: 0,
            class_weighting: false,
            validation_wells: vec![],
            patience: 10,
            lr_decay_every: 20,
            lr_decay_factor: 0.5,
            impute_pe: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if self.window == 0 || self.window.is_multiple_of(2) {
            errors.push(format!("window = {} must be odd", self.window));
        }
        if self.batch_size == 0 {
            errors.push("batch_size must be >= 1".to_string());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            errors.push(format!(
                "learning_rate = {} must be > 0",
                self.learning_rate
            ));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            errors.push(format!("momentum = {} not in [0, 1)", self.momentum));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            errors.push(format!("dropout = {} not in [0, 1)", self.dropout));
        }
        if !(self.lr_decay_factor > 0.0 && self.lr_decay_factor <= 1.0) {
            errors.push(format!(
                "lr_decay_factor = {} not in (0, 1]",
                self.lr_decay_factor
            ));
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigList(errors))
        }
    }

    /// The default architecture sized for this config's window and dropout.
    pub fn default_spec(&self) -> ModelSpec {
        ModelSpec {
            dropout: self.dropout,
            ..ModelSpec::default_for_window(self.window)
        }
    }

    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        match self.lr_decay_every {
            0 => self.learning_rate,
            n => self.learning_rate * self.lr_decay_factor.powi((epoch / n) as i32),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub learning_rate: f64,
    pub train_loss: f64,
    /// Accuracy of the training-mode (dropout active) forward passes.
    pub train_accuracy: f64,
    pub val_loss: Option<f64>,
    pub val_macro_f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were kept.
    pub best_epoch: usize,
    pub best_val_macro_f1: Option<f64>,
    pub stopped_early: bool,
    pub seed: u64,
    pub config: TrainConfig,
    pub spec: ModelSpec,
    pub train_wells: Vec<String>,
    pub validation_wells: Vec<String>,
}

impl TrainReport {
    /// `epoch,train_loss,train_acc,val_loss,val_macro_f1,lr`; empty cells when
    /// there is no validation set.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
        let mut s = String::from("epoch,train_loss,train_acc,val_loss,val_macro_f1,lr\n");
        for e in &self.epochs {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                e.epoch,
                e.train_loss,
                e.train_accuracy,
                opt(e.val_loss),
                opt(e.val_macro_f1),
                e.learning_rate
            ));
        }
        s
    }

    /// Summary document: best epoch, seed and a full echo of the run settings.
    pub fn summary_json(&self) -> String {
        let v = serde_json::json!({
            "best_epoch": self.best_epoch,
            "best_val_macro_f1": self.best_val_macro_f1,
            "epochs_run": self.epochs.len(),
            "stopped_early": self.stopped_early,
            "seed": self.seed,
            "train_wells": self.train_wells,
            "validation_wells": self.validation_wells,
            "config": self.config,
            "spec": self.spec,
        });
        serde_json::to_string_pretty(&v).expect("serializable summary")
    }
}

/// Loss, correct-prediction count and summed parameter gradients of a batch.
#[derive(Debug, Clone)]
pub struct BatchGrad<T> {
    /// Mean weighted cross-entropy.
    pub loss: f64,
    pub correct: usize,
    /// Gradient of the mean loss.
    pub grads: ModelParams<T>,
}

/// Forward, fused softmax cross-entropy and backward over `examples`
/// (window, 1-based label). Example `i` draws dropout masks from
/// `stream.fork(i)`; gradients are reduced in fixed chunks so the result is
/// bit-identical for any thread count.
pub fn batch_loss_and_grad<T: Scalar>(
    spec: &ModelSpec,
    params: &ModelParams<T>,
    examples: &[(&Tensor<T>, u8)],
    class_weights: Option<&[f64]>,
    training: bool,
    stream: Stream,
) -> Result<BatchGrad<T>> {
    if examples.is_empty() {
        return Err(Error::Config("empty batch".into()));
    }
    let inv_b = T::from_f64(1.0 / examples.len() as f64);
    let one = |i: usize| -> Result<(ModelParams<T>, f64, usize)> {
        let (x, label) = examples[i];
        let y = label_index(label, spec.classes)?;
        let w = class_weights.map_or(1.0, |w| w[y]);
        let (logits, cache) =
            forward_example(spec, params, x, training, &mut stream.fork(i as u64).rng())?;
        let (loss, ce) = softmax_cross_entropy(&logits, y, T::from_f64(w))?;
        let g = layer_backward(&ce, None, &Tensor::from_vec(vec![inv_b]))?.input_grad;
        let grads = backward_example(spec, params, &cache, &g)?;
        Ok((grads, loss.to_f64(), (logits.argmax() == y) as usize))
    };
    let n = examples.len();
    let partials: Vec<(ModelParams<T>, f64, usize)> = (0..n.div_ceil(REDUCE_CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut acc: Option<(ModelParams<T>, f64, usize)> = None;
            for i in chunk * REDUCE_CHUNK..((chunk + 1) * REDUCE_CHUNK).min(n) {
                let (g, l, c) = one(i)?;
                match &mut acc {
                    None => acc = Some((g, l, c)),
                    Some(a) => {
                        a.0.add_assign(&g)?;
                        a.1 += l;
                        a.2 += c;
                    }
                }
            }
            Ok(acc.expect("non-empty chunk"))
        })
        .collect::<Result<_>>()?;
    let mut it = partials.into_iter();
    let (mut grads, mut loss, mut correct) = it.next().expect("at least one chunk");
    for (g, l, c) in it {
        grads.add_assign(&g)?;
        loss += l;
        correct += c;
    }
    Ok(BatchGrad {
        loss: loss / n as f64,
        correct,
        grads,
    })
}

/// Inference-mode mean cross-entropy and predicted labels over a window set.
pub fn evaluate_windows<T: Scalar>(
    spec: &ModelSpec,
    params: &ModelParams<T>,
    set: &WindowSet<T>,
) -> Result<(f64, Vec<u8>)> {
    let inputs: Vec<Tensor<T>> = set.examples.iter().map(|e| e.input.clone()).collect();
    let logits = infer(spec, params, &inputs)?;
    let mut loss = 0.0;
    let mut predicted = Vec::with_capacity(logits.len());
    for (l, e) in logits.iter().zip(&set.examples) {
        let (li, _) = softmax_cross_entropy(l, label_index(e.label, spec.classes)?, T::one())?;
        loss += li.to_f64();
        predicted.push(l.argmax() as u8 + 1);
    }
    Ok((loss / set.len().max(1) as f64, predicted))
}

fn windows<T: Scalar>(wells: &[Well], window: usize) -> Result<WindowSet<T>> {
    let mut set = WindowSet {
        window,
        examples: vec![],
    };
    for w in wells {
        set.extend(extract_windows(w, window)?);
    }
    Ok(set)
}

/// Trains a model on `train_wells`, selecting the epoch with the best
/// macro-F1 on `validation_wells` (or the last epoch when there are none).
/// The standardizer is fitted on the training wells only.
pub fn train(
    config: &TrainConfig,
    spec: &ModelSpec,
    train_wells: &[Well],
    validation_wells: &[Well],
) -> Result<(Checkpoint, TrainReport)> {
    config.validate()?;
    spec.validate()?;
    if spec.window != config.window {
        return Err(Error::Config(format!(
            "model window {} differs from configured window {}",
            spec.window, config.window
        )));
    }
    if train_wells.is_empty() {
        return Err(Error::Config("no training wells".into()));
    }
    if spec.classes != NUM_FACIES {
        return Err(Error::Config(format!(
            "model must output {NUM_FACIES} classes"
        )));
    }
    if let Some(w) = validation_wells
        .iter()
        .find(|v| train_wells.iter().any(|t| t.name == v.name))
    {
        return Err(Error::Config(format!(
            "validation well `{}` is also a training well",
            w.name
        )));
    }

    let standardizer = Standardizer::fit(train_wells)?;
    let train_prepared = prepare_wells(train_wells, &standardizer, config.impute_pe)?;
    let val_prepared = prepare_wells(validation_wells, &standardizer, config.impute_pe)?;
    let train_set: WindowSet<f32> = windows(&train_prepared, config.window)?;
    let val_set: WindowSet<f32> = windows(&val_prepared, config.window)?;
    if train_set.is_empty() {
        return Err(Error::Config("training wells contain no samples".into()));
    }
    let counts = facies_counts(train_wells);
    let class_weights = config
        .class_weighting
        .then(|| compute_class_weights(&counts));

    let root = Stream::root(config.seed);
    let mut params = init_params::<f32>(spec, config.seed)?;
    let mut velocity = ModelParams::zeros_like(spec)?;
    let mut best = params.clone();
    let mut best_epoch = 0;
    let mut best_f1: Option<f64> = None;
    let mut since_best = 0;
    let mut records = Vec::new();
    let mut stopped_early = false;
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 0..config.epochs {
        let lr = config.learning_rate_at(epoch);
        order.shuffle(&mut root.fork(rng::SHUFFLE).fork(epoch as u64).rng());
        let dropout_stream = root.fork(rng::DROPOUT).fork(epoch as u64);
        let (mut loss_sum, mut correct) = (0.0, 0);
        for (b, idx) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<(&Tensor<f32>, u8)> = idx
                .iter()
                .map(|&i| (&train_set.examples[i].input, train_set.examples[i].label))
                .collect();
            let g = batch_loss_and_grad(
                spec,
                &params,
                &batch,
                class_weights.as_deref(),
                true,
                dropout_stream.fork(b as u64),
            )?;
            sgd_step(&mut params, &g.grads, lr, config.momentum, &mut velocity)?;
            loss_sum += g.loss * batch.len() as f64;
            correct += g.correct;
        }
        if !params.flat().all(|v| v.is_finite()) {
            return Err(Error::Numeric(format!(
                "parameters diverged in epoch {epoch}; lower the learning rate"
            )));
        }

        let (val_loss, val_f1) = if val_set.is_empty() {
            (None, None)
        } else {
            let (loss, predicted) = evaluate_windows(spec, &params, &val_set)?;
            let truth: Vec<u8> = val_set.examples.iter().map(|e| e.label).collect();
            let f1 = precision_recall_f1(&confusion(&truth, &predicted)?).macro_f1;
            (Some(loss), Some(f1))
        };
        records.push(EpochRecord {
            epoch,
            learning_rate: lr,
            train_loss: loss_sum / train_set.len() as f64,
            train_accuracy: correct as f64 / train_set.len() as f64,
            val_loss,
            val_macro_f1: val_f1,
        });

        let improved = match (val_f1, best_f1) {
            (None, _) => true,
            (Some(f), None) => f >= 0.0,
            (Some(f), Some(b)) => f > b,
        };
        if improved {
            best = params.clone();
            best_epoch = epoch;
            best_f1 = val_f1;
            since_best = 0;
        } else {
            since_best += 1;
            if config.patience > 0 && since_best >= config.patience {
                stopped_early = true;
                break;
            }
        }
    }

    let checkpoint = Checkpoint {
        spec: spec.clone(),
        params: best,
        standardizer,
        seed: config.seed,
        train_counts: Some(counts),
    };
    let report = TrainReport {
        epochs: records,
        best_epoch,
        best_val_macro_f1: best_f1,
        stopped_early,
        seed: config.seed,
        config: config.clone(),
        spec: spec.clone(),
        train_wells: train_wells.iter().map(|w| w.name.clone()).collect(),
        validation_wells: validation_wells.iter().map(|w| w.name.clone()).collect(),
    };
    Ok((checkpoint, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation_lists_everything() {
        let cfg = TrainConfig {
            window: 4,
            batch_size: 0,
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        match cfg.validate() {
            Err(Error::ConfigList(v)) => assert_eq!(v.len(), 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lr_schedule() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.learning_rate_at(0), 1e-2);
        assert_eq!(cfg.learning_rate_at(19), 1e-2);
        assert_eq!(cfg.learning_rate_at(20), 5e-3);
        assert_eq!(cfg.learning_rate_at(45), 2.5e-3);
    }
}
