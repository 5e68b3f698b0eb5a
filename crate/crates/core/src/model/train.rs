//! Adam training loop with early stopping.
//!
//! Training is a deterministic function of (initial weights, data, config):
//! the shuffle order and every floating-point operation are fixed by the
//! seed, and execution is single-threaded.

use crate::error::{Error, Result};
use crate::rng::Prng;

use super::{cross_entropy, Classifier, Dataset, Gradients, Layer, Vol};

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Early stopping patience in epochs; `None` trains for the full
    /// schedule. When enabled, a validation holdout (the trailing tenth of
    /// the training set, capped at 5000 samples) is carved off and the best
    /// weights by validation accuracy are restored at the end.
    pub patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            weight_decay: 0.0001,
            epochs: 50,
            batch_size: 32,
            seed: 0,
            patience: Some(5),
        }
    }
}

/// One row of the training log.
#[derive(Debug, Clone)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_acc: Option<f64>,
    pub test_acc: Option<f64>,
}

/// Fraction of `dataset` classified correctly (argmax vs label).
pub fn accuracy(model: &Classifier, dataset: &Dataset) -> Result<f64> {
    let mut correct = 0usize;
    for i in 0..dataset.len() {
        if model.predict(dataset.image(i))? == dataset.label(i) {
            correct += 1;
        }
    }
    Ok(correct as f64 / dataset.len() as f64)
}

struct AdamState {
    m: Gradients,
    v: Gradients,
    step: usize,
}

impl AdamState {
    fn new(model: &Classifier) -> Self {
        AdamState {
            m: Gradients::zeros_like(model),
            v: Gradients::zeros_like(model),
            step: 0,
        }
    }

    fn update(&mut self, model: &mut Classifier, grads: &Gradients, lr: f64, weight_decay: f64) {
        const BETA1: f64 = 0.9;
        const BETA2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        self.step += 1;
        let bc1 = 1.0 - BETA1.powi(self.step as i32);
        let bc2 = 1.0 - BETA2.powi(self.step as i32);

        let apply = |params: &mut [f64], grads: &[f64], m: &mut [f64], v: &mut [f64]| {
            for i in 0..params.len() {
                // Coupled L2: decay enters the gradient before the moments.
                let g = grads[i] + weight_decay * params[i];
                m[i] = BETA1 * m[i] + (1.0 - BETA1) * g;
                v[i] = BETA2 * v[i] + (1.0 - BETA2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                params[i] -= lr * m_hat / (v_hat.sqrt() + EPS);
            }
        };

        for (idx, layer) in model.layers_mut().iter_mut().enumerate() {
            let (Some(g), Some(m), Some(v)) = (
                grads.per_layer[idx].as_ref(),
                self.m.per_layer[idx].as_mut(),
                self.v.per_layer[idx].as_mut(),
            ) else {
                continue;
            };
            match layer {
                Layer::Conv(conv) => {
                    apply(&mut conv.weights, &g.weights, &mut m.weights, &mut v.weights);
                    apply(&mut conv.bias, &g.bias, &mut m.bias, &mut v.bias);
                }
                Layer::Dense(dense) => {
                    apply(&mut dense.weights, &g.weights, &mut m.weights, &mut v.weights);
                    apply(&mut dense.bias, &g.bias, &mut m.bias, &mut v.bias);
                }
                _ => unreachable!(),
            }
        }
    }
}

/// Train a copy of `model` on `data` and return it with the epoch log.
///
/// `eval` is only used for the `test_acc` column of the log; early stopping
/// is driven by the validation holdout described on [`TrainConfig`].
pub fn train(
    model: &Classifier,
    data: &Dataset,
    eval: Option<&Dataset>,
    config: &TrainConfig,
) -> Result<(Classifier, Vec<EpochLog>)> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if config.batch_size == 0 || config.epochs == 0 {
        return Err(Error::InvalidConfig(
            "batch_size and epochs must be positive".to_string(),
        ));
    }

    // Carve a validation holdout off the end when early stopping is on.
    let (train_set, val_set) = match config.patience {
        Some(_) => {
            let val_n = (data.len() / 10).clamp(1, 5000);
            if val_n < data.len() {
                let (head, tail) = data.split_tail(val_n)?;
                (head, Some(tail))
            } else {
                (data.clone(), None)
            }
        }
        None => (data.clone(), None),
    };

    let mut model = model.clone();
    let mut rng = Prng::seeded(config.seed);
    let mut adam = AdamState::new(&model);
    let mut grads = Gradients::zeros_like(&model);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut log = Vec::with_capacity(config.epochs);

    let mut best: Option<(f64, Classifier)> = None;
    let mut epochs_since_best = 0usize;

    for epoch in 1..=config.epochs {
        rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            grads.reset();
            let mut batch_loss = 0.0;
            for &i in batch {
                let acts = model.run_forward(Vol::from_grid(train_set.image(i)));
                let probs = &acts.last().unwrap().data;
                let label = train_set.label(i);
                batch_loss += cross_entropy(probs, label)?;
                let mut seed = probs.clone();
                seed[label] -= 1.0;
                model.backward(&acts, seed, Some(&mut grads));
            }
            let scale = 1.0 / batch.len() as f64;
            for slot in grads.per_layer.iter_mut().flatten() {
                slot.weights.iter_mut().for_each(|g| *g *= scale);
                slot.bias.iter_mut().for_each(|g| *g *= scale);
            }
            adam.update(&mut model, &grads, config.learning_rate, config.weight_decay);
            loss_sum += batch_loss;
        }
        let train_loss = loss_sum / train_set.len() as f64;

        let val_acc = match &val_set {
            Some(val) => Some(accuracy(&model, val)?),
            None => None,
        };
        let test_acc = match eval {
            Some(ds) => Some(accuracy(&model, ds)?),
            None => None,
        };
        log.push(EpochLog {
            epoch,
            train_loss,
            val_acc,
            test_acc,
        });

        if let (Some(patience), Some(acc)) = (config.patience, val_acc) {
            let improved = best.as_ref().map_or(true, |(b, _)| acc > *b);
            if improved {
                best = Some((acc, model.clone()));
                epochs_since_best = 0;
            } else {
                epochs_since_best += 1;
                if epochs_since_best > patience {
                    break;
                }
            }
        }
    }

    if let Some((_, best_model)) = best {
        model = best_model;
    }
    Ok((model, log))
}
