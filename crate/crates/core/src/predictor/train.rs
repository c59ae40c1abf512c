use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Gradients, MlpModel};
use crate::dataset::{Batch, WindowSet};
use crate::error::{domain, Error};
use crate::Result;

/// Training schedule. Defaults: 20 epochs, batch 32, Adam starting at 0.01
/// and halved after every epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Multiplier applied to the learning rate after each epoch.
    pub lr_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub hidden_units: usize,
    pub seed: u64,
    /// Reshuffle the windows at the start of every epoch.
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            batch_size: 32,
            learning_rate: 0.01,
            lr_decay: 0.5,
            beta1: 0.9,
            beta2: 0.999,
            adam_epsilon: 1e-8,
            hidden_units: 8,
            seed: 1,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn check(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(domain("epochs must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(domain("batch size must be at least 1"));
        }
        if self.hidden_units == 0 {
            return Err(domain("hidden layer needs at least one unit"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(domain("learning rate must be positive"));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay.is_finite()) {
            return Err(domain("learning-rate decay must be positive"));
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2) && self.adam_epsilon > 0.0) {
            return Err(domain("Adam moments must lie in [0, 1) and epsilon be positive"));
        }
        Ok(())
    }

    /// Learning rate used during epoch `epoch` (0-based).
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        self.learning_rate * self.lr_decay.powi(epoch as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub learning_rate: f64,
    /// Mean squared error over the epoch's batches, taken before each update.
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub model: MlpModel,
    pub config: TrainConfig,
    pub log: Vec<EpochLog>,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }

    fn update(&mut self, model: &mut MlpModel, grad: &Gradients, lr: f64, cfg: &TrainConfig) {
        self.step += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.step);
        let c2 = 1.0 - cfg.beta2.powi(self.step);
        let step = lr / c1;
        let mut offset = 0;
        for block in model.param_blocks_mut() {
            let range = offset..offset + block.len();
            offset = range.end;
            let g = &grad.values[range.clone()];
            let m = &mut self.m[range.clone()];
            let v = &mut self.v[range];
            for (((p, &g), m), v) in block.iter_mut().zip(g).zip(m).zip(v) {
                *m = flush(cfg.beta1 * *m + (1.0 - cfg.beta1) * g);
                *v = flush(cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g);
                *p -= step * *m / ((*v / c2).sqrt() + cfg.adam_epsilon);
            }
        }
    }
}

/// Moments of inputs that stay silent decay geometrically and would
/// otherwise linger as subnormals, which are very slow on common hardware.
fn flush(x: f64) -> f64 {
    if x.abs() < f64::MIN_POSITIVE {
        0.0
    } else {
        x
    }
}

/// Trains a fresh model on every window of `data`. Deterministic for a given
/// `(cfg, data)`: initialization and shuffling both come from `cfg.seed`.
pub fn train(data: &WindowSet<'_>, cfg: &TrainConfig) -> Result<TrainedModel> {
    cfg.check()?;
    if data.is_empty() {
        return Err(domain("no training windows"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = MlpModel::glorot(data.n_p(), cfg.hidden_units, &mut rng);
    let mut adam = Adam::new(model.n_params());
    let mut grad = Gradients::zeros(model.n_params());
    let mut batch = Batch::with_capacity(data.n_p(), cfg.batch_size);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut log = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let lr = cfg.learning_rate_at(epoch);
        if cfg.shuffle {
            order.shuffle(&mut rng);
        }
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            data.batch_into(chunk, &mut batch);
            let loss = model.batch_gradient(&batch, &mut grad);
            total += loss * chunk.len() as f64;
            adam.update(&mut model, &grad, lr, cfg);
        }
        let loss = total / data.len() as f64;
        if !loss.is_finite() {
            return Err(Error::TrainingDiverged { epoch, loss });
        }
        log.push(EpochLog {
            epoch,
            learning_rate: lr,
            loss,
        });
    }
    Ok(TrainedModel {
        model,
        config: cfg.clone(),
        log,
    })
}

/// Scores of every window of `data`, in trace order.
pub fn evaluate_scores(model: &MlpModel, data: &WindowSet<'_>) -> Result<Vec<f64>> {
    if model.n_inputs() != data.n_p() {
        return Err(domain(format!(
            "model expects {} inputs but windows have n_p = {}",
            model.n_inputs(),
            data.n_p()
        )));
    }
    let mut active = Vec::with_capacity(data.n_p());
    (0..data.len())
        .map(|j| {
            active.clear();
            data.push_active(j, &mut active);
            model.predict_active(&active)
        })
        .collect()
}
