use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::{Adam, AdamConfig};
use super::encode::EncodedSet;
use super::model::{Model, ModelSpec};
use crate::error::{Error, Result};
use crate::game::Action;
use crate::seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub validation_fraction: f64,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub max_epochs: usize,
    /// Caps the minibatches drawn per epoch (each epoch reshuffles).
    pub max_batches_per_epoch: Option<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            adam: AdamConfig::default(),
            batch_size: 64,
            validation_fraction: 0.05,
            patience: 10,
            max_epochs: 200,
            max_batches_per_epoch: None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.adam.validate()?;
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::Config(format!("validation fraction {} outside (0, 1)", self.validation_fraction)));
        }
        if self.max_batches_per_epoch == Some(0) {
            return Err(Error::Config("max_batches_per_epoch must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_loss: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
    /// Epoch whose parameters were returned; `None` if none ran.
    pub best_epoch: Option<usize>,
    pub train_samples: usize,
    pub validation_samples: usize,
}

impl TrainLog {
    pub fn best_validation_loss(&self) -> Option<f64> {
        self.best_epoch.map(|e| self.epochs[e].validation_loss)
    }
}

/// Splits sample indices into (train, validation) by whole sequences, using a
/// seeded shuffle of the group ids. Falls back to single samples when there
/// is only one sequence.
pub fn validation_split(set: &EncodedSet, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = seed::rng(seed);
    let n_groups = set.groups.iter().copied().max().map_or(0, |g| g as usize + 1);
    let mut train = Vec::new();
    let mut val = Vec::new();
    if n_groups >= 2 {
        let mut order: Vec<u32> = (0..n_groups as u32).collect();
        order.shuffle(&mut rng);
        let take = ((n_groups as f64 * fraction).round() as usize).clamp(1, n_groups - 1);
        let mut is_val = vec![false; n_groups];
        for &g in &order[..take] {
            is_val[g as usize] = true;
        }
        for (i, &g) in set.groups.iter().enumerate() {
            if is_val[g as usize] {
                val.push(i)
            } else {
                train.push(i)
            }
        }
    } else {
        let mut idx: Vec<usize> = (0..set.len()).collect();
        idx.shuffle(&mut rng);
        let take = ((set.len() as f64 * fraction).round() as usize).clamp(1, set.len().saturating_sub(1).max(1));
        val = idx[..take.min(idx.len())].to_vec();
        train = idx[take.min(idx.len())..].to_vec();
        val.sort_unstable();
        train.sort_unstable();
    }
    (train, val)
}

/// Trains a fresh model and returns the snapshot with the best validation
/// loss. Deterministic for a given config seed.
pub fn train(spec: &ModelSpec, set: &EncodedSet, config: &TrainConfig) -> Result<(Model, TrainLog)> {
    config.validate()?;
    let mut model = Model::new(spec.clone(), seed::derive(config.seed, "init"))?;
    if set.dim != model.input_dim() {
        return Err(Error::Contract(format!("training set has {} features, model expects {}", set.dim, model.input_dim())));
    }
    if set.len() < 2 {
        return Err(Error::Validation(format!("need at least 2 training samples, got {}", set.len())));
    }
    let (train_idx, val_idx) = validation_split(set, config.validation_fraction, seed::derive(config.seed, "validation"));
    let val = set.subset(&val_idx);
    let mut log = TrainLog { train_samples: train_idx.len(), validation_samples: val_idx.len(), ..TrainLog::default() };
    if config.max_epochs == 0 {
        return Ok((model, log));
    }

    let shapes: Vec<usize> = model.params().iter().map(|p| p.len()).collect();
    let mut adam = Adam::new(config.adam, &shapes);
    let mut shuffle_rng = seed::rng(seed::derive(config.seed, "shuffle"));
    let mut dropout_rng = seed::rng(seed::derive(config.seed, "dropout"));
    let mut order = train_idx;
    let mut best: Option<(f64, Model)> = None;
    let mut stale = 0;
    let mut xb = Vec::with_capacity(config.batch_size * set.dim);
    let mut yb: Vec<Action> = Vec::with_capacity(config.batch_size);

    for epoch in 0..config.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let n_batches = order.len().div_ceil(config.batch_size);
        let n_batches = config.max_batches_per_epoch.map_or(n_batches, |m| m.min(n_batches));
        let mut loss_sum = 0.0;
        let mut seen = 0usize;
        for chunk in order.chunks(config.batch_size).take(n_batches) {
            xb.clear();
            yb.clear();
            for &i in chunk {
                xb.extend_from_slice(set.row(i));
                yb.push(set.targets[i]);
            }
            let (loss, grads) = model.loss_and_grad(&xb, &yb, Some(&mut dropout_rng))?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            loss_sum += loss * chunk.len() as f64;
            seen += chunk.len();
            adam.step(model.params_mut(), &grads);
        }
        let validation_loss = model.mean_loss(&val)?;
        if !validation_loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        log.epochs.push(EpochLog { epoch, train_loss: loss_sum / seen.max(1) as f64, validation_loss });
        if best.as_ref().is_none_or(|(b, _)| validation_loss < *b) {
            best = Some((validation_loss, model.clone()));
            log.best_epoch = Some(epoch);
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }
    Ok((best.map(|(_, m)| m).unwrap_or(model), log))
}
