//! Minibatch training with per-epoch validation and early stopping.

use std::path::PathBuf;
use std::time::Instant;

use rand::seq::SliceRandom;

use super::metrics::{evaluate, Metrics};
use crate::dataset::TensorDataset;
use crate::error::{Error, Result};
use crate::mvit::{adamw_step, checkpoint_save, loss_and_grad, InputBatch, Mode, ModelState, MvitConfig, OptimConfig};
use crate::seed::{derive_path, rng};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub early_stop_patience: Option<usize>,
    pub opt: OptimConfig,
    /// Held-out fraction when a caller has to carve a validation split.
    pub eval_split_fraction: f64,
    pub seed: u64,
    /// Best-so-far state is written here on every improvement.
    pub checkpoint: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 40,
            batch_size: 32,
            early_stop_patience: None,
            opt: OptimConfig::default(),
            eval_split_fraction: 0.2,
            seed: 0,
            checkpoint: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("epochs must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be >= 1"));
        }
        if self.early_stop_patience == Some(0) {
            return Err(Error::config("patience must be >= 1 when set"));
        }
        if !(0.0..1.0).contains(&self.eval_split_fraction) {
            return Err(Error::config("eval split fraction must lie in [0, 1)"));
        }
        self.opt.validate()
    }
}

/// One row of the per-epoch log. Epochs count from 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_acc: f64,
    pub val_auc: Option<f64>,
}

/// Index into `logs` of the lowest validation loss, earliest on ties.
pub fn argmin_val_loss(logs: &[EpochLog]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, l) in logs.iter().enumerate() {
        if best.is_none_or(|b| l.val_loss < logs[b].val_loss) {
            best = Some(i);
        }
    }
    best
}

/// Patience counter over validation losses.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    patience: Option<usize>,
    best: f64,
    best_epoch: usize,
    seen: usize,
}

impl EarlyStopping {
    pub fn new(patience: Option<usize>) -> Self {
        Self {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            seen: 0,
        }
    }

    /// Record the next epoch's loss. Returns `(improved, stop)`.
    pub fn observe(&mut self, val_loss: f64) -> (bool, bool) {
        self.seen += 1;
        let improved = val_loss < self.best;
        if improved {
            self.best = val_loss;
            self.best_epoch = self.seen;
        }
        let stop = self.patience.is_some_and(|p| self.seen - self.best_epoch >= p);
        (improved, stop)
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainRun {
    pub logs: Vec<EpochLog>,
    /// 1-based epoch of the lowest validation loss.
    pub eoc: usize,
    pub min_val_loss: f64,
    pub acc_at_eoc: f64,
    pub auc_at_eoc: Option<f64>,
    /// Wall-clock seconds per epoch, training and validation together.
    pub epoch_seconds: Vec<f64>,
}

impl TrainRun {
    pub fn stopped_epoch(&self) -> usize {
        self.logs.len()
    }

    pub fn mean_epoch_seconds(&self) -> f64 {
        if self.epoch_seconds.is_empty() {
            0.0
        } else {
            self.epoch_seconds.iter().sum::<f64>() / self.epoch_seconds.len() as f64
        }
    }
}

fn train_epoch(
    state: &mut ModelState,
    cfg: &MvitConfig,
    train: &TensorDataset,
    tc: &TrainConfig,
    epoch: usize,
) -> Result<f64> {
    let mut order: Vec<usize> = (0..train.len()).collect();
    order.shuffle(&mut rng(derive_path(tc.seed, &[epoch as u64])));
    let mut total = 0.0;
    for (step, chunk) in order.chunks(tc.batch_size).enumerate() {
        let (x, y) = train.gather(chunk);
        let batch = InputBatch::new(x, cfg)?;
        let mode = Mode::Train {
            dropout_seed: derive_path(tc.seed, &[epoch as u64, step as u64 + 1]),
        };
        let (loss, grads) = loss_and_grad(state, cfg, &batch, &y, mode)?;
        adamw_step(state, &grads, &tc.opt)?;
        if let Some(name) = state.first_non_finite() {
            return Err(Error::NonFinite { tensor: name.to_string() });
        }
        total += loss * chunk.len() as f64;
    }
    Ok(total / train.len() as f64)
}

/// Train `state` in place for up to `tc.epochs` epochs and return the log
/// together with the state at the epoch of convergence.
pub fn train_loop(
    state: &mut ModelState,
    cfg: &MvitConfig,
    train: &TensorDataset,
    val: &TensorDataset,
    tc: &TrainConfig,
) -> Result<(TrainRun, ModelState)> {
    tc.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::Degenerate("training and validation splits must be non-empty".into()));
    }
    let mut stopper = EarlyStopping::new(tc.early_stop_patience);
    let mut logs = Vec::new();
    let mut epoch_seconds = Vec::new();
    let mut best_state = state.clone();
    let mut best_metrics: Option<Metrics> = None;
    for epoch in 1..=tc.epochs {
        let started = Instant::now();
        let wrap = |e: Error| Error::Training {
            epoch,
            source: Box::new(e),
        };
        let train_loss = train_epoch(state, cfg, train, tc, epoch).map_err(wrap)?;
        let m = evaluate(state, cfg, val).map_err(wrap)?;
        epoch_seconds.push(started.elapsed().as_secs_f64());
        logs.push(EpochLog {
            epoch,
            train_loss,
            val_loss: m.loss,
            val_acc: m.accuracy,
            val_auc: m.auc,
        });
        let (improved, stop) = stopper.observe(m.loss);
        if improved {
            best_state = state.clone();
            best_metrics = Some(m);
            if let Some(path) = &tc.checkpoint {
                checkpoint_save(&best_state, path).map_err(wrap)?;
            }
        }
        if stop {
            break;
        }
    }
    let best = best_metrics.expect("at least one epoch ran");
    Ok((
        TrainRun {
            eoc: stopper.best_epoch(),
            min_val_loss: best.loss,
            acc_at_eoc: best.accuracy,
            auc_at_eoc: best.auc,
            logs,
            epoch_seconds,
        },
        best_state,
    ))
}
