use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::adam::{adam_step, AdamState};
use crate::error::{Result, ShredError};
use crate::eval::Reconstructor;
use crate::nncore::{accumulate_gradient, LossKind, ParamArrays, ShredParams};
use crate::seed;
use crate::sensing::WindowSample;

impl Trainable for ShredParams {
    fn accumulate(&self, window: &WindowSample, loss: LossKind, weight: f64, grads: &mut Self) -> f64 {
        accumulate_gradient(self, &window.inputs, window.steps, &window.target, loss, weight, grads)
    }

    fn zeros_like(&self) -> Self {
        ShredParams::zeros_like(self)
    }

    fn io_widths(&self) -> (usize, usize) {
        (self.lstm.layers[0].input(), self.decoder.output())
    }
}

/// Windows per gradient task; the reduction order over tasks is fixed, so
/// results do not depend on the thread count.
const GRAD_CHUNK: usize = 16;

/// A model trained by minibatch ADAM on scaled windows.
pub trait Trainable: Reconstructor + ParamArrays + Clone + Send + Sync {
    /// Adds `weight * dL/dθ` for one window into `grads` and returns `L`.
    fn accumulate(&self, window: &WindowSample, loss: LossKind, weight: f64, grads: &mut Self) -> f64;

    fn zeros_like(&self) -> Self;

    /// Expected `(window width, target width)`.
    fn io_widths(&self) -> (usize, usize);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    pub loss: LossKind,
    /// Global gradient-norm clip; `None` disables clipping.
    pub clip_norm: Option<f64>,
    pub schedule: LrSchedule,
    /// End point of a decaying schedule.
    pub final_learning_rate: f64,
}

/// Learning rate per epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LrSchedule {
    #[default]
    Constant,
    /// Half-cosine from `learning_rate` at the first epoch to
    /// `final_learning_rate` at the last.
    Cosine,
}

impl TrainConfig {
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        match self.schedule {
            LrSchedule::Constant => self.learning_rate,
            LrSchedule::Cosine => {
                let span = (self.epochs.max(2) - 1) as f64;
                let progress = (epoch as f64 / span).min(1.0);
                let w = 0.5 * (1.0 + (std::f64::consts::PI * progress).cos());
                self.final_learning_rate + (self.learning_rate - self.final_learning_rate) * w
            }
        }
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            batch_size: 64,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            patience: 20,
            seed: 0,
            loss: LossKind::Mse,
            clip_norm: Some(10.0),
            schedule: LrSchedule::Constant,
            final_learning_rate: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: &str| Err(ShredError::spec(field, reason));
        if self.epochs == 0 {
            return bad("train.epochs", "must be >= 1");
        }
        if self.batch_size == 0 {
            return bad("train.batch_size", "must be >= 1");
        }
        if self.patience == 0 {
            return bad("train.patience", "must be >= 1");
        }
        if !(self.learning_rate > 0.0) {
            return bad("train.learning_rate", "must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) {
            return bad("train.beta1", "must lie in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.beta2) {
            return bad("train.beta2", "must lie in [0, 1)");
        }
        if !(self.epsilon > 0.0) {
            return bad("train.epsilon", "must be positive");
        }
        if !(self.final_learning_rate >= 0.0) || self.final_learning_rate > self.learning_rate {
            return bad("train.final_learning_rate", "must lie in [0, learning_rate]");
        }
        if matches!(self.clip_norm, Some(c) if !(c > 0.0)) {
            return bad("train.clip_norm", "must be positive when set");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_loss: Vec<f64>,
    pub val_mse: Vec<f64>,
    pub best_epoch: usize,
    pub best_val_mse: f64,
    /// Content hash of the selected parameters.
    pub snapshot_id: String,
}

impl TrainReport {
    pub fn epochs_run(&self) -> usize {
        self.val_mse.len()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["epoch", "train_loss", "val_mse"])?;
        for (e, (l, v)) in self.train_loss.iter().zip(&self.val_mse).enumerate() {
            w.write_record([e.to_string(), l.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn params_hash<P: ParamArrays>(params: &P) -> String {
    let mut hasher = Sha256::new();
    for array in params.arrays() {
        for v in array {
            hasher.update(v.to_le_bytes());
        }
    }
    hasher.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Mean over windows of the per-window MSE.
pub fn mean_mse<M: Reconstructor + Sync>(model: &M, windows: &[WindowSample]) -> f64 {
    let per: Vec<f64> = windows
        .par_iter()
        .map(|w| {
            let pred = model.reconstruct(w);
            pred.iter().zip(&w.target).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / pred.len() as f64
        })
        .collect();
    per.iter().sum::<f64>() / windows.len() as f64
}

fn check_widths<M: Trainable>(model: &M, windows: &[WindowSample], label: &str) -> Result<()> {
    let (width, out) = model.io_widths();
    if let Some(w) = windows.iter().find(|w| w.width != width || w.target.len() != out) {
        return Err(ShredError::Shape(format!(
            "{label} window has width {} and {} targets, model expects {width} and {out}",
            w.width,
            w.target.len()
        )));
    }
    Ok(())
}

/// Batch loss sum and gradient sum, reduced in a fixed order.
fn batch_gradient<M: Trainable>(model: &M, batch: &[&WindowSample], loss: LossKind) -> (f64, M) {
    let weight = 1.0 / batch.len() as f64;
    let parts: Vec<(f64, M)> = batch
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| {
            let mut g = model.zeros_like();
            let l: f64 = chunk.iter().map(|w| model.accumulate(w, loss, weight, &mut g)).sum();
            (l, g)
        })
        .collect();
    let mut iter = parts.into_iter();
    let (mut total, mut grads) = iter.next().expect("nonempty batch");
    for (l, g) in iter {
        total += l;
        grads.add_assign(&g);
    }
    (total, grads)
}

/// Minibatch ADAM with validation-based model selection and early stopping.
///
/// Windows must already be scaled. Returns the parameters with the lowest
/// validation MSE.
pub fn train<M: Trainable>(
    train_set: &[WindowSample],
    val_set: &[WindowSample],
    init: M,
    config: &TrainConfig,
) -> Result<(M, TrainReport)> {
    config.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(ShredError::arg("training and validation sets must be nonempty"));
    }
    check_widths(&init, train_set, "training")?;
    check_widths(&init, val_set, "validation")?;

    let mut model = init;
    let mut state = AdamState::new(&model, config.learning_rate, config.beta1, config.beta2, config.epsilon)?;
    let mut rng = seed::rng(config.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    let mut best = model.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut train_curve = Vec::new();
    let mut val_curve = Vec::new();

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        state.learning_rate = config.learning_rate_at(epoch);
        let mut loss_sum = 0.0;
        for idx in order.chunks(config.batch_size) {
            let batch: Vec<&WindowSample> = idx.iter().map(|&i| &train_set[i]).collect();
            let (batch_loss, mut grads) = batch_gradient(&model, &batch, config.loss);
            if !batch_loss.is_finite() {
                return Err(ShredError::Divergence {
                    epoch,
                    detail: format!("batch loss {batch_loss}"),
                });
            }
            if let Some(array) = grads.first_non_finite() {
                return Err(ShredError::Divergence {
                    epoch,
                    detail: format!("non-finite gradient in `{array}`"),
                });
            }
            if let Some(clip) = config.clip_norm {
                let norm = grads.squared_norm().sqrt();
                if norm > clip {
                    grads.scale(clip / norm);
                }
            }
            adam_step(&mut model, &grads, &mut state)?;
            loss_sum += batch_loss;
        }
        let val = mean_mse(&model, val_set);
        if !val.is_finite() {
            return Err(ShredError::Divergence {
                epoch,
                detail: format!("validation MSE {val}"),
            });
        }
        train_curve.push(loss_sum / train_set.len() as f64);
        val_curve.push(val);
        if val < best_val {
            best_val = val;
            best_epoch = epoch;
            best = model.clone();
        } else if epoch - best_epoch >= config.patience {
            break;
        }
    }

    let report = TrainReport {
        train_loss: train_curve,
        val_mse: val_curve,
        best_epoch,
        best_val_mse: best_val,
        snapshot_id: params_hash(&best),
    };
    Ok((best, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nncore::{init_params, Architecture};

    fn arch(output: usize) -> Architecture {
        Architecture {
            hidden: 4,
            input: 1,
            output,
            layers: 1,
            decoder_widths: vec![8],
            final_activation: false,
        }
    }

    /// Windows of a sine whose target is a rank-1 function of the phase.
    fn sine_windows(count: usize, offset: usize) -> Vec<WindowSample> {
        (offset..offset + count)
            .map(|t| {
                let inputs: Vec<f64> = (0..5).map(|k| 0.5 + 0.4 * (0.3 * (t + k) as f64).sin()).collect();
                let last = inputs[4];
                WindowSample {
                    inputs,
                    steps: 5,
                    width: 1,
                    target: vec![last, 1.0 - last, 0.5 * last],
                    t_index: t,
                }
            })
            .collect()
    }

    fn config(epochs: usize) -> TrainConfig {
        TrainConfig {
            epochs,
            batch_size: 16,
            learning_rate: 1e-2,
            patience: 1000,
            seed: 5,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn training_reduces_validation_error() {
        let (tr, va) = (sine_windows(120, 0), sine_windows(30, 500));
        let init = init_params(&arch(3), 1);
        let before = mean_mse(&init, &va);
        let (model, report) = train(&tr, &va, init, &config(60)).unwrap();
        assert!(
            report.best_val_mse < 0.05 * before,
            "{} vs {before}",
            report.best_val_mse
        );
        assert_eq!(mean_mse(&model, &va), report.best_val_mse);
    }

    #[test]
    fn best_epoch_is_argmin() {
        let (tr, va) = (sine_windows(60, 0), sine_windows(20, 300));
        let (_, report) = train(&tr, &va, init_params(&arch(3), 2), &config(25)).unwrap();
        let min = report.val_mse.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(report.best_val_mse, min);
        assert_eq!(report.val_mse[report.best_epoch], min);
        assert_eq!(report.epochs_run(), 25);
    }

    #[test]
    fn early_stopping_respects_patience() {
        let (tr, va) = (sine_windows(60, 0), sine_windows(20, 300));
        let cfg = TrainConfig {
            patience: 3,
            learning_rate: 0.5,
            ..config(200)
        };
        let (_, report) = train(&tr, &va, init_params(&arch(3), 2), &cfg).unwrap();
        assert!(report.epochs_run() <= report.best_epoch + cfg.patience + 1);
    }

    #[test]
    fn seeded_training_is_reproducible() {
        let (tr, va) = (sine_windows(50, 0), sine_windows(10, 200));
        let a = train(&tr, &va, init_params(&arch(3), 3), &config(5)).unwrap();
        let b = train(&tr, &va, init_params(&arch(3), 3), &config(5)).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        let c = train(
            &tr,
            &va,
            init_params(&arch(3), 3),
            &TrainConfig { seed: 6, ..config(5) },
        )
        .unwrap();
        assert_ne!(a.1.snapshot_id, c.1.snapshot_id);
    }

    #[test]
    fn constant_targets_are_learned() {
        let tr: Vec<WindowSample> = sine_windows(40, 0)
            .into_iter()
            .map(|w| WindowSample {
                target: vec![0.25, 0.75, 0.5],
                ..w
            })
            .collect();
        let (model, report) = train(&tr, &tr[..10], init_params(&arch(3), 4), &config(150)).unwrap();
        assert!(report.best_val_mse < 1e-4, "{}", report.best_val_mse);
        assert!(mean_mse(&model, &tr) < 1e-4);
    }

    #[test]
    fn cosine_schedule_endpoints() {
        let cfg = TrainConfig {
            schedule: LrSchedule::Cosine,
            final_learning_rate: 1e-5,
            ..config(11)
        };
        assert_eq!(cfg.learning_rate_at(0), cfg.learning_rate);
        assert!((cfg.learning_rate_at(10) - 1e-5).abs() < 1e-15);
        assert!((cfg.learning_rate_at(5) - 0.5 * (cfg.learning_rate + 1e-5)).abs() < 1e-12);
        assert_eq!(config(11).learning_rate_at(7), config(11).learning_rate);
    }

    #[test]
    fn width_mismatch_and_bad_config_rejected() {
        let tr = sine_windows(10, 0);
        assert!(matches!(
            train(&tr, &tr, init_params(&arch(4), 1), &config(1)),
            Err(ShredError::Shape(_))
        ));
        let err = train(
            &tr,
            &tr,
            init_params(&arch(3), 1),
            &TrainConfig {
                batch_size: 0,
                ..config(1)
            },
        )
        .unwrap_err();
        assert!(err.to_string().contains("train.batch_size"));
        assert!(train(&[], &tr, init_params(&arch(3), 1), &config(1)).is_err());
    }
}
