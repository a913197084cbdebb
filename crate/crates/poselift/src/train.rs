use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use figuresdf_core::rng;

use crate::model::{Gradients, MlpModel, Mode, DEFAULT_DROPOUT};
use crate::PoseLiftError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub dropout: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 100, batch_size: 64, learning_rate: 0.001, dropout: DEFAULT_DROPOUT, seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), PoseLiftError> {
        if self.epochs == 0 || self.batch_size < 2 {
            return Err(PoseLiftError::Config("epochs must be positive and batch size at least 2".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(PoseLiftError::Config(format!("learning rate {} is invalid", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(PoseLiftError::Config(format!("dropout rate {} must lie in [0, 1)", self.dropout)));
        }
        Ok(())
    }
}

/// Adam with beta1 0.9, beta2 0.999, epsilon 1e-8.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    step: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub const BETA1: f64 = 0.9;
    pub const BETA2: f64 = 0.999;
    pub const EPS: f64 = 1e-8;

    pub fn new(model: &mut MlpModel, lr: f64) -> Adam {
        let shapes: Vec<usize> = model.trainable_mut().iter().map(|t| t.len()).collect();
        Adam { lr, step: 0, m: shapes.iter().map(|&n| vec![0.0; n]).collect(), v: shapes.iter().map(|&n| vec![0.0; n]).collect() }
    }

    pub fn update(&mut self, model: &mut MlpModel, grads: &Gradients) {
        self.step += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.step);
        let c2 = 1.0 - Self::BETA2.powi(self.step);
        for (k, params) in model.trainable_mut().into_iter().enumerate() {
            let (m, v, g) = (&mut self.m[k], &mut self.v[k], &grads.0[k]);
            for i in 0..params.len() {
                m[i] = Self::BETA1 * m[i] + (1.0 - Self::BETA1) * g[i];
                v[i] = Self::BETA2 * v[i] + (1.0 - Self::BETA2) * g[i] * g[i];
                params[i] -= self.lr * (m[i] / c1) / ((v[i] / c2).sqrt() + Self::EPS);
            }
        }
    }
}

/// Mini-batch training on mean squared error. Rows are reshuffled every
/// epoch from `cfg.seed`; a trailing batch of one row is skipped. Returns
/// the mean training loss of each epoch.
pub fn train(model: &mut MlpModel, inputs: &Array2<f64>, targets: &Array2<f64>, cfg: &TrainConfig) -> Result<Vec<f64>, PoseLiftError> {
    cfg.validate()?;
    let n = inputs.nrows();
    if targets.nrows() != n || targets.ncols() != model.output_width() {
        return Err(PoseLiftError::Shape(format!("{n} inputs but targets of shape {:?}", targets.shape())));
    }
    if n < cfg.batch_size {
        return Err(PoseLiftError::Config(format!("{n} samples do not fill one batch of {}", cfg.batch_size)));
    }
    model.dropout = cfg.dropout;
    let mut adam = Adam::new(model, cfg.learning_rate);
    let mut r = rng::seeded(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut log = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut r);
        let (mut total, mut count) = (0.0, 0usize);
        for idx in order.chunks(cfg.batch_size).filter(|c| c.len() >= 2) {
            let x = inputs.select(Axis(0), idx);
            let t = targets.select(Axis(0), idx);
            let fwd = model.forward(&x, Mode::Train { seed: r.gen() })?;
            let (loss, grads) = model.backward(&fwd, &t)?;
            model.update_running_stats(&fwd);
            adam.update(model, &grads);
            total += loss * idx.len() as f64;
            count += idx.len();
        }
        let mean = total / count as f64;
        log::debug!("epoch {}: loss {mean:.6}", epoch + 1);
        log.push(mean);
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize) -> (Array2<f64>, Array2<f64>) {
        let mut r = rng::seeded(11);
        let x = Array2::from_shape_fn((n, 4), |_| r.gen_range(-1.0..1.0));
        let t = Array2::from_shape_fn((n, 2), |(i, j)| x[[i, j]] * 0.5 - x[[i, j + 2]]);
        (x, t)
    }

    #[test]
    fn zero_learning_rate_freezes_parameters() {
        let (x, t) = toy(16);
        let mut m = MlpModel::new(4, 8, 2, 0.0, 1).unwrap();
        let before = m.clone();
        let cfg = TrainConfig { epochs: 3, batch_size: 16, learning_rate: 0.0, dropout: 0.0, seed: 1 };
        let log = train(&mut m, &x, &t, &cfg).unwrap();
        let mut a = m.clone();
        let mut b = before.clone();
        assert_eq!(a.trainable_mut(), b.trainable_mut());
        for l in &log {
            assert!((l - log[0]).abs() <= 1e-12 * log[0]);
        }
    }

    #[test]
    fn same_seed_same_log() {
        let (x, t) = toy(40);
        let cfg = TrainConfig { epochs: 5, batch_size: 8, ..TrainConfig::default() };
        let run = || {
            let mut m = MlpModel::new(4, 8, 2, 0.5, 3).unwrap();
            train(&mut m, &x, &t, &cfg).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn loss_decreases() {
        let (x, t) = toy(64);
        let mut m = MlpModel::new(4, 16, 2, 0.0, 3).unwrap();
        let cfg = TrainConfig { epochs: 60, batch_size: 16, learning_rate: 0.01, dropout: 0.0, seed: 2 };
        let log = train(&mut m, &x, &t, &cfg).unwrap();
        assert!(log[59] < 0.2 * log[0], "{log:?}");
    }

    #[test]
    fn rejects_small_dataset() {
        let (x, t) = toy(10);
        let mut m = MlpModel::new(4, 8, 2, 0.0, 1).unwrap();
        assert!(train(&mut m, &x, &t, &TrainConfig::default()).is_err());
    }
}
