use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use figuresdf_core::rng;

use crate::PoseLiftError;

pub const BN_MOMENTUM: f64 = 0.99;
pub const BN_EPS: f64 = 1e-5;
pub const DEFAULT_HIDDEN: usize = 1024;
pub const DEFAULT_DROPOUT: f64 = 0.5;

/// `y = x W + b` with `W` stored input-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Linear {
    fn he(input: usize, output: usize, rng: &mut impl Rng) -> Linear {
        let normal = Normal::new(0.0, (2.0 / input as f64).sqrt()).expect("positive std");
        Linear { w: Array2::from_shape_fn((input, output), |_| normal.sample(rng)), b: Array1::zeros(output) }
    }

    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.w) + &self.b
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
}

impl BatchNorm {
    fn new(width: usize) -> BatchNorm {
        BatchNorm {
            gamma: Array1::ones(width),
            beta: Array1::zeros(width),
            running_mean: Array1::zeros(width),
            running_var: Array1::ones(width),
        }
    }
}

/// Linear, batch normalization, rectifier, dropout.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub linear: Linear,
    pub bn: BatchNorm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualBlock {
    pub layers: [Dense; 2],
}

/// `input -> Dense -> 2 x (x + Dense(Dense(x))) -> Linear`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub input: Dense,
    pub blocks: [ResidualBlock; 2],
    pub output: Linear,
    pub dropout: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Eval,
    /// Batch statistics and dropout drawn from `seed`.
    Train {
        seed: u64,
    },
}

#[derive(Debug, Clone)]
struct DenseCache {
    x: Array2<f64>,
    xhat: Array2<f64>,
    inv_std: Array1<f64>,
    pre_relu: Array2<f64>,
    mask: Option<Array2<f64>>,
    batch_stats: Option<(Array1<f64>, Array1<f64>)>,
}

/// A recorded forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    pub output: Array2<f64>,
    caches: Vec<DenseCache>,
    last_hidden: Array2<f64>,
}

/// Gradients of every trainable tensor, flattened, in
/// [`MlpModel::trainable_mut`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<Vec<f64>>);

struct DenseGrads {
    w: Array2<f64>,
    b: Array1<f64>,
    gamma: Array1<f64>,
    beta: Array1<f64>,
}

impl Dense {
    fn new(input: usize, output: usize, rng: &mut impl Rng) -> Dense {
        Dense { linear: Linear::he(input, output, rng), bn: BatchNorm::new(output) }
    }

    fn forward(&self, x: &Array2<f64>, train: bool, dropout: f64, rng: &mut impl Rng) -> (Array2<f64>, DenseCache) {
        let z = self.linear.forward(x);
        let (mean, var) = if train {
            let mean = z.mean_axis(Axis(0)).expect("nonempty batch");
            let var = (&z - &mean).mapv(|v| v * v).mean_axis(Axis(0)).expect("nonempty batch");
            (mean, var)
        } else {
            (self.bn.running_mean.clone(), self.bn.running_var.clone())
        };
        let inv_std = var.mapv(|v| 1.0 / (v + BN_EPS).sqrt());
        let xhat = (&z - &mean) * &inv_std;
        let pre_relu = &xhat * &self.bn.gamma + &self.bn.beta;
        let mut out = pre_relu.mapv(|v| v.max(0.0));
        let mask = (train && dropout > 0.0).then(|| {
            let keep = 1.0 - dropout;
            Array2::from_shape_fn(out.raw_dim(), |_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
        });
        if let Some(m) = &mask {
            out *= m;
        }
        let cache = DenseCache { x: x.clone(), xhat, inv_std, pre_relu, mask, batch_stats: train.then_some((mean, var)) };
        (out, cache)
    }

    fn backward(&self, dout: &Array2<f64>, cache: &DenseCache) -> (Array2<f64>, DenseGrads) {
        let mut da = dout.clone();
        if let Some(m) = &cache.mask {
            da *= m;
        }
        da.zip_mut_with(&cache.pre_relu, |g, &a| {
            if a <= 0.0 {
                *g = 0.0
            }
        });
        let gamma = (&da * &cache.xhat).sum_axis(Axis(0));
        let beta = da.sum_axis(Axis(0));
        let dxhat = &da * &self.bn.gamma;
        let dz = if cache.batch_stats.is_some() {
            let n = dxhat.nrows() as f64;
            let sum = dxhat.sum_axis(Axis(0));
            let dot = (&dxhat * &cache.xhat).sum_axis(Axis(0));
            ((&dxhat * n - &sum) - &cache.xhat * &dot) * &(&cache.inv_std / n)
        } else {
            &dxhat * &cache.inv_std
        };
        let w = cache.x.t().dot(&dz);
        let b = dz.sum_axis(Axis(0));
        let dx = dz.dot(&self.linear.w.t());
        (dx, DenseGrads { w, b, gamma, beta })
    }
}

fn into_flat<D: ndarray::Dimension>(a: ndarray::Array<f64, D>) -> Vec<f64> {
    a.as_standard_layout().iter().copied().collect()
}

impl MlpModel {
    /// He-initialized weights, unit batch-norm scale, zero shifts.
    pub fn new(input: usize, hidden: usize, output: usize, dropout: f64, seed: u64) -> Result<MlpModel, PoseLiftError> {
        if input == 0 || hidden == 0 || output == 0 {
            return Err(PoseLiftError::Config("layer widths must be positive".into()));
        }
        check_dropout(dropout)?;
        let mut r = rng::seeded(seed);
        let input_layer = Dense::new(input, hidden, &mut r);
        let blocks = [(); 2].map(|_| ResidualBlock { layers: [(); 2].map(|_| Dense::new(hidden, hidden, &mut r)) });
        let output_layer = Linear::he(hidden, output, &mut r);
        Ok(MlpModel { input: input_layer, blocks, output: output_layer, dropout })
    }

    pub fn input_width(&self) -> usize {
        self.input.linear.w.nrows()
    }

    pub fn hidden_width(&self) -> usize {
        self.input.linear.w.ncols()
    }

    pub fn output_width(&self) -> usize {
        self.output.w.ncols()
    }

    fn denses(&self) -> [&Dense; 5] {
        let [b0, b1] = &self.blocks;
        [&self.input, &b0.layers[0], &b0.layers[1], &b1.layers[0], &b1.layers[1]]
    }

    fn denses_mut(&mut self) -> [&mut Dense; 5] {
        let [b0, b1] = &mut self.blocks;
        let [l00, l01] = &mut b0.layers;
        let [l10, l11] = &mut b1.layers;
        [&mut self.input, l00, l01, l10, l11]
    }

    /// Weights, biases and batch-norm scale/shift, layer by layer.
    pub fn trainable_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        let [b0, b1] = &mut self.blocks;
        let [l00, l01] = &mut b0.layers;
        let [l10, l11] = &mut b1.layers;
        for d in [&mut self.input, l00, l01, l10, l11] {
            let Dense { linear, bn } = d;
            out.push(linear.w.as_slice_mut().expect("standard layout"));
            out.push(linear.b.as_slice_mut().expect("standard layout"));
            out.push(bn.gamma.as_slice_mut().expect("standard layout"));
            out.push(bn.beta.as_slice_mut().expect("standard layout"));
        }
        out.push(self.output.w.as_slice_mut().expect("standard layout"));
        out.push(self.output.b.as_slice_mut().expect("standard layout"));
        out
    }

    /// Every tensor including running statistics, as `(shape, values)`, in
    /// declaration order.
    pub fn tensors(&self) -> Vec<(Vec<usize>, Vec<f64>)> {
        let mut out = Vec::new();
        for d in self.denses() {
            out.push((d.linear.w.shape().to_vec(), into_flat(d.linear.w.clone())));
            for v in [&d.linear.b, &d.bn.gamma, &d.bn.beta, &d.bn.running_mean, &d.bn.running_var] {
                out.push((vec![v.len()], v.to_vec()));
            }
        }
        out.push((self.output.w.shape().to_vec(), into_flat(self.output.w.clone())));
        out.push((vec![self.output.b.len()], self.output.b.to_vec()));
        out
    }

    /// Inverse of [`tensors`](Self::tensors).
    pub fn from_tensors(tensors: &[(Vec<usize>, Vec<f64>)], dropout: f64) -> Result<MlpModel, PoseLiftError> {
        if tensors.len() != 32 {
            return Err(PoseLiftError::Format(format!("expected 32 network tensors, got {}", tensors.len())));
        }
        check_dropout(dropout)?;
        let matrix = |k: usize| -> Result<Array2<f64>, PoseLiftError> {
            let (shape, data) = &tensors[k];
            match shape.as_slice() {
                &[r, c] => Array2::from_shape_vec((r, c), data.clone()).map_err(|e| PoseLiftError::Format(e.to_string())),
                _ => Err(PoseLiftError::Format(format!("tensor {k} should be a matrix"))),
            }
        };
        let vector = |k: usize, len: usize| -> Result<Array1<f64>, PoseLiftError> {
            let (shape, data) = &tensors[k];
            if shape.as_slice() != [len] || data.len() != len {
                return Err(PoseLiftError::Format(format!("tensor {k} should have shape [{len}]")));
            }
            Ok(Array1::from(data.clone()))
        };
        let dense = |k: usize| -> Result<Dense, PoseLiftError> {
            let w = matrix(k)?;
            let n = w.ncols();
            let d = Dense {
                linear: Linear { w, b: vector(k + 1, n)? },
                bn: BatchNorm {
                    gamma: vector(k + 2, n)?,
                    beta: vector(k + 3, n)?,
                    running_mean: vector(k + 4, n)?,
                    running_var: vector(k + 5, n)?,
                },
            };
            if !d.bn.running_var.iter().all(|&v| v > 0.0) {
                return Err(PoseLiftError::Format(format!("running variance of tensor {} is not positive", k + 5)));
            }
            Ok(d)
        };
        let input = dense(0)?;
        let blocks = [ResidualBlock { layers: [dense(6)?, dense(12)?] }, ResidualBlock { layers: [dense(18)?, dense(24)?] }];
        let w = matrix(30)?;
        let output = Linear { b: vector(31, w.ncols())?, w };
        let model = MlpModel { input, blocks, output, dropout };
        let h = model.hidden_width();
        let consistent = model.denses()[1..].iter().all(|d| d.linear.w.shape() == [h, h]) && model.output.w.nrows() == h;
        if !consistent {
            return Err(PoseLiftError::Format("layer shapes are inconsistent".into()));
        }
        Ok(model)
    }

    pub fn forward(&self, x: &Array2<f64>, mode: Mode) -> Result<Forward, PoseLiftError> {
        if x.ncols() != self.input_width() {
            return Err(PoseLiftError::Shape(format!("input has {} columns, model expects {}", x.ncols(), self.input_width())));
        }
        let (train, seed) = match mode {
            Mode::Eval => (false, 0),
            Mode::Train { seed } => (true, seed),
        };
        if train && x.nrows() < 2 {
            return Err(PoseLiftError::BatchTooSmall(x.nrows()));
        }
        let mut r = rng::seeded(seed);
        let mut caches = Vec::with_capacity(5);
        let (mut h, c) = self.input.forward(x, train, self.dropout, &mut r);
        caches.push(c);
        for block in &self.blocks {
            let (y, c0) = block.layers[0].forward(&h, train, self.dropout, &mut r);
            let (y, c1) = block.layers[1].forward(&y, train, self.dropout, &mut r);
            caches.push(c0);
            caches.push(c1);
            h += &y;
        }
        Ok(Forward { output: self.output.forward(&h), caches, last_hidden: h })
    }

    /// Mean squared error over all outputs and its gradients.
    pub fn backward(&self, fwd: &Forward, targets: &Array2<f64>) -> Result<(f64, Gradients), PoseLiftError> {
        if targets.raw_dim() != fwd.output.raw_dim() {
            return Err(PoseLiftError::Shape(format!("targets {:?} vs outputs {:?}", targets.shape(), fwd.output.shape())));
        }
        let diff = &fwd.output - targets;
        let n = diff.len() as f64;
        let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
        let dout = diff * (2.0 / n);
        let out_w = fwd.last_hidden.t().dot(&dout);
        let out_b = dout.sum_axis(Axis(0));
        let mut dh = dout.dot(&self.output.w.t());
        let denses = self.denses();
        let mut grads: Vec<Option<DenseGrads>> = (0..5).map(|_| None).collect();
        for k in [3, 1] {
            let (dy, g1) = denses[k + 1].backward(&dh, &fwd.caches[k + 1]);
            let (dx, g0) = denses[k].backward(&dy, &fwd.caches[k]);
            grads[k + 1] = Some(g1);
            grads[k] = Some(g0);
            dh += &dx;
        }
        let (_, g) = denses[0].backward(&dh, &fwd.caches[0]);
        grads[0] = Some(g);
        let mut flat = Vec::with_capacity(22);
        for g in grads.into_iter().flatten() {
            flat.push(into_flat(g.w));
            flat.push(g.b.to_vec());
            flat.push(g.gamma.to_vec());
            flat.push(g.beta.to_vec());
        }
        flat.push(into_flat(out_w));
        flat.push(out_b.to_vec());
        Ok((loss, Gradients(flat)))
    }

    /// Blends the batch statistics of a training pass into the running
    /// statistics with momentum [`BN_MOMENTUM`].
    pub fn update_running_stats(&mut self, fwd: &Forward) {
        for (d, c) in self.denses_mut().into_iter().zip(&fwd.caches) {
            if let Some((mean, var)) = &c.batch_stats {
                d.bn.running_mean = &d.bn.running_mean * BN_MOMENTUM + mean * (1.0 - BN_MOMENTUM);
                d.bn.running_var = &d.bn.running_var * BN_MOMENTUM + var * (1.0 - BN_MOMENTUM);
            }
        }
    }

    /// Overwrites running statistics with the batch statistics of `fwd`.
    pub fn set_running_stats(&mut self, fwd: &Forward) {
        for (d, c) in self.denses_mut().into_iter().zip(&fwd.caches) {
            if let Some((mean, var)) = &c.batch_stats {
                d.bn.running_mean = mean.clone();
                d.bn.running_var = var.clone();
            }
        }
    }

    pub fn predict(&self, x: &Array2<f64>) -> Result<Array2<f64>, PoseLiftError> {
        Ok(self.forward(x, Mode::Eval)?.output)
    }
}

fn check_dropout(p: f64) -> Result<(), PoseLiftError> {
    if !(0.0..1.0).contains(&p) {
        return Err(PoseLiftError::Config(format!("dropout rate {p} must lie in [0, 1)")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn batch(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut r = rng::seeded(seed);
        Array2::from_shape_fn((rows, cols), |_| r.gen_range(-1.0..1.0))
    }

    #[test]
    fn eval_is_deterministic() {
        let m = MlpModel::new(6, 8, 3, 0.5, 1).unwrap();
        let x = batch(4, 6, 2);
        assert_eq!(m.predict(&x).unwrap(), m.predict(&x).unwrap());
        let a = m.forward(&x, Mode::Train { seed: 5 }).unwrap().output;
        assert_eq!(a, m.forward(&x, Mode::Train { seed: 5 }).unwrap().output);
    }

    #[test]
    fn train_needs_two_samples() {
        let m = MlpModel::new(6, 8, 3, 0.5, 1).unwrap();
        assert!(matches!(m.forward(&batch(1, 6, 0), Mode::Train { seed: 0 }), Err(PoseLiftError::BatchTooSmall(1))));
        assert!(m.forward(&batch(1, 6, 0), Mode::Eval).is_ok());
        assert!(matches!(m.forward(&batch(2, 5, 0), Mode::Eval), Err(PoseLiftError::Shape(_))));
    }

    #[test]
    fn train_matches_eval_without_dropout_at_batch_stats() {
        let mut m = MlpModel::new(6, 8, 3, 0.0, 4).unwrap();
        let x = batch(5, 6, 3);
        let fwd = m.forward(&x, Mode::Train { seed: 0 }).unwrap();
        m.set_running_stats(&fwd);
        let eval = m.predict(&x).unwrap();
        for (a, b) in fwd.output.iter().zip(eval.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn first_layer_by_hand() {
        let m = MlpModel::new(3, 8, 2, 0.0, 9).unwrap();
        let x = batch(2, 3, 1);
        let mut r = rng::seeded(0);
        let (y, _) = m.input.forward(&x, false, 0.0, &mut r);
        let d = &m.input;
        for i in 0..2 {
            for j in 0..8 {
                let mut z = d.linear.b[j];
                for k in 0..3 {
                    z += x[[i, k]] * d.linear.w[[k, j]];
                }
                let a = (z - d.bn.running_mean[j]) / (d.bn.running_var[j] + BN_EPS).sqrt() * d.bn.gamma[j] + d.bn.beta[j];
                assert!((y[[i, j]] - a.max(0.0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_model_has_zero_gradients() {
        let mut m = MlpModel::new(4, 8, 3, 0.0, 0).unwrap();
        for t in m.trainable_mut() {
            t.fill(0.0);
        }
        let x = batch(3, 4, 1);
        let fwd = m.forward(&x, Mode::Train { seed: 0 }).unwrap();
        let (loss, g) = m.backward(&fwd, &Array2::zeros((3, 3))).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.0.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn duplicated_samples_contribute_equally() {
        let m = MlpModel::new(4, 8, 3, 0.0, 2).unwrap();
        let row = batch(1, 4, 1);
        let x = ndarray::concatenate![Axis(0), row, row, batch(2, 4, 7)];
        let t = batch(4, 3, 8);
        let t =
            ndarray::concatenate![Axis(0), t.slice(ndarray::s![0..1, ..]), t.slice(ndarray::s![0..1, ..]), t.slice(ndarray::s![2.., ..])];
        let fwd = m.forward(&x, Mode::Eval).unwrap();
        let (_, g) = m.backward(&fwd, &t).unwrap();
        // The output bias gradient is the column sum of per-sample terms.
        let diff = &fwd.output - &t;
        assert_eq!(diff.row(0), diff.row(1));
        let expected: Vec<f64> = (0..3).map(|j| diff.column(j).sum() * 2.0 / 12.0).collect();
        for (a, b) in g.0[21].iter().zip(&expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn tensor_round_trip() {
        let m = MlpModel::new(5, 8, 2, 0.5, 3).unwrap();
        let t = m.tensors();
        assert_eq!(t.len(), 32);
        assert_eq!(MlpModel::from_tensors(&t, 0.5).unwrap(), m);
    }
}
