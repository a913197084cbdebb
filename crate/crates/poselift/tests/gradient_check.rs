use figuresdf_core::rng;
use figuresdf_poselift::{MlpModel, Mode};
use ndarray::Array2;
use rand::Rng;

fn loss(model: &MlpModel, x: &Array2<f64>, t: &Array2<f64>) -> f64 {
    let fwd = model.forward(x, Mode::Train { seed: 0 }).unwrap();
    model.backward(&fwd, t).unwrap().0
}

/// Largest relative error between analytic and central-difference gradients.
/// The denominator has a floor of 1e-5 so that vanishing gradients compare
/// on an absolute scale.
fn worst_relative_error(input: usize, width: usize, output: usize, batch: usize, seed: u64) -> f64 {
    let mut model = MlpModel::new(input, width, output, 0.0, seed).unwrap();
    let mut r = rng::seeded(seed + 100);
    for t in model.trainable_mut() {
        for v in t.iter_mut() {
            *v += r.gen_range(-0.2..0.2);
        }
    }
    let x = Array2::from_shape_fn((batch, input), |_| r.gen_range(-1.0..1.0));
    let t = Array2::from_shape_fn((batch, output), |_| r.gen_range(-1.0..1.0));
    let fwd = model.forward(&x, Mode::Train { seed: 0 }).unwrap();
    let (_, grads) = model.backward(&fwd, &t).unwrap();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let n_tensors = grads.0.len();
    for k in 0..n_tensors {
        for i in 0..grads.0[k].len() {
            let orig = model.trainable_mut()[k][i];
            model.trainable_mut()[k][i] = orig + h;
            let up = loss(&model, &x, &t);
            model.trainable_mut()[k][i] = orig - h;
            let down = loss(&model, &x, &t);
            model.trainable_mut()[k][i] = orig;
            let numeric = (up - down) / (2.0 * h);
            let analytic = grads.0[k][i];
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-5);
            worst = worst.max(rel);
        }
    }
    worst
}

#[test]
fn width_8_gradients_match_finite_differences() {
    for seed in 0..3 {
        let e = worst_relative_error(42, 8, 21, 6, seed);
        assert!(e < 1e-4, "seed {seed}: relative error {e}");
    }
}

#[test]
fn small_batch_gradients_match() {
    let e = worst_relative_error(5, 8, 3, 3, 9);
    assert!(e < 1e-4, "relative error {e}");
}
