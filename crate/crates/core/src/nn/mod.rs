//! Multi-task MLP receiver: dense layers with batch-norm, a shared trunk
//! feeding communication and sensing branches, Adam, dataset generation,
//! training, evaluation and checkpoints.

pub mod checkpoint;
pub mod dataset;
pub mod layer;
pub mod model;
pub mod receiver;
pub mod train;

use std::fmt::{Debug, Display};

use ndarray::{Array2, LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, ToPrimitive};

pub use layer::{Activation, DenseLayer, Mode};
pub use model::{multitask_loss, AdamConfig, ArchSpec, LossParts, LossWeights, MlpModel};

/// Floating-point element type of a network.
pub trait Scalar:
    LinalgScalar + Float + FromPrimitive + ToPrimitive + ScalarOperand + Debug + Display + Send + Sync + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Largest relative error `|g − ĝ| / max(|g| + |ĝ|, 1e-3)` between the
/// backprop gradient and central finite differences (step 1e-5) over every
/// parameter of `model`, using the training-mode loss.
pub fn gradient_check(model: &mut MlpModel<f64>, x: &Array2<f64>, comm: &Array2<f64>, sense: &Array2<f64>) -> crate::Result<f64> {
    let pass = model.forward(x, Mode::Train)?;
    let (_, grads) = model.backward(&pass, comm, sense)?;
    let analytic: Vec<Vec<f64>> = grads.slices().iter().map(|g| g.to_vec()).collect();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for (t, tensor) in analytic.iter().enumerate() {
        for (i, &a) in tensor.iter().enumerate() {
            let mut eval = |delta: f64| {
                let mut params: Vec<&mut [f64]> = model.layers_mut().flat_map(|l| l.params_mut()).collect();
                params[t][i] += delta;
                drop(params);
                model.loss(x, comm, sense, Mode::Train).map(|l| l.total)
            };
            let plus = eval(h)?;
            let minus = eval(-2.0 * h)?;
            eval(h)?;
            let numeric = (plus - minus) / (2.0 * h);
            worst = worst.max((a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-3));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod gradient_tests {
    use super::layer::{Activation, Mode};
    use super::model::{ArchSpec, LossWeights, MlpModel};
    use crate::numerics::RngStream;
    use ndarray::Array2;
    use rand::Rng;

    fn random_matrix(rows: usize, cols: usize, scale: f64, rng: &mut RngStream) -> Array2<f64> {
        Array2::from_shape_fn((rows, cols), |_| scale * (2.0 * rng.random::<f64>() - 1.0))
    }

    fn max_rel_error(model: &mut MlpModel<f64>, x: &Array2<f64>, c: &Array2<f64>, s: &Array2<f64>) -> f64 {
        // Nonzero biases keep ReLU inputs away from the kink at exactly 0,
        // which a fully inactive previous layer would otherwise produce.
        let mut rng = RngStream::new(99, 0);
        for l in model.layers_mut() {
            l.bias.mapv_inplace(|_| 0.2 * (2.0 * rng.random::<f64>() - 1.0));
            if let Some(bn) = &mut l.batchnorm {
                bn.gamma.mapv_inplace(|_| 0.5 + rng.random::<f64>());
                bn.beta.mapv_inplace(|_| 0.2 * (2.0 * rng.random::<f64>() - 1.0));
            }
        }
        super::gradient_check(model, x, c, s).unwrap()
    }

    fn spec(bn: bool, comm_act: Activation, sense_act: Activation) -> ArchSpec {
        ArchSpec {
            input: 5,
            shared: vec![7, 6],
            comm_hidden: vec![4],
            comm_out: 3,
            comm_activation: comm_act,
            sense_hidden: vec![5, 3],
            sense_out: 2,
            sense_activation: sense_act,
            batchnorm: bn,
        }
    }

    #[test]
    fn finite_differences_match_backprop() {
        let acts = [Activation::Tanh, Activation::Sigmoid, Activation::Identity, Activation::Relu];
        let mut rng = RngStream::new(11, 0);
        for bn in [false, true] {
            for &ca in &acts {
                for &sa in &acts {
                    let mut model = MlpModel::<f64>::build(&spec(bn, ca, sa), LossWeights { a1: 0.7, a2: 1.3 }, &mut rng).unwrap();
                    model.norm.mean = random_matrix(1, 5, 0.3, &mut rng).row(0).to_owned();
                    let x = random_matrix(9, 5, 1.0, &mut rng);
                    let c = random_matrix(9, 3, 0.7, &mut rng);
                    let s = random_matrix(9, 2, 0.5, &mut rng);
                    let err = max_rel_error(&mut model, &x, &c, &s);
                    assert!(err < 1e-5, "bn={bn} comm={ca:?} sense={sa:?}: {err}");
                }
            }
        }
    }

    #[test]
    fn finite_differences_single_task_branches() {
        let mut rng = RngStream::new(12, 0);
        let mut s = spec(true, Activation::Tanh, Activation::Sigmoid);
        s.comm_out = 0;
        let mut model = MlpModel::<f64>::build(&s, LossWeights::default(), &mut rng).unwrap();
        let x = random_matrix(6, 5, 1.0, &mut rng);
        let c = Array2::zeros((6, 0));
        let t = random_matrix(6, 2, 0.5, &mut rng).mapv(f64::abs);
        assert!(max_rel_error(&mut model, &x, &c, &t) < 1e-5);
        let mut s = spec(false, Activation::Tanh, Activation::Sigmoid);
        s.sense_out = 0;
        let mut model = MlpModel::<f64>::build(&s, LossWeights::default(), &mut rng).unwrap();
        let c = random_matrix(6, 3, 0.5, &mut rng);
        let t = Array2::zeros((6, 0));
        assert!(max_rel_error(&mut model, &x, &c, &t) < 1e-5);
    }

    #[test]
    fn zero_error_batch_has_zero_gradients() {
        let mut rng = RngStream::new(13, 0);
        let model = MlpModel::<f64>::build(&spec(true, Activation::Tanh, Activation::Sigmoid), LossWeights::default(), &mut rng).unwrap();
        let x = random_matrix(8, 5, 1.0, &mut rng);
        let pass = model.forward(&x, Mode::Train).unwrap();
        let (loss, grads) = model.backward(&pass, &pass.comm.clone(), &pass.sense.clone()).unwrap();
        assert_eq!(loss.total, 0.0);
        assert!(grads.slices().iter().all(|g| g.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn scaling_a1_scales_comm_gradients() {
        let mut rng = RngStream::new(14, 0);
        let mut model = MlpModel::<f64>::build(&spec(false, Activation::Tanh, Activation::Sigmoid), LossWeights::default(), &mut rng).unwrap();
        let x = random_matrix(8, 5, 1.0, &mut rng);
        let c = random_matrix(8, 3, 0.7, &mut rng);
        let s = random_matrix(8, 2, 0.5, &mut rng);
        let pass = model.forward(&x, Mode::Train).unwrap();
        let (l1, g1) = model.backward(&pass, &c, &s).unwrap();
        model.weights.a1 = 3.0;
        let (l3, g3) = model.backward(&pass, &c, &s).unwrap();
        for (a, b) in g1.comm.iter().zip(&g3.comm) {
            for (x, y) in a.slices().iter().zip(b.slices()) {
                for (p, q) in x.iter().zip(y) {
                    assert!((3.0 * p - q).abs() <= 1e-12 * q.abs().max(1.0));
                }
            }
        }
        assert_eq!(g1.sense, g3.sense);
        assert!((l3.total - (3.0 * l1.comm + l1.sense)).abs() < 1e-12);
    }
}
