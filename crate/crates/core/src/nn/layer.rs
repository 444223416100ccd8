use ndarray::{Array1, Array2, Axis};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Scalar;
use crate::numerics::RngStream;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
    Identity,
}

impl Activation {
    pub fn apply<F: Scalar>(self, x: F) -> F {
        match self {
            Activation::Relu => x.max(F::zero()),
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => F::one() / (F::one() + (-x).exp()),
            Activation::Identity => x,
        }
    }

    /// Derivative given the pre-activation `x` and output `y`.
    pub fn derivative<F: Scalar>(self, x: F, y: F) -> F {
        match self {
            Activation::Relu => {
                if x > F::zero() {
                    F::one()
                } else {
                    F::zero()
                }
            }
            Activation::Tanh => F::one() - y * y,
            Activation::Sigmoid => y * (F::one() - y),
            Activation::Identity => F::one(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics in batch-norm layers.
    Train,
    /// Running statistics in batch-norm layers.
    Inference,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchNorm<F: Scalar> {
    pub gamma: Array1<F>,
    pub beta: Array1<F>,
    pub running_mean: Array1<F>,
    pub running_var: Array1<F>,
    pub momentum: F,
    pub eps: F,
}

impl<F: Scalar> BatchNorm<F> {
    pub fn new(width: usize) -> Self {
        Self {
            gamma: Array1::ones(width),
            beta: Array1::zeros(width),
            running_mean: Array1::zeros(width),
            running_var: Array1::ones(width),
            momentum: F::from_f64(0.9).unwrap(),
            eps: F::from_f64(1e-5).unwrap(),
        }
    }
}

/// Fully connected layer `y = f(BN(W x + b))`, batch rows are samples.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer<F: Scalar> {
    /// `out × in`.
    pub weights: Array2<F>,
    pub bias: Array1<F>,
    pub activation: Activation,
    pub batchnorm: Option<BatchNorm<F>>,
}

#[derive(Clone, Debug)]
pub struct LayerCache<F: Scalar> {
    input: Array2<F>,
    /// Input of the activation.
    pre: Array2<F>,
    output: Array2<F>,
    bn: Option<BnCache<F>>,
}

#[derive(Clone, Debug)]
struct BnCache<F: Scalar> {
    xhat: Array2<F>,
    inv_std: Array1<F>,
    batch_mean: Array1<F>,
    batch_var: Array1<F>,
    train: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerGrads<F: Scalar> {
    pub weights: Array2<F>,
    pub bias: Array1<F>,
    pub gamma: Option<Array1<F>>,
    pub beta: Option<Array1<F>>,
}

impl<F: Scalar> LayerGrads<F> {
    pub fn slices(&self) -> Vec<&[F]> {
        let mut out = vec![self.weights.as_slice().unwrap(), self.bias.as_slice().unwrap()];
        if let (Some(g), Some(b)) = (&self.gamma, &self.beta) {
            out.push(g.as_slice().unwrap());
            out.push(b.as_slice().unwrap());
        }
        out
    }
}

impl<F: Scalar> DenseLayer<F> {
    /// Zero-initialized layer.
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation, batchnorm: bool) -> Self {
        Self {
            weights: Array2::zeros((outputs, inputs)),
            bias: Array1::zeros(outputs),
            activation,
            batchnorm: batchnorm.then(|| BatchNorm::new(outputs)),
        }
    }

    /// He-normal weights for ReLU layers, Glorot-normal otherwise; zero bias.
    pub fn init(inputs: usize, outputs: usize, activation: Activation, batchnorm: bool, rng: &mut RngStream) -> Self {
        let var = match activation {
            Activation::Relu => 2.0 / inputs as f64,
            _ => 2.0 / (inputs + outputs) as f64,
        };
        let normal = Normal::new(0.0, var.sqrt()).expect("finite variance");
        let mut layer = Self::zeros(inputs, outputs, activation, batchnorm);
        layer
            .weights
            .iter_mut()
            .for_each(|w| *w = F::from_f64(normal.sample(rng)).unwrap());
        layer
    }

    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }

    /// Parameter tensors in checkpoint order: W, b, then γ, β.
    pub fn params_mut(&mut self) -> Vec<&mut [F]> {
        let mut out = vec![
            self.weights.as_slice_mut().unwrap(),
            self.bias.as_slice_mut().unwrap(),
        ];
        if let Some(bn) = &mut self.batchnorm {
            out.push(bn.gamma.as_slice_mut().unwrap());
            out.push(bn.beta.as_slice_mut().unwrap());
        }
        out
    }

    pub fn param_count(&self) -> usize {
        let bn = self.batchnorm.as_ref().map_or(0, |b| b.gamma.len() * 2);
        self.weights.len() + self.bias.len() + bn
    }

    pub fn forward(&self, x: &Array2<F>, mode: Mode) -> Result<(Array2<F>, LayerCache<F>)> {
        if x.ncols() != self.inputs() {
            return Err(Error::LengthMismatch {
                expected: self.inputs(),
                got: x.ncols(),
            });
        }
        let z = x.dot(&self.weights.t()) + &self.bias;
        let (pre, bn) = match &self.batchnorm {
            None => (z, None),
            Some(bn) => {
                let train = mode == Mode::Train && x.nrows() > 0;
                let (mean, var) = if train {
                    let mean = z.mean_axis(Axis(0)).unwrap();
                    let var = (&z - &mean).mapv(|d| d * d).mean_axis(Axis(0)).unwrap();
                    (mean, var)
                } else {
                    (bn.running_mean.clone(), bn.running_var.clone())
                };
                let inv_std = var.mapv(|v| F::one() / (v + bn.eps).sqrt());
                let xhat = (&z - &mean) * &inv_std;
                let pre = &xhat * &bn.gamma + &bn.beta;
                (
                    pre,
                    Some(BnCache {
                        xhat,
                        inv_std,
                        batch_mean: mean,
                        batch_var: var,
                        train,
                    }),
                )
            }
        };
        let act = self.activation;
        let output = pre.mapv(|v| act.apply(v));
        let cache = LayerCache {
            input: x.clone(),
            pre,
            output: output.clone(),
            bn,
        };
        Ok((output, cache))
    }

    /// Gradients of the loss w.r.t. the parameters and the layer input,
    /// given the gradient w.r.t. the layer output.
    pub fn backward(&self, cache: &LayerCache<F>, grad_out: &Array2<F>) -> (Array2<F>, LayerGrads<F>) {
        let act = self.activation;
        let mut du = grad_out.clone();
        ndarray::Zip::from(&mut du)
            .and(&cache.pre)
            .and(&cache.output)
            .for_each(|g, &x, &y| *g = *g * act.derivative(x, y));
        let (dz, gamma, beta) = match (&self.batchnorm, &cache.bn) {
            (Some(bn), Some(c)) => {
                let dgamma = (&du * &c.xhat).sum_axis(Axis(0));
                let dbeta = du.sum_axis(Axis(0));
                let dxhat = &du * &bn.gamma;
                let dz = if c.train {
                    let b = F::from_usize(du.nrows()).unwrap();
                    let sum_dxhat = dxhat.sum_axis(Axis(0));
                    let sum_dxhat_xhat = (&dxhat * &c.xhat).sum_axis(Axis(0));
                    let scaled = &c.inv_std / b;
                    ((&dxhat * b) - &sum_dxhat - &(&c.xhat * &sum_dxhat_xhat)) * &scaled
                } else {
                    &dxhat * &c.inv_std
                };
                (dz, Some(dgamma), Some(dbeta))
            }
            _ => (du, None, None),
        };
        let grads = LayerGrads {
            weights: dz.t().dot(&cache.input),
            bias: dz.sum_axis(Axis(0)),
            gamma,
            beta,
        };
        (dz.dot(&self.weights), grads)
    }

    /// Fold the batch statistics of a training-mode pass into the running
    /// statistics.
    pub fn update_running_stats(&mut self, cache: &LayerCache<F>) {
        if let (Some(bn), Some(c)) = (&mut self.batchnorm, &cache.bn) {
            if !c.train {
                return;
            }
            let m = bn.momentum;
            let one_m = F::one() - m;
            bn.running_mean = &bn.running_mean * m + &c.batch_mean * one_m;
            bn.running_var = &bn.running_var * m + &c.batch_var * one_m;
        }
    }

    /// Cast to another precision.
    pub fn cast<G: Scalar>(&self) -> DenseLayer<G> {
        let c = |a: &Array1<F>| a.mapv(|v| G::from_f64(v.to_f64().unwrap()).unwrap());
        DenseLayer {
            weights: self.weights.mapv(|v| G::from_f64(v.to_f64().unwrap()).unwrap()),
            bias: c(&self.bias),
            activation: self.activation,
            batchnorm: self.batchnorm.as_ref().map(|bn| BatchNorm {
                gamma: c(&bn.gamma),
                beta: c(&bn.beta),
                running_mean: c(&bn.running_mean),
                running_var: c(&bn.running_var),
                momentum: G::from_f64(bn.momentum.to_f64().unwrap()).unwrap(),
                eps: G::from_f64(bn.eps.to_f64().unwrap()).unwrap(),
            }),
        }
    }
}
