use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::layer::{Activation, DenseLayer, LayerCache, LayerGrads, Mode};
use super::Scalar;
use crate::numerics::RngStream;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub a1: f64,
    pub a2: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { a1: 1.0, a2: 1.0 }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if !(self.a1 >= 0.0 && self.a2 >= 0.0 && self.a1.is_finite() && self.a2.is_finite()) {
            return Err(Error::InvalidConfig(format!("loss weights must be non-negative, got {self:?}")));
        }
        Ok(())
    }
}

/// `total = a1·comm + a2·sense`, each term the batch mean of the squared
/// error norm.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub comm: f64,
    pub sense: f64,
    pub total: f64,
}

/// Per-feature affine normalization applied before the first layer.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureNorm<F: Scalar> {
    pub mean: Array1<F>,
    pub scale: Array1<F>,
}

impl<F: Scalar> FeatureNorm<F> {
    pub fn identity(width: usize) -> Self {
        Self {
            mean: Array1::zeros(width),
            scale: Array1::ones(width),
        }
    }

    /// Column means and inverse standard deviations of `x` (unit scale for
    /// constant columns).
    pub fn fit(x: &Array2<F>) -> Self {
        let mean = x.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(x.ncols()));
        let var = (x - &mean).mapv(|d| d * d).mean_axis(Axis(0)).unwrap_or_else(|| Array1::ones(x.ncols()));
        let tiny = F::from_f64(1e-12).unwrap();
        let scale = var.mapv(|v| if v > tiny { F::one() / v.sqrt() } else { F::one() });
        Self { mean, scale }
    }

    pub fn apply(&self, x: &Array2<F>) -> Array2<F> {
        (x - &self.mean) * &self.scale
    }
}

/// Layer sizes and activations of a multi-task network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchSpec {
    pub input: usize,
    pub shared: Vec<usize>,
    pub comm_hidden: Vec<usize>,
    /// Zero disables the communication branch.
    pub comm_out: usize,
    pub comm_activation: Activation,
    pub sense_hidden: Vec<usize>,
    /// Zero disables the sensing branch.
    pub sense_out: usize,
    pub sense_activation: Activation,
    pub batchnorm: bool,
}

/// Shared trunk feeding a communication and a sensing branch.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpModel<F: Scalar> {
    pub norm: FeatureNorm<F>,
    pub shared: Vec<DenseLayer<F>>,
    pub comm: Vec<DenseLayer<F>>,
    pub sense: Vec<DenseLayer<F>>,
    pub weights: LossWeights,
    pub adam: Option<AdamState<F>>,
}

/// Activations recorded by [`MlpModel::forward`].
#[derive(Clone, Debug)]
pub struct ForwardPass<F: Scalar> {
    pub comm: Array2<F>,
    pub sense: Array2<F>,
    shared_caches: Vec<LayerCache<F>>,
    comm_caches: Vec<LayerCache<F>>,
    sense_caches: Vec<LayerCache<F>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelGrads<F: Scalar> {
    pub shared: Vec<LayerGrads<F>>,
    pub comm: Vec<LayerGrads<F>>,
    pub sense: Vec<LayerGrads<F>>,
}

impl<F: Scalar> ModelGrads<F> {
    pub fn slices(&self) -> Vec<&[F]> {
        self.shared
            .iter()
            .chain(&self.comm)
            .chain(&self.sense)
            .flat_map(|g| g.slices())
            .collect()
    }
}

impl<F: Scalar> MlpModel<F> {
    pub fn build(spec: &ArchSpec, weights: LossWeights, rng: &mut RngStream) -> Result<Self> {
        weights.validate()?;
        if spec.input == 0 || spec.shared.contains(&0) || spec.comm_hidden.contains(&0) || spec.sense_hidden.contains(&0) {
            return Err(Error::InvalidConfig(format!("zero-width layer in {spec:?}")));
        }
        if spec.comm_out == 0 && spec.sense_out == 0 {
            return Err(Error::InvalidConfig("network has no outputs".into()));
        }
        let mut shared = Vec::new();
        let mut width = spec.input;
        for &h in &spec.shared {
            shared.push(DenseLayer::init(width, h, Activation::Relu, spec.batchnorm, rng));
            width = h;
        }
        let branch = |hidden: &[usize], out: usize, act: Activation, rng: &mut RngStream| {
            if out == 0 {
                return Vec::new();
            }
            let mut layers = Vec::new();
            let mut w = width;
            for &h in hidden {
                layers.push(DenseLayer::init(w, h, Activation::Relu, spec.batchnorm, rng));
                w = h;
            }
            layers.push(DenseLayer::init(w, out, act, false, rng));
            layers
        };
        let comm = branch(&spec.comm_hidden, spec.comm_out, spec.comm_activation, rng);
        let sense = branch(&spec.sense_hidden, spec.sense_out, spec.sense_activation, rng);
        Ok(Self {
            norm: FeatureNorm::identity(spec.input),
            shared,
            comm,
            sense,
            weights,
            adam: None,
        })
    }

    pub fn input_width(&self) -> usize {
        self.norm.mean.len()
    }

    pub fn comm_width(&self) -> usize {
        self.comm.last().map_or(0, DenseLayer::outputs)
    }

    pub fn sense_width(&self) -> usize {
        self.sense.last().map_or(0, DenseLayer::outputs)
    }

    pub fn layers(&self) -> impl Iterator<Item = &DenseLayer<F>> {
        self.shared.iter().chain(&self.comm).chain(&self.sense)
    }

    pub fn layers_mut(&mut self) -> impl Iterator<Item = &mut DenseLayer<F>> {
        self.shared.iter_mut().chain(self.comm.iter_mut()).chain(self.sense.iter_mut())
    }

    pub fn param_count(&self) -> usize {
        self.layers().map(DenseLayer::param_count).sum()
    }

    pub fn forward(&self, x: &Array2<F>, mode: Mode) -> Result<ForwardPass<F>> {
        if x.ncols() != self.input_width() {
            return Err(Error::LengthMismatch {
                expected: self.input_width(),
                got: x.ncols(),
            });
        }
        let run = |layers: &[DenseLayer<F>], mut h: Array2<F>| -> Result<(Array2<F>, Vec<LayerCache<F>>)> {
            let mut caches = Vec::with_capacity(layers.len());
            for l in layers {
                let (y, c) = l.forward(&h, mode)?;
                caches.push(c);
                h = y;
            }
            Ok((h, caches))
        };
        let (trunk, shared_caches) = run(&self.shared, self.norm.apply(x))?;
        let batch = x.nrows();
        let (comm, comm_caches) = if self.comm.is_empty() {
            (Array2::zeros((batch, 0)), Vec::new())
        } else {
            run(&self.comm, trunk.clone())?
        };
        let (sense, sense_caches) = if self.sense.is_empty() {
            (Array2::zeros((batch, 0)), Vec::new())
        } else {
            run(&self.sense, trunk)?
        };
        Ok(ForwardPass {
            comm,
            sense,
            shared_caches,
            comm_caches,
            sense_caches,
        })
    }

    /// Inference-mode outputs.
    pub fn predict(&self, x: &Array2<F>) -> Result<(Array2<F>, Array2<F>)> {
        let f = self.forward(x, Mode::Inference)?;
        Ok((f.comm, f.sense))
    }

    /// Loss of a recorded pass and its gradient w.r.t. every parameter.
    pub fn backward(
        &self,
        pass: &ForwardPass<F>,
        comm_true: &Array2<F>,
        sense_true: &Array2<F>,
    ) -> Result<(LossParts, ModelGrads<F>)> {
        let loss = multitask_loss(&pass.comm, comm_true, &pass.sense, sense_true, self.weights)?;
        let batch = F::from_usize(pass.comm.nrows().max(1)).unwrap();
        let two = F::from_f64(2.0).unwrap();
        let back = |layers: &[DenseLayer<F>], caches: &[LayerCache<F>], mut g: Array2<F>| {
            let mut grads = Vec::with_capacity(layers.len());
            for (l, c) in layers.iter().zip(caches).rev() {
                let (gi, gp) = l.backward(c, &g);
                grads.push(gp);
                g = gi;
            }
            grads.reverse();
            (g, grads)
        };
        let trunk_width = self.shared.last().map_or(self.input_width(), DenseLayer::outputs);
        let mut d_trunk = Array2::<F>::zeros((pass.comm.nrows(), trunk_width));
        let mut comm = Vec::new();
        if !self.comm.is_empty() {
            let a1 = F::from_f64(self.weights.a1).unwrap();
            let g = (&pass.comm - comm_true) * (two * a1 / batch);
            let (d, gr) = back(&self.comm, &pass.comm_caches, g);
            d_trunk.zip_mut_with(&d, |a, &b| *a = *a + b);
            comm = gr;
        }
        let mut sense = Vec::new();
        if !self.sense.is_empty() {
            let a2 = F::from_f64(self.weights.a2).unwrap();
            let g = (&pass.sense - sense_true) * (two * a2 / batch);
            let (d, gr) = back(&self.sense, &pass.sense_caches, g);
            d_trunk.zip_mut_with(&d, |a, &b| *a = *a + b);
            sense = gr;
        }
        let (_, shared) = back(&self.shared, &pass.shared_caches, d_trunk);
        Ok((loss, ModelGrads { shared, comm, sense }))
    }

    /// Fold the batch statistics of a training pass into every batch-norm
    /// layer.
    pub fn update_running_stats(&mut self, pass: &ForwardPass<F>) {
        let caches = pass.shared_caches.iter().chain(&pass.comm_caches).chain(&pass.sense_caches);
        for (l, c) in self.layers_mut().zip(caches) {
            l.update_running_stats(c);
        }
    }

    /// Loss in the given mode without gradients.
    pub fn loss(&self, x: &Array2<F>, comm_true: &Array2<F>, sense_true: &Array2<F>, mode: Mode) -> Result<LossParts> {
        let f = self.forward(x, mode)?;
        multitask_loss(&f.comm, comm_true, &f.sense, sense_true, self.weights)
    }

    pub fn cast<G: Scalar>(&self) -> MlpModel<G> {
        let c = |a: &Array1<F>| a.mapv(|v| G::from_f64(v.to_f64().unwrap()).unwrap());
        MlpModel {
            norm: FeatureNorm {
                mean: c(&self.norm.mean),
                scale: c(&self.norm.scale),
            },
            shared: self.shared.iter().map(DenseLayer::cast).collect(),
            comm: self.comm.iter().map(DenseLayer::cast).collect(),
            sense: self.sense.iter().map(DenseLayer::cast).collect(),
            weights: self.weights,
            adam: None,
        }
    }
}

/// `a1·mean‖Δcomm‖² + a2·mean‖Δsense‖²` over the batch rows.
pub fn multitask_loss<F: Scalar>(
    comm_pred: &Array2<F>,
    comm_true: &Array2<F>,
    sense_pred: &Array2<F>,
    sense_true: &Array2<F>,
    weights: LossWeights,
) -> Result<LossParts> {
    for (p, t) in [(comm_pred, comm_true), (sense_pred, sense_true)] {
        if p.dim() != t.dim() {
            return Err(Error::Shape(format!("prediction {:?} vs label {:?}", p.dim(), t.dim())));
        }
    }
    let batch = comm_pred.nrows().max(sense_pred.nrows()).max(1) as f64;
    let sq = |p: &Array2<F>, t: &Array2<F>| {
        p.iter()
            .zip(t)
            .map(|(a, b)| {
                let d = (*a - *b).to_f64().unwrap();
                d * d
            })
            .sum::<f64>()
            / batch
    };
    let comm = sq(comm_pred, comm_true);
    let sense = sq(sense_pred, sense_true);
    Ok(LossParts {
        comm,
        sense,
        total: weights.a1 * comm + weights.a2 * sense,
    })
}

/// Adam hyper-parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moments of every parameter tensor plus the step count.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<F: Scalar> {
    pub step: u64,
    pub m: Vec<Vec<F>>,
    pub v: Vec<Vec<F>>,
}

/// One bias-corrected Adam update of `param` at step `t` (1-based).
pub fn adam_update<F: Scalar>(param: &mut [F], grad: &[F], m: &mut [F], v: &mut [F], t: u64, cfg: &AdamConfig) {
    let b1 = F::from_f64(cfg.beta1).unwrap();
    let b2 = F::from_f64(cfg.beta2).unwrap();
    let one = F::one();
    let lr = F::from_f64(cfg.lr).unwrap();
    let eps = F::from_f64(cfg.eps).unwrap();
    let c1 = F::from_f64(1.0 - cfg.beta1.powi(t as i32)).unwrap();
    let c2 = F::from_f64(1.0 - cfg.beta2.powi(t as i32)).unwrap();
    for (((p, &g), m), v) in param.iter_mut().zip(grad).zip(m.iter_mut()).zip(v.iter_mut()) {
        *m = b1 * *m + (one - b1) * g;
        *v = b2 * *v + (one - b2) * g * g;
        let mhat = *m / c1;
        let vhat = *v / c2;
        *p = *p - lr * mhat / (vhat.sqrt() + eps);
    }
}

impl<F: Scalar> MlpModel<F> {
    pub fn adam_step(&mut self, grads: &ModelGrads<F>, cfg: &AdamConfig) -> Result<()> {
        if !(cfg.lr > 0.0 && cfg.lr.is_finite()) {
            return Err(Error::NonPositiveLearningRate(cfg.lr));
        }
        let g = grads.slices();
        let mut state = self.adam.take().unwrap_or_else(|| AdamState {
            step: 0,
            m: g.iter().map(|s| vec![F::zero(); s.len()]).collect(),
            v: g.iter().map(|s| vec![F::zero(); s.len()]).collect(),
        });
        state.step += 1;
        let t = state.step;
        let mut params: Vec<&mut [F]> = self.layers_mut().flat_map(|l| l.params_mut()).collect();
        if params.len() != g.len() {
            return Err(Error::Shape(format!("{} gradient tensors for {} parameters", g.len(), params.len())));
        }
        for (i, p) in params.iter_mut().enumerate() {
            if p.len() != g[i].len() {
                return Err(Error::LengthMismatch {
                    expected: p.len(),
                    got: g[i].len(),
                });
            }
            adam_update(p, g[i], &mut state.m[i], &mut state.v[i], t, cfg);
        }
        self.adam = Some(state);
        Ok(())
    }
}
