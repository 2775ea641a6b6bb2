//! Feedforward network built from a list of [`LayerSpec`]s.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layer::{BatchNorm, Dense, Dropout, Layer, LayerSpec};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Stream reserved for dropout masks; dense layer `i` is initialized from stream `i`.
const DROPOUT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug, Clone)]
pub struct Mlp<T> {
    pub(crate) layers: Vec<Layer<T>>,
    pub(crate) specs: Vec<LayerSpec>,
    pub(crate) input_dim: usize,
    pub(crate) output_dim: usize,
    pub(crate) mode: Mode,
    pub(crate) seed: u64,
    rng: ChaCha8Rng,
    cached: bool,
}

/// Gradient of one layer's trainable parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerGrad<T> {
    None,
    Dense { weights: Matrix<T>, bias: Vec<T> },
    BatchNorm { gamma: Vec<T>, beta: Vec<T> },
}

/// Parameter gradients for every layer, plus the gradient with respect to the input batch.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub layers: Vec<LayerGrad<T>>,
    pub input: Matrix<T>,
}

impl<T: Scalar> Gradients<T> {
    /// Flattened in the same order as [`Mlp::parameters`].
    pub fn flatten(&self) -> Vec<T> {
        let mut out = Vec::new();
        for g in &self.layers {
            match g {
                LayerGrad::None => {}
                LayerGrad::Dense { weights, bias } => {
                    out.extend_from_slice(weights.as_slice());
                    out.extend_from_slice(bias);
                }
                LayerGrad::BatchNorm { gamma, beta } => {
                    out.extend_from_slice(gamma);
                    out.extend_from_slice(beta);
                }
            }
        }
        out
    }
}

impl<T: Scalar> Mlp<T> {
    /// Builds a network with He-uniform dense weights drawn from `seed`.
    pub fn new(input_dim: usize, specs: &[LayerSpec], seed: u64) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::invalid("network input width must be at least 1"));
        }
        let mut layers = Vec::with_capacity(specs.len());
        let mut width = input_dim;
        for (i, spec) in specs.iter().enumerate() {
            spec.validate()?;
            let layer = match *spec {
                LayerSpec::Dense { units } => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(i as u64);
                    Layer::Dense(Dense::init(width, units, &mut rng))
                }
                LayerSpec::Relu => Layer::Relu { input: None },
                LayerSpec::Dropout { rate } => Layer::Dropout(Dropout { rate, mask: None }),
                LayerSpec::BatchNorm => Layer::BatchNorm(BatchNorm::new(width)),
            };
            layers.push(layer);
            width = spec.output_width(width);
        }
        Ok(Self {
            layers,
            specs: specs.to_vec(),
            input_dim,
            output_dim: width,
            mode: Mode::Train,
            seed,
            rng: dropout_rng(seed),
            cached: false,
        })
    }

    pub(crate) fn from_parts(
        layers: Vec<Layer<T>>,
        specs: Vec<LayerSpec>,
        input_dim: usize,
        output_dim: usize,
        mode: Mode,
        seed: u64,
    ) -> Self {
        Self {
            layers,
            specs,
            input_dim,
            output_dim,
            mode,
            seed,
            rng: dropout_rng(seed),
            cached: false,
        }
    }

    #[inline]
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    #[inline]
    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    #[inline]
    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn architecture(&self) -> &[LayerSpec] {
        &self.specs
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
        if mode == Mode::Eval {
            self.clear_cache();
        }
    }

    /// Restarts the dropout mask stream.
    pub fn reseed_dropout(&mut self, seed: u64) {
        self.rng = dropout_rng(seed);
    }

    fn clear_cache(&mut self) {
        for l in &mut self.layers {
            l.clear_cache();
        }
        self.cached = false;
    }

    fn check_batch(&self, batch: &Matrix<T>) -> Result<()> {
        if batch.cols() != self.input_dim {
            return Err(Error::shape(format!(
                "batch has {} columns, network expects {}",
                batch.cols(),
                self.input_dim
            )));
        }
        if batch.rows() == 0 {
            return Err(Error::invalid("batch has no rows"));
        }
        batch.ensure_finite("input batch")
    }

    /// Logits for `batch`. In train mode this draws dropout masks, uses batch
    /// statistics, and caches what [`Mlp::backward`] needs.
    pub fn forward(&mut self, batch: &Matrix<T>) -> Result<Matrix<T>> {
        self.check_batch(batch)?;
        match self.mode {
            Mode::Eval => Ok(self.eval_forward(batch)),
            Mode::Train => {
                let mut x = batch.clone();
                for l in &mut self.layers {
                    x = l.train_forward(x, &mut self.rng);
                }
                self.cached = true;
                x.ensure_finite("logits")?;
                Ok(x)
            }
        }
    }

    /// Inference-mode logits regardless of the current mode. Never mutates the network.
    pub fn infer(&self, batch: &Matrix<T>) -> Result<Matrix<T>> {
        self.check_batch(batch)?;
        let y = self.eval_forward(batch);
        y.ensure_finite("logits")?;
        Ok(y)
    }

    fn eval_forward(&self, batch: &Matrix<T>) -> Matrix<T> {
        let mut x = batch.clone();
        for l in &self.layers {
            x = l.eval_forward(&x);
        }
        x
    }

    /// Backpropagates `upstream` (d loss / d logits) through the cached train-mode
    /// forward pass. The cache is consumed.
    pub fn backward(&mut self, upstream: &Matrix<T>) -> Result<Gradients<T>> {
        if !self.cached {
            return Err(Error::Usage(
                "backward requires a preceding train-mode forward pass".to_owned(),
            ));
        }
        let mut grad = upstream.clone();
        let mut grads = Vec::with_capacity(self.layers.len());
        for l in self.layers.iter_mut().rev() {
            let (g, lg) = backward_layer(l, grad, upstream.rows())?;
            grad = g;
            grads.push(lg);
        }
        grads.reverse();
        self.cached = false;
        Ok(Gradients {
            layers: grads,
            input: grad,
        })
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| match l {
                Layer::Dense(d) => d.weights.as_slice().len() + d.bias.len(),
                Layer::BatchNorm(b) => b.gamma.len() * 2,
                _ => 0,
            })
            .sum()
    }

    /// All trainable parameters: dense weights then bias, batch-norm gamma then beta,
    /// layer by layer.
    pub fn parameters(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for l in &self.layers {
            match l {
                Layer::Dense(d) => {
                    out.extend_from_slice(d.weights.as_slice());
                    out.extend_from_slice(&d.bias);
                }
                Layer::BatchNorm(b) => {
                    out.extend_from_slice(&b.gamma);
                    out.extend_from_slice(&b.beta);
                }
                _ => {}
            }
        }
        out
    }

    pub fn set_parameters(&mut self, values: &[T]) -> Result<()> {
        if values.len() != self.parameter_count() {
            return Err(Error::shape(format!(
                "expected {} parameters, got {}",
                self.parameter_count(),
                values.len()
            )));
        }
        let mut it = values.iter().copied();
        self.for_each_parameter(|p| *p = it.next().expect("counted"));
        Ok(())
    }

    pub(crate) fn for_each_parameter(&mut self, mut f: impl FnMut(&mut T)) {
        for l in &mut self.layers {
            match l {
                Layer::Dense(d) => {
                    d.weights.as_mut_slice().iter_mut().for_each(&mut f);
                    d.bias.iter_mut().for_each(&mut f);
                }
                Layer::BatchNorm(b) => {
                    b.gamma.iter_mut().for_each(&mut f);
                    b.beta.iter_mut().for_each(&mut f);
                }
                _ => {}
            }
        }
    }

    /// Checks that `grads` has one entry per layer with matching parameter shapes.
    pub fn check_gradients(&self, grads: &Gradients<T>) -> Result<()> {
        if grads.layers.len() != self.layers.len() {
            return Err(Error::shape(format!(
                "gradients cover {} layers, network has {}",
                grads.layers.len(),
                self.layers.len()
            )));
        }
        for (i, (l, g)) in self.layers.iter().zip(&grads.layers).enumerate() {
            let ok = match (l, g) {
                (Layer::Dense(d), LayerGrad::Dense { weights, bias }) => {
                    weights.shape() == d.weights.shape() && bias.len() == d.bias.len()
                }
                (Layer::BatchNorm(b), LayerGrad::BatchNorm { gamma, beta }) => {
                    gamma.len() == b.gamma.len() && beta.len() == b.beta.len()
                }
                (Layer::Relu { .. } | Layer::Dropout(_), LayerGrad::None) => true,
                _ => false,
            };
            if !ok {
                return Err(Error::shape(format!("gradient for layer {i} does not match")));
            }
        }
        Ok(())
    }

    /// Batch-norm running statistics, layer by layer, as `(mean, var)` pairs.
    pub fn running_statistics(&self) -> Vec<(Vec<T>, Vec<T>)> {
        self.layers
            .iter()
            .filter_map(|l| match l {
                Layer::BatchNorm(b) => Some((b.running_mean.clone(), b.running_var.clone())),
                _ => None,
            })
            .collect()
    }

    /// Overwrites one dense layer's weights (`in x out`) and bias. Counts dense layers only.
    pub fn set_dense(&mut self, dense_index: usize, weights: Matrix<T>, bias: Vec<T>) -> Result<()> {
        let d = self
            .layers
            .iter_mut()
            .filter_map(|l| match l {
                Layer::Dense(d) => Some(d),
                _ => None,
            })
            .nth(dense_index)
            .ok_or_else(|| Error::invalid(format!("no dense layer at index {dense_index}")))?;
        if weights.shape() != d.weights.shape() || bias.len() != d.bias.len() {
            return Err(Error::shape(format!(
                "dense layer {dense_index} is {:?}, got {:?} and bias {}",
                d.weights.shape(),
                weights.shape(),
                bias.len()
            )));
        }
        d.weights = weights;
        d.bias = bias;
        Ok(())
    }
}

fn dropout_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(DROPOUT_STREAM);
    rng
}

fn missing_cache() -> Error {
    Error::Usage("layer has no cached forward state".to_owned())
}

fn backward_layer<T: Scalar>(
    layer: &mut Layer<T>,
    grad: Matrix<T>,
    batch: usize,
) -> Result<(Matrix<T>, LayerGrad<T>)> {
    match layer {
        Layer::Dense(d) => {
            let x = d.input.take().ok_or_else(missing_cache)?;
            if grad.shape() != (x.rows(), d.weights.cols()) {
                return Err(Error::shape(format!(
                    "upstream gradient is {:?}, layer output is {:?}",
                    grad.shape(),
                    (x.rows(), d.weights.cols())
                )));
            }
            let weights = x.t_matmul(&grad)?;
            let bias = grad.column_sums();
            let dx = grad.matmul_t(&d.weights)?;
            Ok((dx, LayerGrad::Dense { weights, bias }))
        }
        Layer::Relu { input } => {
            let x = input.take().ok_or_else(missing_cache)?;
            check_same(&grad, &x)?;
            let mut dx = grad;
            for (g, &v) in dx.as_mut_slice().iter_mut().zip(x.as_slice()) {
                if v <= T::zero() {
                    *g = T::zero();
                }
            }
            Ok((dx, LayerGrad::None))
        }
        Layer::Dropout(d) => {
            let mask = d.mask.take().ok_or_else(missing_cache)?;
            check_same(&grad, &mask)?;
            let mut dx = grad;
            for (g, &m) in dx.as_mut_slice().iter_mut().zip(mask.as_slice()) {
                *g *= m;
            }
            Ok((dx, LayerGrad::None))
        }
        Layer::BatchNorm(b) => {
            let cache = b.cache.take().ok_or_else(missing_cache)?;
            check_same(&grad, &cache.normalized)?;
            let n = T::of(batch as f64);
            let width = grad.cols();
            let mut dgamma = vec![T::zero(); width];
            let mut dbeta = vec![T::zero(); width];
            for r in 0..grad.rows() {
                for j in 0..width {
                    let g = grad[(r, j)];
                    dgamma[j] += g * cache.normalized[(r, j)];
                    dbeta[j] += g;
                }
            }
            // dx = gamma * inv_std / n * (n * dy - sum(dy) - xhat * sum(dy * xhat))
            let mut dx = grad;
            for r in 0..dx.rows() {
                for j in 0..width {
                    let xhat = cache.normalized[(r, j)];
                    let dy = dx[(r, j)];
                    dx[(r, j)] = b.gamma[j] * cache.inv_std[j] / n
                        * (n * dy - dbeta[j] - xhat * dgamma[j]);
                }
            }
            Ok((
                dx,
                LayerGrad::BatchNorm {
                    gamma: dgamma,
                    beta: dbeta,
                },
            ))
        }
    }
}

fn check_same<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::shape(format!(
            "upstream gradient is {:?}, cached activation is {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}
