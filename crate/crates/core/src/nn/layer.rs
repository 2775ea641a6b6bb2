//! Layer descriptors and the runtime layers they build.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

pub const BATCHNORM_EPS: f64 = 1e-5;
pub const BATCHNORM_MOMENTUM: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Dense { units: usize },
    Dropout { rate: f64 },
    BatchNorm,
    Relu,
}

impl LayerSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LayerSpec::Dense { units: 0 } => {
                Err(Error::invalid("dense layer needs at least one unit"))
            }
            LayerSpec::Dropout { rate } if !(0.0..1.0).contains(&rate) => Err(Error::invalid(
                format!("dropout rate must lie in [0, 1), got {rate}"),
            )),
            _ => Ok(()),
        }
    }

    /// Width of this layer's output given its input width.
    pub fn output_width(&self, input: usize) -> usize {
        match *self {
            LayerSpec::Dense { units } => units,
            _ => input,
        }
    }
}

/// Output width of a stack of layers fed `input` features.
pub fn stack_output_width(input: usize, specs: &[LayerSpec]) -> usize {
    specs.iter().fold(input, |w, s| s.output_width(w))
}

/// A hidden-layer stack written in the compact `10n-0.25DP-30n` notation.
///
/// `<k>n` is a dense layer of `k` ReLU units and `<r>DP` a dropout layer with
/// rate `r`; `BN` inserts batch normalization before the preceding dense
/// layer's activation. The classification head is not part of the notation;
/// [`HiddenStack::with_head`] appends it.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenStack(pub Vec<LayerSpec>);

impl HiddenStack {
    pub fn with_head(&self, classes: usize) -> Vec<LayerSpec> {
        let mut v = self.0.clone();
        v.push(LayerSpec::Dense { units: classes });
        v
    }
}

impl FromStr for HiddenStack {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut specs = Vec::new();
        for token in s.split('-').map(str::trim) {
            if let Some(n) = token.strip_suffix('n') {
                let units: usize = n
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad dense token `{token}`")))?;
                specs.push(LayerSpec::Dense { units });
                specs.push(LayerSpec::Relu);
            } else if let Some(r) = token.strip_suffix("DP") {
                let rate: f64 = r
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad dropout token `{token}`")))?;
                specs.push(LayerSpec::Dropout { rate });
            } else if token == "BN" {
                match specs.last() {
                    Some(LayerSpec::Relu) => {
                        let at = specs.len() - 1;
                        specs.insert(at, LayerSpec::BatchNorm);
                    }
                    _ => return Err(Error::invalid("`BN` must follow a dense token")),
                }
            } else {
                return Err(Error::invalid(format!("unknown layer token `{token}`")));
            }
        }
        for s in &specs {
            s.validate()?;
        }
        Ok(HiddenStack(specs))
    }
}

impl fmt::Display for HiddenStack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        for s in &self.0 {
            match *s {
                LayerSpec::Dense { units } => parts.push(format!("{units}n")),
                LayerSpec::Dropout { rate } => parts.push(format!("{rate}DP")),
                LayerSpec::BatchNorm => parts.push("BN".to_owned()),
                LayerSpec::Relu => {}
            }
        }
        f.write_str(&parts.join("-"))
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Dense<T> {
    /// `in x out`, so that `y = x W + b`.
    pub weights: Matrix<T>,
    pub bias: Vec<T>,
    pub input: Option<Matrix<T>>,
}

impl<T: Scalar> Dense<T> {
    /// He-uniform weights, zero bias.
    pub fn init<R: Rng>(fan_in: usize, units: usize, rng: &mut R) -> Self {
        let limit = (6.0 / fan_in.max(1) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit).expect("finite bounds");
        let data = (0..fan_in * units).map(|_| T::of(dist.sample(rng))).collect();
        Self {
            weights: Matrix::from_vec(fan_in, units, data).expect("sized buffer"),
            bias: vec![T::zero(); units],
            input: None,
        }
    }

    pub fn apply(&self, x: &Matrix<T>) -> Matrix<T> {
        let mut y = x.matmul(&self.weights).expect("chained widths");
        for r in 0..y.rows() {
            for (v, &b) in y.row_mut(r).iter_mut().zip(&self.bias) {
                *v += b;
            }
        }
        y
    }
}

#[derive(Debug, Clone)]
pub(crate) struct BatchNorm<T> {
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
    pub running_mean: Vec<T>,
    pub running_var: Vec<T>,
    pub eps: T,
    pub momentum: T,
    pub cache: Option<BatchNormCache<T>>,
}

#[derive(Debug, Clone)]
pub(crate) struct BatchNormCache<T> {
    pub normalized: Matrix<T>,
    pub inv_std: Vec<T>,
}

impl<T: Scalar> BatchNorm<T> {
    pub fn new(width: usize) -> Self {
        Self {
            gamma: vec![T::one(); width],
            beta: vec![T::zero(); width],
            running_mean: vec![T::zero(); width],
            running_var: vec![T::one(); width],
            eps: T::of(BATCHNORM_EPS),
            momentum: T::of(BATCHNORM_MOMENTUM),
            cache: None,
        }
    }

    /// Normalizes with batch statistics and folds them into the running
    /// averages. Returns `(output, normalized, inv_std)`.
    pub fn train_forward(&mut self, x: &Matrix<T>) -> (Matrix<T>, Matrix<T>, Vec<T>) {
        let n = T::of(x.rows() as f64);
        let mean: Vec<T> = x.column_sums().into_iter().map(|s| s / n).collect();
        let mut var = vec![T::zero(); x.cols()];
        for row in x.iter_rows() {
            for ((v, &xi), &m) in var.iter_mut().zip(row).zip(&mean) {
                let d = xi - m;
                *v += d * d;
            }
        }
        for v in var.iter_mut() {
            *v /= n;
        }
        let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + self.eps).sqrt()).collect();

        let mut normalized = x.clone();
        let mut out = x.clone();
        for r in 0..x.rows() {
            let nr = normalized.row_mut(r);
            for (j, v) in nr.iter_mut().enumerate() {
                *v = (*v - mean[j]) * inv_std[j];
            }
            let or = out.row_mut(r);
            for (j, v) in or.iter_mut().enumerate() {
                *v = self.gamma[j] * normalized[(r, j)] + self.beta[j];
            }
        }

        // running variance tracks the unbiased estimate
        let unbias = if x.rows() > 1 { n / (n - T::one()) } else { T::one() };
        let keep = self.momentum;
        let take = T::one() - keep;
        for j in 0..x.cols() {
            self.running_mean[j] = keep * self.running_mean[j] + take * mean[j];
            self.running_var[j] = keep * self.running_var[j] + take * var[j] * unbias;
        }
        (out, normalized, inv_std)
    }

    pub fn eval_forward(&self, x: &Matrix<T>) -> Matrix<T> {
        let mut out = x.clone();
        for r in 0..out.rows() {
            for (j, v) in out.row_mut(r).iter_mut().enumerate() {
                let inv = T::one() / (self.running_var[j] + self.eps).sqrt();
                *v = self.gamma[j] * (*v - self.running_mean[j]) * inv + self.beta[j];
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Dropout<T> {
    pub rate: f64,
    /// Per-element multiplier: `0` for dropped units, `1 / (1 - rate)` otherwise.
    pub mask: Option<Matrix<T>>,
}

#[derive(Debug, Clone)]
pub(crate) enum Layer<T> {
    Dense(Dense<T>),
    Relu { input: Option<Matrix<T>> },
    Dropout(Dropout<T>),
    BatchNorm(BatchNorm<T>),
}

impl<T: Scalar> Layer<T> {
    pub fn clear_cache(&mut self) {
        match self {
            Layer::Dense(d) => d.input = None,
            Layer::Relu { input } => *input = None,
            Layer::Dropout(d) => d.mask = None,
            Layer::BatchNorm(b) => b.cache = None,
        }
    }

    /// Inference-mode transform: dropout is identity and batch normalization
    /// uses running statistics.
    pub fn eval_forward(&self, x: &Matrix<T>) -> Matrix<T> {
        match self {
            Layer::Dense(d) => d.apply(x),
            Layer::Relu { .. } => relu(x),
            Layer::Dropout(_) => x.clone(),
            Layer::BatchNorm(b) => b.eval_forward(x),
        }
    }

    pub fn train_forward<R: Rng>(&mut self, x: Matrix<T>, rng: &mut R) -> Matrix<T> {
        match self {
            Layer::Dense(d) => {
                let y = d.apply(&x);
                d.input = Some(x);
                y
            }
            Layer::Relu { input } => {
                let y = relu(&x);
                *input = Some(x);
                y
            }
            Layer::Dropout(d) => {
                if d.rate == 0.0 {
                    d.mask = Some(Matrix::filled(x.rows(), x.cols(), T::one()));
                    return x;
                }
                let keep = 1.0 - d.rate;
                let scale = T::of(1.0 / keep);
                let mut mask = Matrix::zeros(x.rows(), x.cols());
                for m in mask.as_mut_slice() {
                    if rng.random::<f64>() < keep {
                        *m = scale;
                    }
                }
                let mut y = x;
                for (v, &m) in y.as_mut_slice().iter_mut().zip(mask.as_slice()) {
                    *v *= m;
                }
                d.mask = Some(mask);
                y
            }
            Layer::BatchNorm(b) => {
                let (y, normalized, inv_std) = b.train_forward(&x);
                b.cache = Some(BatchNormCache {
                    normalized,
                    inv_std,
                });
                y
            }
        }
    }
}

pub(crate) fn relu<T: Scalar>(x: &Matrix<T>) -> Matrix<T> {
    x.map(|v| if v > T::zero() { v } else { T::zero() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_compact_notation() {
        let s: HiddenStack = "10n-0.25DP-30n".parse().unwrap();
        assert_eq!(
            s.0,
            vec![
                LayerSpec::Dense { units: 10 },
                LayerSpec::Relu,
                LayerSpec::Dropout { rate: 0.25 },
                LayerSpec::Dense { units: 30 },
                LayerSpec::Relu,
            ]
        );
        assert_eq!(s.to_string(), "10n-0.25DP-30n");

        let bn: HiddenStack = "10n-20n-BN".parse().unwrap();
        assert_eq!(bn.0[2], LayerSpec::Dense { units: 20 });
        assert_eq!(bn.0[3], LayerSpec::BatchNorm);
        assert_eq!(bn.0[4], LayerSpec::Relu);
        assert_eq!(bn.to_string(), "10n-20n-BN");
    }

    #[test]
    fn rejects_bad_specs() {
        assert!("0n".parse::<HiddenStack>().is_err());
        assert!("10n-1.0DP".parse::<HiddenStack>().is_err());
        assert!("BN-10n".parse::<HiddenStack>().is_err());
        assert!("10x".parse::<HiddenStack>().is_err());
        assert!(LayerSpec::Dropout { rate: -0.1 }.validate().is_err());
    }

    #[test]
    fn widths_chain_through_dense_layers() {
        let s: HiddenStack = "10n-0.25DP-30n".parse().unwrap();
        assert_eq!(stack_output_width(12, &s.with_head(4)), 4);
        assert_eq!(stack_output_width(12, &[LayerSpec::Relu]), 12);
    }
}
