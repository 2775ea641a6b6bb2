//! Versioned JSON checkpoints for [`Mlp`].
//!
//! Parameters are stored as `f64` arrays. `serde_json` writes the shortest
//! decimal that parses back to the same bits, so `f64` networks round-trip
//! exactly and `f32` networks round-trip through the widening conversion.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::layer::{BatchNorm, Dense, Dropout, Layer, LayerSpec};
use super::mlp::{Mlp, Mode};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

pub const CHECKPOINT_FORMAT: &str = "routekd-mlp";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub input_dim: usize,
    pub output_dim: usize,
    pub seed: u64,
    pub mode: Mode,
    pub architecture: Vec<LayerSpec>,
    pub layers: Vec<LayerState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerState {
    Dense {
        inputs: usize,
        units: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    },
    BatchNorm {
        gamma: Vec<f64>,
        beta: Vec<f64>,
        running_mean: Vec<f64>,
        running_var: Vec<f64>,
        eps: f64,
        momentum: f64,
    },
    Dropout {
        rate: f64,
    },
    Relu,
}

fn widen<T: Scalar>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.as_f64()).collect()
}

fn narrow<T: Scalar>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&x| T::of(x)).collect()
}

impl<T: Scalar> Mlp<T> {
    pub fn to_checkpoint(&self) -> Checkpoint {
        let layers = self
            .layers
            .iter()
            .map(|l| match l {
                Layer::Dense(d) => LayerState::Dense {
                    inputs: d.weights.rows(),
                    units: d.weights.cols(),
                    weights: widen(d.weights.as_slice()),
                    bias: widen(&d.bias),
                },
                Layer::BatchNorm(b) => LayerState::BatchNorm {
                    gamma: widen(&b.gamma),
                    beta: widen(&b.beta),
                    running_mean: widen(&b.running_mean),
                    running_var: widen(&b.running_var),
                    eps: b.eps.as_f64(),
                    momentum: b.momentum.as_f64(),
                },
                Layer::Dropout(d) => LayerState::Dropout { rate: d.rate },
                Layer::Relu { .. } => LayerState::Relu,
            })
            .collect();
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_owned(),
            version: CHECKPOINT_VERSION,
            input_dim: self.input_dim,
            output_dim: self.output_dim,
            seed: self.seed,
            mode: self.mode,
            architecture: self.specs.clone(),
            layers,
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
            return Err(Error::invalid(format!(
                "unsupported checkpoint {} v{}",
                ck.format, ck.version
            )));
        }
        if ck.architecture.len() != ck.layers.len() {
            return Err(Error::invalid("checkpoint architecture and layers disagree"));
        }
        let mut width = ck.input_dim;
        let mut layers = Vec::with_capacity(ck.layers.len());
        for (i, (spec, state)) in ck.architecture.iter().zip(&ck.layers).enumerate() {
            spec.validate()?;
            let bad = || Error::invalid(format!("checkpoint layer {i} does not match its spec"));
            let layer = match (spec, state) {
                (
                    LayerSpec::Dense { units },
                    LayerState::Dense {
                        inputs,
                        units: u,
                        weights,
                        bias,
                    },
                ) if units == u && *inputs == width && bias.len() == *units => Layer::Dense(Dense {
                    weights: Matrix::from_vec(*inputs, *units, narrow(weights))?,
                    bias: narrow(bias),
                    input: None,
                }),
                (
                    LayerSpec::BatchNorm,
                    LayerState::BatchNorm {
                        gamma,
                        beta,
                        running_mean,
                        running_var,
                        eps,
                        momentum,
                    },
                ) => {
                    if [gamma.len(), beta.len(), running_mean.len(), running_var.len()]
                        .iter()
                        .any(|&l| l != width)
                    {
                        return Err(bad());
                    }
                    Layer::BatchNorm(BatchNorm {
                        gamma: narrow(gamma),
                        beta: narrow(beta),
                        running_mean: narrow(running_mean),
                        running_var: narrow(running_var),
                        eps: T::of(*eps),
                        momentum: T::of(*momentum),
                        cache: None,
                    })
                }
                (LayerSpec::Dropout { rate }, LayerState::Dropout { rate: r }) if rate == r => {
                    Layer::Dropout(Dropout { rate: *rate, mask: None })
                }
                (LayerSpec::Relu, LayerState::Relu) => Layer::Relu { input: None },
                _ => return Err(bad()),
            };
            layers.push(layer);
            width = spec.output_width(width);
        }
        if width != ck.output_dim {
            return Err(Error::invalid("checkpoint output width does not match its layers"));
        }
        let m = Mlp::from_parts(layers, ck.architecture.clone(), ck.input_dim, width, ck.mode, ck.seed);
        if !m.parameters().iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("checkpoint contains non-finite parameters"));
        }
        Ok(m)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_checkpoint())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(s)?;
        Self::from_checkpoint(&ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trained_like() -> Mlp<f64> {
        let specs = [
            LayerSpec::Dense { units: 5 },
            LayerSpec::BatchNorm,
            LayerSpec::Relu,
            LayerSpec::Dropout { rate: 0.25 },
            LayerSpec::Dense { units: 4 },
        ];
        let mut m = Mlp::new(3, &specs, 11).unwrap();
        // move the running statistics off their defaults
        let x = Matrix::from_rows(&[[0.1, 1.0 / 3.0, -2.0], [1e-300, 7.25, 3.0], [2.0, -1.0, 0.5]]).unwrap();
        m.forward(&x).unwrap();
        m.set_mode(Mode::Eval);
        m
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let m = trained_like();
        let back = Mlp::<f64>::from_json(&m.to_json().unwrap()).unwrap();
        let bits = |v: Vec<f64>| v.into_iter().map(f64::to_bits).collect::<Vec<_>>();
        assert_eq!(bits(m.parameters()), bits(back.parameters()));
        assert_eq!(m.running_statistics(), back.running_statistics());
        assert_eq!(m.to_checkpoint(), back.to_checkpoint());
        let x = Matrix::from_rows(&[[0.3, 0.2, 0.1]]).unwrap();
        assert_eq!(m.infer(&x).unwrap(), back.infer(&x).unwrap());
    }

    #[test]
    fn rejects_tampered_checkpoints() {
        let m = trained_like();
        let mut ck = m.to_checkpoint();
        ck.version = 99;
        assert!(Mlp::<f64>::from_checkpoint(&ck).is_err());

        let mut ck = m.to_checkpoint();
        if let LayerState::Dense { bias, .. } = &mut ck.layers[0] {
            bias.pop();
        }
        assert!(Mlp::<f64>::from_checkpoint(&ck).is_err());

        let mut ck = m.to_checkpoint();
        ck.layers.swap(1, 2);
        assert!(Mlp::<f64>::from_checkpoint(&ck).is_err());
    }
}
