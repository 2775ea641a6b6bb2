//! Plain and momentum SGD.

use serde::{Deserialize, Serialize};

use super::mlp::{Gradients, Mlp};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub learning_rate: f64,
    #[serde(default)]
    pub momentum: Option<f64>,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            momentum: None,
        }
    }
}

/// Optimizer state. With momentum `mu` the update is
/// `v <- mu * v + g; p <- p - lr * v`, otherwise `p <- p - lr * g`.
#[derive(Debug, Clone)]
pub struct Sgd<T> {
    config: SgdConfig,
    velocity: Vec<T>,
}

impl<T: Scalar> Sgd<T> {
    pub fn new(config: SgdConfig) -> Result<Self> {
        if !(config.learning_rate > 0.0) || !config.learning_rate.is_finite() {
            return Err(Error::invalid(format!(
                "learning rate must be positive, got {}",
                config.learning_rate
            )));
        }
        if let Some(m) = config.momentum {
            if !(0.0..1.0).contains(&m) {
                return Err(Error::invalid(format!("momentum must lie in [0, 1), got {m}")));
            }
        }
        Ok(Self {
            config,
            velocity: Vec::new(),
        })
    }

    pub fn config(&self) -> SgdConfig {
        self.config
    }

    pub fn step(&mut self, model: &mut Mlp<T>, grads: &Gradients<T>) -> Result<()> {
        model.check_gradients(grads)?;
        let g = grads.flatten();
        let lr = T::of(self.config.learning_rate);
        match self.config.momentum {
            None => {
                let mut it = g.iter();
                model.for_each_parameter(|p| *p -= lr * *it.next().expect("checked"));
            }
            Some(mu) => {
                if self.velocity.len() != g.len() {
                    self.velocity = vec![T::zero(); g.len()];
                }
                let mu = T::of(mu);
                for (v, &gi) in self.velocity.iter_mut().zip(&g) {
                    *v = mu * *v + gi;
                }
                let mut it = self.velocity.iter();
                model.for_each_parameter(|p| *p -= lr * *it.next().expect("checked"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::nn::{LayerGrad, LayerSpec};

    fn scalar_model(w: f64) -> Mlp<f64> {
        let mut m = Mlp::new(1, &[LayerSpec::Dense { units: 1 }], 0).unwrap();
        m.set_dense(0, Matrix::from_rows(&[[w]]).unwrap(), vec![0.0]).unwrap();
        m
    }

    fn grad(gw: f64) -> Gradients<f64> {
        Gradients {
            layers: vec![LayerGrad::Dense {
                weights: Matrix::from_rows(&[[gw]]).unwrap(),
                bias: vec![0.0],
            }],
            input: Matrix::zeros(1, 1),
        }
    }

    #[test]
    fn plain_step() {
        let mut m = scalar_model(2.0);
        let mut opt = Sgd::new(SgdConfig { learning_rate: 1.0, momentum: None }).unwrap();
        opt.step(&mut m, &grad(0.5)).unwrap();
        assert_eq!(m.parameters(), vec![1.5, 0.0]);
    }

    #[test]
    fn zero_gradient_leaves_model_unchanged() {
        let mut m = Mlp::<f64>::new(3, &[LayerSpec::Dense { units: 4 }, LayerSpec::BatchNorm], 5).unwrap();
        let before = m.parameters();
        let x = Matrix::filled(2, 3, 1.0);
        m.forward(&x).unwrap();
        let g = m.backward(&Matrix::zeros(2, 4)).unwrap();
        let mut opt = Sgd::new(SgdConfig::default()).unwrap();
        opt.step(&mut m, &g).unwrap();
        assert_eq!(m.parameters(), before);
    }

    #[test]
    fn momentum_follows_the_recurrence() {
        // v1 = g, w1 = w0 - lr g; v2 = 0.9 g + g, w2 = w1 - lr * 1.9 g
        let (w0, lr, g) = (1.0, 0.1, 0.5);
        let mut m = scalar_model(w0);
        let mut opt = Sgd::new(SgdConfig { learning_rate: lr, momentum: Some(0.9) }).unwrap();
        opt.step(&mut m, &grad(g)).unwrap();
        assert!((m.parameters()[0] - 0.95).abs() < 1e-15);
        opt.step(&mut m, &grad(g)).unwrap();
        assert!((m.parameters()[0] - 0.855).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_config_and_shapes() {
        assert!(Sgd::<f64>::new(SgdConfig { learning_rate: 0.0, momentum: None }).is_err());
        assert!(Sgd::<f64>::new(SgdConfig { learning_rate: 0.1, momentum: Some(1.0) }).is_err());
        let mut m = Mlp::<f64>::new(2, &[LayerSpec::Dense { units: 1 }], 0).unwrap();
        let mut opt = Sgd::new(SgdConfig::default()).unwrap();
        assert!(matches!(opt.step(&mut m, &grad(1.0)), Err(Error::Shape(_))));
    }
}
