//! Central finite differences against the analytic backward pass.

use super::mlp::Mlp;
use crate::error::Result;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// `|a - n| / max(|a| + |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(floor)
}

/// Analytic and numeric gradients of `loss(logits)` with respect to every
/// parameter of `model`, in [`Mlp::parameters`] order.
///
/// `loss` returns the scalar loss and its gradient with respect to the logits.
/// The dropout stream is reset to `dropout_seed` before every forward pass so
/// each evaluation sees the same masks. Train-mode batch statistics make the
/// whole batch part of the function being differentiated.
pub fn compare_gradients<T, F>(
    model: &Mlp<T>,
    batch: &Matrix<T>,
    dropout_seed: u64,
    step: f64,
    loss: F,
) -> Result<(Vec<f64>, Vec<f64>)>
where
    T: Scalar,
    F: Fn(&Matrix<T>) -> Result<(T, Matrix<T>)>,
{
    let mut net = model.clone();
    net.set_mode(super::Mode::Train);
    net.reseed_dropout(dropout_seed);
    let logits = net.forward(batch)?;
    let (_, upstream) = loss(&logits)?;
    let analytic: Vec<f64> = net.backward(&upstream)?.flatten().iter().map(|g| g.as_f64()).collect();

    let base = net.parameters();
    let mut eval = |params: &[T]| -> Result<f64> {
        net.set_parameters(params)?;
        net.reseed_dropout(dropout_seed);
        let z = net.forward(batch)?;
        Ok(loss(&z)?.0.as_f64())
    };
    let mut numeric = Vec::with_capacity(base.len());
    let mut p = base.clone();
    for i in 0..base.len() {
        p[i] = base[i] + T::of(step);
        let up = eval(&p)?;
        p[i] = base[i] - T::of(step);
        let down = eval(&p)?;
        p[i] = base[i];
        numeric.push((up - down) / (2.0 * step));
    }
    Ok((analytic, numeric))
}
