//! Temperature softmax and categorical cross-entropy.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Lower clamp applied to probabilities before taking logarithms.
pub const LOG_CLAMP: f64 = 1e-12;

/// Row-wise softmax of `logits / temperature`.
///
/// The division happens before the max-subtraction so that
/// `softmax(z, t)` and `softmax(z / t, 1)` follow the same arithmetic.
pub fn softmax<T: Scalar>(logits: &Matrix<T>, temperature: f64) -> Result<Matrix<T>> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::invalid(format!(
            "softmax temperature must be positive and finite, got {temperature}"
        )));
    }
    logits.ensure_finite("logits")?;
    let t = T::of(temperature);
    let mut out = logits.clone();
    for r in 0..out.rows() {
        softmax_row_in_place(out.row_mut(r), t);
    }
    Ok(out)
}

fn softmax_row_in_place<T: Scalar>(row: &mut [T], temperature: T) {
    if temperature != T::one() {
        for v in row.iter_mut() {
            *v /= temperature;
        }
    }
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let mut total = T::zero();
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in row.iter_mut() {
        *v /= total;
    }
}

/// Mean over rows of `-sum_k target_k * ln(p_k)`, with `p_k` clamped to `[1e-12, 1]`.
///
/// Works for one-hot (hard) and distribution-valued (soft) targets alike.
pub fn cross_entropy<T: Scalar>(probabilities: &Matrix<T>, targets: &Matrix<T>) -> Result<T> {
    if probabilities.shape() != targets.shape() {
        return Err(Error::shape(format!(
            "probabilities are {:?} but targets are {:?}",
            probabilities.shape(),
            targets.shape()
        )));
    }
    if probabilities.rows() == 0 {
        return Err(Error::invalid("cross-entropy of an empty batch"));
    }
    let lo = T::of(LOG_CLAMP);
    let mut total = T::zero();
    for (p, q) in probabilities.as_slice().iter().zip(targets.as_slice()) {
        if *q != T::zero() {
            total -= *q * p.max(lo).min(T::one()).ln();
        }
    }
    Ok(total / T::of(probabilities.rows() as f64))
}

/// One-hot rows for class labels.
pub fn one_hot<T: Scalar>(labels: &[usize], classes: usize) -> Result<Matrix<T>> {
    let mut m = Matrix::zeros(labels.len(), classes);
    for (r, &l) in labels.iter().enumerate() {
        if l >= classes {
            return Err(Error::invalid(format!(
                "label {l} at row {r} is outside 0..{classes}"
            )));
        }
        m[(r, l)] = T::one();
    }
    Ok(m)
}

/// Loss and logit-gradient of `cross_entropy(softmax(logits, t), targets)`.
///
/// The gradient is `(softmax(logits, t) - targets) / (t * rows)`, valid whenever
/// each target row sums to one.
pub fn softmax_cross_entropy<T: Scalar>(
    logits: &Matrix<T>,
    targets: &Matrix<T>,
    temperature: f64,
) -> Result<(T, Matrix<T>)> {
    let probs = softmax(logits, temperature)?;
    let loss = cross_entropy(&probs, targets)?;
    let scale = T::one() / (T::of(temperature) * T::of(logits.rows() as f64));
    let mut grad = probs;
    for (g, &q) in grad.as_mut_slice().iter_mut().zip(targets.as_slice()) {
        *g = (*g - q) * scale;
    }
    Ok((loss, grad))
}
