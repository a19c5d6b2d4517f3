use crate::error::{Error, Result};
use crate::nn::{Matrix, Scalar};

/// `input · weights + bias`, bias broadcast over rows. No activation.
pub fn affine_forward<T: Scalar>(
    input: &Matrix<T>,
    weights: &Matrix<T>,
    bias: &[T],
) -> Result<Matrix<T>> {
    if input.cols() != weights.rows() {
        return Err(Error::Shape {
            op: "affine_forward",
            left: input.shape(),
            right: weights.shape(),
        });
    }
    if bias.len() != weights.cols() {
        return Err(Error::Shape {
            op: "affine_forward(bias)",
            left: weights.shape(),
            right: (bias.len(), 1),
        });
    }
    let mut out = input.matmul(weights)?;
    for r in 0..out.rows() {
        for (o, &b) in out.row_mut(r).iter_mut().zip(bias) {
            *o = *o + b;
        }
    }
    Ok(out)
}

#[inline]
pub fn relu<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x
    } else {
        T::zero()
    }
}

/// Logistic function, evaluated without overflow for any finite input.
#[inline]
pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Binary cross-entropy of `sigmoid(logit)` against `label`, computed from the
/// logit: `softplus(z) - y z`.
#[inline]
pub fn bce_with_logit<T: Scalar>(logit: T, label: T) -> T {
    softplus(logit) - label * logit
}

/// Binary cross-entropy on a probability. Probabilities are clamped away
/// from 0 and 1 by machine epsilon.
pub fn bce<T: Scalar>(prob: T, label: T) -> T {
    let eps = T::epsilon();
    let p = prob.max(eps).min(T::one() - eps);
    -(label * p.ln() + (T::one() - label) * (T::one() - p).ln())
}
