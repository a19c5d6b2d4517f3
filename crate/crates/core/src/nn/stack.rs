//! Forward and reverse passes through a stack of dense layers.

use crate::error::{Error, Result};
use crate::nn::ops::{affine_forward, relu};
use crate::nn::{Matrix, Scalar};

/// Borrowed view of one dense layer. `relu == false` leaves the layer linear.
#[derive(Debug, Clone, Copy)]
pub struct DenseLayer<'a, T> {
    pub weight: &'a Matrix<T>,
    pub bias: &'a [T],
    pub relu: bool,
}

/// Activations recorded by [`stack_forward`] for one batch.
#[derive(Debug, Clone, Default)]
pub struct StackCache<T> {
    inputs: Vec<Matrix<T>>,
    pre_activations: Vec<Matrix<T>>,
    relu: Vec<bool>,
}

impl<T: Scalar> StackCache<T> {
    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn batch_size(&self) -> usize {
        self.inputs.first().map_or(0, Matrix::rows)
    }

    /// Input to layer `i` (the previous layer's activation).
    pub fn layer_input(&self, i: usize) -> &Matrix<T> {
        &self.inputs[i]
    }

    pub fn pre_activation(&self, i: usize) -> &Matrix<T> {
        &self.pre_activations[i]
    }
}

#[derive(Debug, Clone)]
pub struct StackGrads<T> {
    pub weights: Vec<Matrix<T>>,
    pub biases: Vec<Vec<T>>,
    pub input: Matrix<T>,
}

pub fn stack_forward<T: Scalar>(
    input: Matrix<T>,
    layers: &[DenseLayer<'_, T>],
) -> Result<(Matrix<T>, StackCache<T>)> {
    let mut cache = StackCache {
        inputs: Vec::with_capacity(layers.len()),
        pre_activations: Vec::with_capacity(layers.len()),
        relu: Vec::with_capacity(layers.len()),
    };
    let mut x = input;
    for layer in layers {
        let z = affine_forward(&x, layer.weight, layer.bias)?;
        let a = if layer.relu { z.map(relu) } else { z.clone() };
        cache.inputs.push(x);
        cache.pre_activations.push(z);
        cache.relu.push(layer.relu);
        x = a;
    }
    Ok((x, cache))
}

/// Reverse pass. `d_output` is the gradient of the loss with respect to the
/// stack output. Layers must be the ones used for the cached forward pass.
pub fn stack_backward<T: Scalar>(
    cache: &StackCache<T>,
    layers: &[DenseLayer<'_, T>],
    d_output: &Matrix<T>,
) -> Result<StackGrads<T>> {
    if cache.is_empty() {
        return Err(Error::state("backward called without cached activations"));
    }
    if cache.inputs.len() != layers.len() {
        return Err(Error::state(format!(
            "cache holds {} layers, backward got {}",
            cache.inputs.len(),
            layers.len()
        )));
    }
    let last = cache.pre_activations.last().expect("nonempty cache");
    d_output.ensure_same_shape(last, "stack_backward")?;

    let n = layers.len();
    let mut d_weights = Vec::with_capacity(n);
    let mut d_biases = Vec::with_capacity(n);
    let mut upstream = d_output.clone();
    for i in (0..n).rev() {
        let layer = &layers[i];
        let z = &cache.pre_activations[i];
        if z.cols() != layer.weight.cols() || cache.inputs[i].cols() != layer.weight.rows() {
            return Err(Error::state(format!("layer {i} does not match cached activations")));
        }
        let mut dz = upstream;
        if cache.relu[i] {
            for (d, &zv) in dz.as_mut_slice().iter_mut().zip(z.as_slice()) {
                if zv <= T::zero() {
                    *d = T::zero();
                }
            }
        }
        d_weights.push(cache.inputs[i].t_matmul(&dz)?);
        d_biases.push(dz.col_sums());
        upstream = dz.matmul_t(layer.weight)?;
    }
    d_weights.reverse();
    d_biases.reverse();
    Ok(StackGrads {
        weights: d_weights,
        biases: d_biases,
        input: upstream,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_layer_mse_closed_form() {
        // L = (y_hat - y)^2, y_hat = x·w + b  =>  dL/dw = 2 (y_hat - y) x
        let x = Matrix::from_rows(&[vec![0.5f64, -1.5, 2.0]]).unwrap();
        let w = Matrix::from_rows(&[vec![0.1], vec![0.2], vec![-0.3]]).unwrap();
        let b = [0.05];
        let y = 0.7;
        let layers = [DenseLayer { weight: &w, bias: &b, relu: false }];
        let (out, cache) = stack_forward(x.clone(), &layers).unwrap();
        let r = out[(0, 0)] - y;
        let d_out = Matrix::filled(1, 1, 2.0 * r);
        let g = stack_backward(&cache, &layers, &d_out).unwrap();
        for k in 0..3 {
            assert!((g.weights[0][(k, 0)] - 2.0 * r * x[(0, k)]).abs() < 1e-15);
        }
        assert!((g.biases[0][0] - 2.0 * r).abs() < 1e-15);
    }

    #[test]
    fn dead_relu_blocks_gradient() {
        let x = Matrix::from_rows(&[vec![1.0f64, 1.0]]).unwrap();
        // unit 0 pre-activation = -2 (dead), unit 1 = 3
        let w1 = Matrix::from_rows(&[vec![-1.0, 1.0], vec![-1.0, 2.0]]).unwrap();
        let b1 = [0.0, 0.0];
        let w2 = Matrix::from_rows(&[vec![4.0], vec![5.0]]).unwrap();
        let b2 = [0.0];
        let layers = [
            DenseLayer { weight: &w1, bias: &b1, relu: true },
            DenseLayer { weight: &w2, bias: &b2, relu: false },
        ];
        let (_, cache) = stack_forward(x, &layers).unwrap();
        let g = stack_backward(&cache, &layers, &Matrix::filled(1, 1, 1.0)).unwrap();
        assert_eq!(g.weights[0][(0, 0)], 0.0);
        assert_eq!(g.weights[0][(1, 0)], 0.0);
        assert_eq!(g.biases[0][0], 0.0);
        assert_eq!(g.biases[0][1], 5.0);
        // the dead unit's outgoing weight sees a zero activation
        assert_eq!(g.weights[1][(0, 0)], 0.0);
    }

    #[test]
    fn missing_cache_is_state_error() {
        let w = Matrix::<f64>::zeros(2, 1);
        let layers = [DenseLayer { weight: &w, bias: &[0.0], relu: false }];
        let err = stack_backward(&StackCache::default(), &layers, &Matrix::zeros(1, 1)).unwrap_err();
        assert!(matches!(err, Error::State(_)));
    }
}
