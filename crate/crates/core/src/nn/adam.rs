use crate::error::{Error, Result};
use crate::nn::{Matrix, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam moments for one parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub first_moment: Matrix<T>,
    pub second_moment: Matrix<T>,
    pub step_count: u64,
    pub config: AdamConfig,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(rows: usize, cols: usize, config: AdamConfig) -> Self {
        AdamState {
            first_moment: Matrix::zeros(rows, cols),
            second_moment: Matrix::zeros(rows, cols),
            step_count: 0,
            config,
        }
    }

    pub fn for_params(params: &Matrix<T>, config: AdamConfig) -> Self {
        Self::new(params.rows(), params.cols(), config)
    }

    /// Counts a step in which this block took no part. Moments are left
    /// alone so bias correction stays in sync with the other blocks.
    pub fn skip(&mut self) {
        self.step_count += 1;
    }
}

/// One bias-corrected Adam step over the whole block.
pub fn adam_step<T: Scalar>(
    params: &mut Matrix<T>,
    grads: &Matrix<T>,
    state: &mut AdamState<T>,
    lr: T,
) -> Result<()> {
    adam_step_gated(params, grads, state, lr, None)
}

/// Adam step restricted to entries whose gate is `true`. Gated-off entries
/// keep their parameter value and both moments bit-for-bit; the step count
/// still advances.
pub fn adam_step_gated<T: Scalar>(
    params: &mut Matrix<T>,
    grads: &Matrix<T>,
    state: &mut AdamState<T>,
    lr: T,
    gate: Option<&[bool]>,
) -> Result<()> {
    params.ensure_same_shape(grads, "adam_step")?;
    params.ensure_same_shape(&state.first_moment, "adam_step(first_moment)")?;
    params.ensure_same_shape(&state.second_moment, "adam_step(second_moment)")?;
    if let Some(g) = gate {
        if g.len() != params.len() {
            return Err(Error::Shape {
                op: "adam_step(gate)",
                left: params.shape(),
                right: (g.len(), 1),
            });
        }
    }

    state.step_count += 1;
    adam_update(
        params.as_mut_slice(),
        grads.as_slice(),
        state.first_moment.as_mut_slice(),
        state.second_moment.as_mut_slice(),
        state.step_count,
        &state.config,
        lr,
        gate,
    );
    Ok(())
}

/// Raw Adam update on parallel slices at step `step` (1-based). Entries
/// with a `false` gate are skipped entirely.
#[allow(clippy::too_many_arguments)]
pub fn adam_update<T: Scalar>(
    p: &mut [T],
    g: &[T],
    m: &mut [T],
    v: &mut [T],
    step: u64,
    config: &AdamConfig,
    lr: T,
    gate: Option<&[bool]>,
) {
    let t = step.min(i32::MAX as u64) as i32;
    let b1 = T::of(config.beta1);
    let b2 = T::of(config.beta2);
    let eps = T::of(config.epsilon);
    let one = T::one();
    let corr1 = one - b1.powi(t);
    let corr2 = one - b2.powi(t);
    for i in 0..p.len() {
        if let Some(gate) = gate {
            if !gate[i] {
                continue;
            }
        }
        m[i] = b1 * m[i] + (one - b1) * g[i];
        v[i] = b2 * v[i] + (one - b2) * g[i] * g[i];
        let m_hat = m[i] / corr1;
        let v_hat = v[i] / corr2;
        p[i] = p[i] - lr * m_hat / (v_hat.sqrt() + eps);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent scalar Adam used as the oracle.
    fn scalar_adam(p0: f64, grads: &[f64], lr: f64) -> f64 {
        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
        let (mut m, mut v, mut p) = (0.0, 0.0, p0);
        for (k, g) in grads.iter().enumerate() {
            let t = (k + 1) as f64;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powf(t));
            let vh = v / (1.0 - b2.powf(t));
            p -= lr * mh / (vh.sqrt() + eps);
        }
        p
    }

    #[test]
    fn first_step_magnitude() {
        let mut p = Matrix::filled(1, 1, 0.0f64);
        let g = Matrix::filled(1, 1, 0.5);
        let mut s = AdamState::for_params(&p, AdamConfig::default());
        adam_step(&mut p, &g, &mut s, 0.001).unwrap();
        // m_hat = 0.5, v_hat = 0.25
        let expected = -0.001 * 0.5 / (0.5 + 1e-8);
        assert!((p[(0, 0)] - expected).abs() < 1e-15);
        assert!((p[(0, 0)] + 0.000_999_999_98).abs() < 1e-12);
    }

    #[test]
    fn zero_gradient_is_identity() {
        let mut p = Matrix::from_rows(&[vec![0.3f64, -1.2], vec![5.0, -0.0]]).unwrap();
        let before = p.clone();
        let mut s = AdamState::for_params(&p, AdamConfig::default());
        for _ in 0..5 {
            adam_step(&mut p, &Matrix::zeros(2, 2), &mut s, 0.1).unwrap();
        }
        assert_eq!(p, before);
        assert_eq!(s.step_count, 5);
    }

    #[test]
    fn two_steps_match_scalar_oracle() {
        let mut p = Matrix::filled(1, 3, 0.2f64);
        let g = Matrix::from_rows(&[vec![0.5, -0.1, 2.0]]).unwrap();
        let mut s = AdamState::for_params(&p, AdamConfig::default());
        adam_step(&mut p, &g, &mut s, 0.01).unwrap();
        adam_step(&mut p, &g, &mut s, 0.01).unwrap();
        for (j, &gj) in g.as_slice().iter().enumerate() {
            let want = scalar_adam(0.2, &[gj, gj], 0.01);
            assert!((p[(0, j)] - want).abs() < 1e-15, "{} vs {}", p[(0, j)], want);
        }
    }

    #[test]
    fn gate_freezes_entries_and_moments() {
        let mut p = Matrix::from_rows(&[vec![1.0f64, 2.0]]).unwrap();
        let mut s = AdamState::for_params(&p, AdamConfig::default());
        let g = Matrix::from_rows(&[vec![0.3, 0.3]]).unwrap();
        adam_step(&mut p, &g, &mut s, 0.1).unwrap();
        let frozen = (p[(0, 1)], s.first_moment[(0, 1)], s.second_moment[(0, 1)]);
        adam_step_gated(&mut p, &Matrix::zeros(1, 2), &mut s, 0.1, Some(&[true, false])).unwrap();
        assert_eq!(frozen, (p[(0, 1)], s.first_moment[(0, 1)], s.second_moment[(0, 1)]));
        assert_eq!(s.step_count, 2);
    }

    #[test]
    fn shape_mismatch() {
        let mut p = Matrix::<f64>::zeros(2, 2);
        let mut s = AdamState::for_params(&p, AdamConfig::default());
        assert!(adam_step(&mut p, &Matrix::zeros(2, 3), &mut s, 0.1).is_err());
        let mut s_bad = AdamState::new(1, 4, AdamConfig::default());
        assert!(adam_step(&mut p, &Matrix::zeros(2, 2), &mut s_bad, 0.1).is_err());
    }

    proptest::proptest! {
        #[test]
        fn second_moment_nonnegative(gs in proptest::collection::vec(-10.0f64..10.0, 1..20)) {
            let mut p = Matrix::filled(1, 1, 0.0f64);
            let mut s = AdamState::for_params(&p, AdamConfig::default());
            for (k, g) in gs.iter().enumerate() {
                adam_step(&mut p, &Matrix::filled(1, 1, *g), &mut s, 0.01).unwrap();
                proptest::prop_assert!(s.second_moment[(0, 0)] >= 0.0);
                proptest::prop_assert_eq!(s.step_count, k as u64 + 1);
            }
        }
    }
}
