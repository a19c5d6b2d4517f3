use crate::error::{Error, Result};
use crate::nn::Scalar;

/// Mean squared error, summed left to right.
pub fn mse<T: Scalar>(labels: &[T], predictions: &[T]) -> Result<T> {
    if labels.is_empty() {
        return Err(Error::invalid("mse of an empty sequence"));
    }
    if labels.len() != predictions.len() {
        return Err(Error::invalid(format!(
            "mse: {} labels vs {} predictions",
            labels.len(),
            predictions.len()
        )));
    }
    let mut acc = T::zero();
    for (&y, &p) in labels.iter().zip(predictions) {
        let d = p - y;
        acc = acc + d * d;
    }
    Ok(acc / T::of(labels.len() as f64))
}

/// Mean binary cross-entropy on probabilities.
pub fn log_loss<T: Scalar>(labels: &[T], predictions: &[T]) -> Result<T> {
    if labels.is_empty() || labels.len() != predictions.len() {
        return Err(Error::invalid("log_loss needs equal nonempty inputs"));
    }
    let mut acc = T::zero();
    for (&y, &p) in labels.iter().zip(predictions) {
        acc = acc + crate::nn::bce(p, y);
    }
    Ok(acc / T::of(labels.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(mse(&[0.2, 0.4, 0.9], &[0.2, 0.4, 0.9]).unwrap(), 0.0);
        assert_eq!(mse(&[0.0, 1.0], &[0.5, 0.5]).unwrap(), 0.25);
        assert!(mse::<f64>(&[], &[]).is_err());
        assert!(mse(&[0.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn matches_naive_loop() {
        use rand::Rng as _;
        let mut rng = crate::nn::RngSeed(8).rng();
        let y: Vec<f64> = (0..97).map(|_| rng.gen()).collect();
        let p: Vec<f64> = (0..97).map(|_| rng.gen()).collect();
        let mut s = 0.0;
        for i in 0..97 {
            s += (p[i] - y[i]) * (p[i] - y[i]);
        }
        assert_eq!(mse(&y, &p).unwrap(), s / 97.0);
    }
}
