//! Embedding lookup and the feature-cross layer.

use crate::error::{Error, Result};
use crate::model::config::{cross_width, CrossKind};
use crate::nn::{Matrix, Scalar};

/// Looks up one embedding row per field.
pub fn embed<T: Scalar>(feature_ids: &[usize], tables: &[Matrix<T>]) -> Result<Vec<Vec<T>>> {
    if feature_ids.len() != tables.len() {
        return Err(Error::invalid(format!(
            "sample has {} feature ids, model has {} fields",
            feature_ids.len(),
            tables.len()
        )));
    }
    feature_ids
        .iter()
        .zip(tables)
        .enumerate()
        .map(|(field, (&id, table))| {
            if id >= table.rows() {
                Err(Error::Index {
                    field,
                    id,
                    cardinality: table.rows(),
                })
            } else {
                Ok(table.row(id).to_vec())
            }
        })
        .collect()
}

/// Field pairs `(i, j)`, `i < j`, in the order their cross terms appear.
pub fn field_pairs(fields: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..fields).flat_map(move |i| (i + 1..fields).map(move |j| (i, j)))
}

/// Cross terms followed by the flattened embeddings.
pub fn feature_cross<T: Scalar>(field_embeddings: &[Vec<T>], kind: CrossKind) -> Vec<T> {
    let f = field_embeddings.len();
    let d = field_embeddings.first().map_or(0, Vec::len);
    let mut out = Vec::with_capacity(cross_width(f, d, kind));
    match kind {
        CrossKind::None => {}
        CrossKind::PairwiseDot => {
            for (i, j) in field_pairs(f) {
                let mut acc = T::zero();
                for (&a, &b) in field_embeddings[i].iter().zip(&field_embeddings[j]) {
                    acc = acc + a * b;
                }
                out.push(acc);
            }
        }
        CrossKind::PairwiseProduct => {
            for (i, j) in field_pairs(f) {
                out.extend(
                    field_embeddings[i]
                        .iter()
                        .zip(&field_embeddings[j])
                        .map(|(&a, &b)| a * b),
                );
            }
        }
    }
    for e in field_embeddings {
        out.extend_from_slice(e);
    }
    out
}

/// Gradient of a cross output row with respect to each field embedding.
pub fn feature_cross_backward<T: Scalar>(
    field_embeddings: &[Vec<T>],
    kind: CrossKind,
    d_out: &[T],
) -> Vec<Vec<T>> {
    let f = field_embeddings.len();
    let d = field_embeddings.first().map_or(0, Vec::len);
    let mut grads = vec![vec![T::zero(); d]; f];
    let mut offset = 0;
    match kind {
        CrossKind::None => {}
        CrossKind::PairwiseDot => {
            for (i, j) in field_pairs(f) {
                let g = d_out[offset];
                for k in 0..d {
                    grads[i][k] = grads[i][k] + g * field_embeddings[j][k];
                    grads[j][k] = grads[j][k] + g * field_embeddings[i][k];
                }
                offset += 1;
            }
        }
        CrossKind::PairwiseProduct => {
            for (i, j) in field_pairs(f) {
                for k in 0..d {
                    let g = d_out[offset + k];
                    grads[i][k] = grads[i][k] + g * field_embeddings[j][k];
                    grads[j][k] = grads[j][k] + g * field_embeddings[i][k];
                }
                offset += d;
            }
        }
    }
    for (fi, grad) in grads.iter_mut().enumerate() {
        for k in 0..d {
            grad[k] = grad[k] + d_out[offset + fi * d + k];
        }
    }
    grads
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_row_lookup() {
        let mut t = Matrix::filled(3, 2, 1.0f64);
        t.row_mut(1).fill(0.0);
        assert_eq!(embed(&[1], &[t]).unwrap(), vec![vec![0.0, 0.0]]);
    }

    #[test]
    fn out_of_range_names_field_and_id() {
        let tables = vec![Matrix::<f64>::zeros(3, 2), Matrix::zeros(4, 2)];
        let err = embed(&[0, 4], &tables).unwrap_err();
        assert!(matches!(err, Error::Index { field: 1, id: 4, cardinality: 4 }));
        assert!(err.to_string().contains("field 1"));
    }

    #[test]
    fn single_field_is_flattened_embedding() {
        let e = vec![vec![0.5f64, -2.0, 3.0]];
        for kind in [CrossKind::None, CrossKind::PairwiseDot, CrossKind::PairwiseProduct] {
            assert_eq!(feature_cross(&e, kind), vec![0.5, -2.0, 3.0]);
        }
    }

    #[test]
    fn orthogonal_pair_dot() {
        let e = vec![vec![1.0f64, 0.0], vec![0.0, 1.0]];
        assert_eq!(feature_cross(&e, CrossKind::PairwiseDot), vec![0.0, 1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn product_width() {
        let e = vec![vec![1.0f64; 4]; 3];
        assert_eq!(feature_cross(&e, CrossKind::PairwiseProduct).len(), 24);
    }

    #[test]
    fn cross_backward_matches_finite_differences() {
        let e = vec![vec![0.3f64, -0.7, 1.1], vec![0.9, 0.2, -0.4], vec![-1.3, 0.5, 0.8]];
        for kind in [CrossKind::None, CrossKind::PairwiseDot, CrossKind::PairwiseProduct] {
            let w = cross_width(3, 3, kind);
            let weights: Vec<f64> = (0..w).map(|i| ((i * 7 % 5) as f64 - 2.0) * 0.3).collect();
            let loss = |e: &[Vec<f64>]| -> f64 {
                feature_cross(e, kind).iter().zip(&weights).map(|(a, b)| a * b).sum()
            };
            let g = feature_cross_backward(&e, kind, &weights);
            let h = 1e-6;
            for f in 0..3 {
                for k in 0..3 {
                    let mut ep = e.clone();
                    ep[f][k] += h;
                    let mut em = e.clone();
                    em[f][k] -= h;
                    let fd = (loss(&ep) - loss(&em)) / (2.0 * h);
                    assert!((fd - g[f][k]).abs() < 1e-8, "{kind}: {fd} vs {}", g[f][k]);
                }
            }
        }
    }
}
