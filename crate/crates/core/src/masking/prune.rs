//! Magnitude pruning: the nearest-rank quantile threshold, connection
//! pruning and the whole-unit variant.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::masking::mask::TaskMask;
use crate::model::ModelParams;
use crate::nn::Scalar;

/// 1-based nearest rank `ceil(q · n)`, clamped to `[1, n]`. Products within
/// 1e-9 above an integer count as that integer, so decimal fractions such as
/// `0.7 · 10` land on 7.
pub fn nearest_rank(q: f64, n: usize) -> usize {
    let x = q * n as f64;
    let k = (x - 1e-9).ceil();
    (k.max(1.0) as usize).min(n)
}

fn check_fraction(q: f64) -> Result<()> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::invalid(format!("pruning fraction must lie in (0, 1), got {q}")));
    }
    Ok(())
}

/// The `k`-th smallest value, `k = ceil(q · n)`.
pub fn quantile_threshold<T: Scalar>(values: &[T], q: f64) -> Result<T> {
    check_fraction(q)?;
    if values.is_empty() {
        return Err(Error::invalid("quantile of an empty sequence"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("quantile input contains non-finite values"));
    }
    let k = nearest_rank(q, values.len());
    let mut scratch = values.to_vec();
    let (_, kth, _) =
        scratch.select_nth_unstable_by(k - 1, |a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    Ok(*kth)
}

/// Next-round connection mask. Surviving weights are pooled across all
/// layers; those with `|w|` strictly below the `q`-quantile of surviving
/// magnitudes are dropped. Connections already pruned stay pruned.
pub fn prune_connections<T: Scalar>(params: &ModelParams<T>, mask: &TaskMask, q: f64) -> Result<TaskMask> {
    check_fraction(q)?;
    mask.check_against(&params.weights)?;
    let surviving: Vec<T> = params
        .weights
        .iter()
        .zip(mask.layers())
        .flat_map(|(w, m)| {
            w.as_slice()
                .iter()
                .zip(m.bits())
                .filter(|(_, &b)| b)
                .map(|(v, _)| v.abs())
        })
        .collect();

    let mut next = mask.clone();
    next.pruning_round = mask.pruning_round + 1;
    if surviving.is_empty() {
        return Ok(next);
    }
    let x = quantile_threshold(&surviving, q)?;
    for (w, m) in params.weights.iter().zip(next.layers_mut()) {
        for (v, bit) in w.as_slice().iter().zip(m.bits_mut()) {
            if *bit && v.abs() < x {
                *bit = false;
            }
        }
    }
    Ok(next)
}

/// L2 norm of each hidden unit's surviving incoming weights, for every
/// hidden layer (all but the last weight matrix). `None` marks units that
/// are already pruned.
pub fn unit_importances<T: Scalar>(params: &ModelParams<T>, mask: &TaskMask) -> Result<Vec<Vec<Option<T>>>> {
    mask.check_against(&params.weights)?;
    let hidden = params.weights.len().saturating_sub(1);
    Ok((0..hidden)
        .map(|i| {
            let w = &params.weights[i];
            let m = mask.layer(i);
            let fed = mask.unit_fed(i);
            (0..w.cols())
                .map(|c| {
                    fed[c].then(|| {
                        let mut acc = T::zero();
                        for r in 0..w.rows() {
                            if m.get(r, c) {
                                acc = acc + w[(r, c)] * w[(r, c)];
                            }
                        }
                        acc.sqrt()
                    })
                })
                .collect()
        })
        .collect())
}

/// Next-round mask for the neuron-level variant. A hidden unit whose
/// importance falls strictly below the `q`-quantile of live units'
/// importances (pooled over hidden layers) loses its whole incoming column
/// and outgoing row. Output units are never removed.
pub fn prune_neurons<T: Scalar>(params: &ModelParams<T>, mask: &TaskMask, q: f64) -> Result<TaskMask> {
    check_fraction(q)?;
    let importances = unit_importances(params, mask)?;
    let pooled: Vec<T> = importances.iter().flatten().filter_map(|v| *v).collect();

    let mut next = mask.clone();
    next.pruning_round = mask.pruning_round + 1;
    if pooled.is_empty() {
        return Ok(next);
    }
    let x = quantile_threshold(&pooled, q)?;
    for (i, layer) in importances.iter().enumerate() {
        for (unit, imp) in layer.iter().enumerate() {
            if matches!(imp, Some(v) if *v < x) {
                remove_unit(&mut next, i, unit);
            }
        }
    }
    Ok(next)
}

/// Clears column `unit` of layer `i` and row `unit` of layer `i + 1`.
pub fn remove_unit(mask: &mut TaskMask, i: usize, unit: usize) {
    let layers = mask.layers_mut();
    let rows = layers[i].rows();
    for r in 0..rows {
        layers[i].set(r, unit, false);
    }
    if let Some(next) = layers.get_mut(i + 1) {
        for c in 0..next.cols() {
            next.set(unit, c, false);
        }
    }
}

/// Live hidden units (those with at least one incoming connection) over all
/// hidden layers.
pub fn live_hidden_units(mask: &TaskMask) -> usize {
    let hidden = mask.layers().len().saturating_sub(1);
    (0..hidden).map(|i| mask.unit_fed(i).iter().filter(|&&b| b).count()).sum()
}

pub fn total_hidden_units(mask: &TaskMask) -> usize {
    let hidden = mask.layers().len().saturating_sub(1);
    mask.layers()[..hidden].iter().map(|l| l.cols()).sum()
}
