use crate::data::Batch;
use crate::error::{Error, Result};
use crate::masking::TaskMask;
use crate::model::{Model, ModelParams};
use crate::nn::{bce_with_logit, sigmoid, Scalar};
use crate::task::Task;

use super::TrainConfig;

/// Batch-mean loss of `task` and its derivative with respect to each logit.
///
/// CTR uses binary cross-entropy on the logit; CVR uses the squared error
/// of `sigmoid(logit)` against the continuous label.
pub fn loss_from_logits<T: Scalar>(task: Task, logits: &[T], labels: &[f64]) -> Result<(T, Vec<T>)> {
    if logits.is_empty() {
        return Err(Error::invalid("loss of an empty batch"));
    }
    if logits.len() != labels.len() {
        return Err(Error::Shape {
            op: "loss",
            left: (logits.len(), 1),
            right: (labels.len(), 1),
        });
    }
    let n = T::of(logits.len() as f64);
    let two = T::of(2.0);
    let mut total = T::zero();
    let mut grads = Vec::with_capacity(logits.len());
    for (&z, &y) in logits.iter().zip(labels) {
        let y = T::of(y);
        match task {
            Task::Ctr => {
                total = total + bce_with_logit(z, y);
                grads.push((sigmoid(z) - y) / n);
            }
            Task::Cvr => {
                let p = sigmoid(z);
                let r = p - y;
                total = total + r * r;
                grads.push(two * r * p * (T::one() - p) / n);
            }
        }
    }
    Ok((total / n, grads))
}

fn labels(batch: &Batch<'_>) -> Vec<f64> {
    batch.samples.iter().map(|s| s.label).collect()
}

fn check_homogeneous(batch: &Batch<'_>) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    if let Some(s) = batch.samples.iter().find(|s| s.task != batch.task) {
        return Err(Error::invalid(format!(
            "batch tagged {} holds a {} sample",
            batch.task, s.task
        )));
    }
    Ok(())
}

/// Mean per-sample loss of the batch's task under `mask`.
pub fn task_loss<T: Scalar>(model: &Model<T>, batch: &Batch<'_>, mask: Option<&TaskMask>) -> Result<T> {
    check_homogeneous(batch)?;
    let pass = model.forward_train(&batch.samples, mask, batch.task)?;
    Ok(loss_from_logits(batch.task, &pass.logits, &labels(batch))?.0)
}

/// `ω_task · task_loss` for the batch's task; the other task's term is
/// absent because the batch holds no samples of it.
pub fn joint_loss<T: Scalar>(
    model: &Model<T>,
    batch: &Batch<'_>,
    mask: Option<&TaskMask>,
    config: &TrainConfig,
) -> Result<T> {
    Ok(T::of(config.omega(batch.task)) * task_loss(model, batch, mask)?)
}

/// `weight · task_loss` and its gradient with respect to every parameter.
pub fn loss_and_grads<T: Scalar>(
    model: &Model<T>,
    batch: &Batch<'_>,
    mask: Option<&TaskMask>,
    weight: f64,
) -> Result<(T, ModelParams<T>)> {
    check_homogeneous(batch)?;
    let pass = model.forward_train(&batch.samples, mask, batch.task)?;
    let (loss, mut d) = loss_from_logits(batch.task, &pass.logits, &labels(batch))?;
    let w = T::of(weight);
    for g in &mut d {
        *g = *g * w;
    }
    let grads = model.backward(&pass, &d)?;
    Ok((w * loss, grads))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logit(p: f64) -> f64 {
        (p / (1.0 - p)).ln()
    }

    #[test]
    fn closed_forms() {
        let (l, _) = loss_from_logits(Task::Ctr, &[0.0f64], &[1.0]).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
        let (l, _) = loss_from_logits(Task::Cvr, &[logit(0.3)], &[0.7]).unwrap();
        assert!((l - 0.16).abs() < 1e-12);
        let z = [logit(0.2), logit(0.9)];
        let (l, g) = loss_from_logits(Task::Cvr, &z, &[0.2, 0.9]).unwrap();
        assert!(l.abs() < 1e-24 && g.iter().all(|v: &f64| v.abs() < 1e-12));
    }

    #[test]
    fn logit_gradients_match_differences() {
        let z = [0.3f64, -1.2, 2.0];
        let y = [1.0, 0.0, 1.0];
        let yc = [0.4, 0.1, 0.95];
        for (task, labels) in [(Task::Ctr, &y), (Task::Cvr, &yc)] {
            let (_, g) = loss_from_logits(task, &z, labels).unwrap();
            for i in 0..3 {
                let h = 1e-6;
                let mut zp = z;
                zp[i] += h;
                let mut zm = z;
                zm[i] -= h;
                let fd = (loss_from_logits(task, &zp, labels).unwrap().0 - loss_from_logits(task, &zm, labels).unwrap().0)
                    / (2.0 * h);
                assert!((fd - g[i]).abs() < 1e-8, "{task} {i}");
            }
        }
    }

    #[test]
    fn empty_batch_rejected() {
        assert!(loss_from_logits::<f64>(Task::Ctr, &[], &[]).is_err());
    }
}
