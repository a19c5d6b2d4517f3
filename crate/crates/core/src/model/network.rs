use crate::error::{Error, Result};
use crate::masking::TaskMask;
use crate::model::config::{ModelConfig, SharingMode};
use crate::model::embed::{embed, feature_cross, feature_cross_backward};
use crate::model::params::ModelParams;
use crate::model::sample::Sample;
use crate::nn::{sigmoid, stack_backward, stack_forward, DenseLayer, Matrix, RngSeed, Scalar, StackCache};
use crate::task::Task;

/// A network together with its frozen rewind snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<T> {
    config: ModelConfig,
    pub params: ModelParams<T>,
    init_snapshot: Option<ModelParams<T>>,
}

/// Activations of one forward pass, kept for the reverse pass.
#[derive(Debug, Clone)]
pub struct ForwardPass<'m, T> {
    pub task: Task,
    pub logits: Vec<T>,
    mask: Option<&'m TaskMask>,
    feature_ids: Vec<Vec<usize>>,
    field_embeddings: Vec<Vec<Vec<T>>>,
    effective_weights: Vec<Matrix<T>>,
    trunk: StackCache<T>,
    tower: Option<StackCache<T>>,
}

impl<T: Scalar> ForwardPass<'_, T> {
    pub fn batch_size(&self) -> usize {
        self.logits.len()
    }

    /// Output probabilities, kept strictly inside `(0, 1)`.
    pub fn predictions(&self) -> Vec<T> {
        self.logits.iter().map(|&z| probability(z)).collect()
    }
}

/// `sigmoid(z)` clamped to `[ε, 1 − ε]` so a prediction is never exactly 0 or 1.
pub fn probability<T: Scalar>(logit: T) -> T {
    let eps = T::epsilon();
    sigmoid(logit).max(eps).min(T::one() - eps)
}

impl<T: Scalar> Model<T> {
    pub fn new(config: ModelConfig, seed: RngSeed) -> Result<Self> {
        let params = ModelParams::init(&config, seed)?;
        Ok(Model {
            config,
            params,
            init_snapshot: None,
        })
    }

    pub fn from_parts(
        config: ModelConfig,
        params: ModelParams<T>,
        init_snapshot: Option<ModelParams<T>>,
    ) -> Result<Self> {
        config.validate()?;
        params.check_config(&config)?;
        if let Some(s) = &init_snapshot {
            s.check_config(&config)?;
        }
        Ok(Model {
            config,
            params,
            init_snapshot,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn mode(&self) -> SharingMode {
        self.config.sharing_mode
    }

    pub fn init_snapshot(&self) -> Option<&ModelParams<T>> {
        self.init_snapshot.as_ref()
    }

    /// Deep-copies the live parameters into the rewind snapshot. The
    /// snapshot can only be taken once.
    pub fn freeze_snapshot(&mut self) -> Result<()> {
        if self.init_snapshot.is_some() {
            return Err(Error::state("init snapshot is already frozen"));
        }
        self.init_snapshot = Some(self.params.clone());
        Ok(())
    }

    /// Restores the live parameters from the snapshot.
    pub fn rewind(&mut self) -> Result<()> {
        let snap = self
            .init_snapshot
            .as_ref()
            .ok_or_else(|| Error::state("rewind requested before the snapshot was frozen"))?;
        self.params.clone_from(snap);
        Ok(())
    }

    /// Predictions in `(0, 1)` for `task`.
    pub fn forward(&self, batch: &[&Sample], mask: Option<&TaskMask>, task: Task) -> Result<Vec<T>> {
        Ok(self.forward_train(batch, mask, task)?.predictions())
    }

    pub fn predict_samples(&self, samples: &[Sample], mask: Option<&TaskMask>, task: Task) -> Result<Vec<T>> {
        let refs: Vec<&Sample> = samples.iter().collect();
        self.forward(&refs, mask, task)
    }

    /// Forward pass that records what [`Model::backward`] needs. Masks apply
    /// to the MLP weights only; embeddings are always fully shared.
    pub fn forward_train<'m>(
        &self,
        batch: &[&Sample],
        mask: Option<&'m TaskMask>,
        task: Task,
    ) -> Result<ForwardPass<'m, T>> {
        if let Some(m) = mask {
            if !self.mode().uses_masks() {
                return Err(Error::invalid(format!(
                    "masks are not accepted in {} mode",
                    self.mode()
                )));
            }
            m.check_against(&self.params.weights)?;
        }

        let width = self.config.input_width();
        let mut input = Matrix::zeros(batch.len(), width);
        let mut field_embeddings = Vec::with_capacity(batch.len());
        let mut feature_ids = Vec::with_capacity(batch.len());
        for (r, sample) in batch.iter().enumerate() {
            let embs = embed(&sample.feature_ids, &self.params.embeddings)?;
            let x = feature_cross(&embs, self.config.cross_kind);
            input.row_mut(r).copy_from_slice(&x);
            field_embeddings.push(embs);
            feature_ids.push(sample.feature_ids.clone());
        }

        let effective_weights: Vec<Matrix<T>> = match mask {
            Some(m) => self
                .params
                .weights
                .iter()
                .zip(m.layers())
                .map(|(w, l)| l.apply(w))
                .collect::<Result<_>>()?,
            None => self.params.weights.clone(),
        };

        let head = [self.head_bias(task)?];
        let trunk_layers = self.trunk_layers(&effective_weights, &head);
        let (trunk_out, trunk) = stack_forward(input, &trunk_layers)?;

        let (out, tower) = if self.mode() == SharingMode::LayerShare {
            let tower_params = self.params.tower(task).ok_or_else(|| Error::state("missing tower"))?;
            let layers = tower_layers(tower_params);
            let (o, c) = stack_forward(trunk_out, &layers)?;
            (o, Some(c))
        } else {
            (trunk_out, None)
        };

        Ok(ForwardPass {
            task,
            logits: out.into_vec(),
            mask,
            feature_ids,
            field_embeddings,
            effective_weights,
            trunk,
            tower,
        })
    }

    /// Gradients of a loss with respect to every block, given the loss
    /// gradient with respect to each logit. Weight gradients are multiplied
    /// by the pass's mask.
    pub fn backward(&self, pass: &ForwardPass<'_, T>, d_logits: &[T]) -> Result<ModelParams<T>> {
        if pass.trunk.is_empty() && !self.params.weights.is_empty() {
            return Err(Error::state("backward called without cached activations"));
        }
        if d_logits.len() != pass.batch_size() {
            return Err(Error::Shape {
                op: "backward(d_logits)",
                left: (pass.batch_size(), 1),
                right: (d_logits.len(), 1),
            });
        }
        let mut grads = self.params.zeros_like();
        let mut upstream = Matrix::from_vec(d_logits.len(), 1, d_logits.to_vec())?;

        if let Some(tower_cache) = &pass.tower {
            let tower_params = self.params.tower(pass.task).ok_or_else(|| Error::state("missing tower"))?;
            let layers = tower_layers(tower_params);
            let g = stack_backward(tower_cache, &layers, &upstream)?;
            let tg = &mut grads.towers[pass.task.index()];
            tg.weights = g.weights;
            tg.biases = g.biases;
            upstream = g.input;
        }

        let d_input = if self.params.weights.is_empty() {
            upstream
        } else {
            let head = [self.head_bias(pass.task)?];
            let layers = self.trunk_layers(&pass.effective_weights, &head);
            let g = stack_backward(&pass.trunk, &layers, &upstream)?;
            let hidden = grads.biases.len();
            for (i, (dw, db)) in g.weights.into_iter().zip(g.biases).enumerate() {
                grads.weights[i] = match pass.mask {
                    Some(m) => m.layer(i).apply(&dw)?,
                    None => dw,
                };
                if i < hidden {
                    grads.biases[i] = db;
                } else {
                    grads.head_bias[pass.task.index()] = db[0];
                }
            }
            g.input
        };

        for (r, embs) in pass.field_embeddings.iter().enumerate() {
            let d_fields = feature_cross_backward(embs, self.config.cross_kind, d_input.row(r));
            for (f, d) in d_fields.iter().enumerate() {
                let row = grads.embeddings[f].row_mut(pass.feature_ids[r][f]);
                for (g, &v) in row.iter_mut().zip(d) {
                    *g = *g + v;
                }
            }
        }
        Ok(grads)
    }

    fn head_bias(&self, task: Task) -> Result<T> {
        if self.mode() == SharingMode::LayerShare {
            return Ok(T::zero());
        }
        self.params
            .head_bias
            .get(task.index())
            .copied()
            .ok_or_else(|| Error::state("missing head bias"))
    }

    fn trunk_layers<'a>(&'a self, weights: &'a [Matrix<T>], head: &'a [T]) -> Vec<DenseLayer<'a, T>> {
        let layer_share = self.mode() == SharingMode::LayerShare;
        let n = weights.len();
        weights
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let last = i + 1 == n;
                if layer_share || !last {
                    DenseLayer { weight: w, bias: &self.params.biases[i], relu: true }
                } else {
                    DenseLayer { weight: w, bias: head, relu: false }
                }
            })
            .collect()
    }

    /// The task model `params ⊙ mask` as a standalone network (no snapshot).
    pub fn masked_copy(&self, mask: &TaskMask) -> Result<Model<T>> {
        let params = crate::masking::apply_mask(&self.params, mask)?;
        Ok(Model {
            config: self.config.clone(),
            params,
            init_snapshot: None,
        })
    }
}

fn tower_layers<T: Scalar>(tower: &crate::model::params::Tower<T>) -> Vec<DenseLayer<'_, T>> {
    let n = tower.weights.len();
    tower
        .weights
        .iter()
        .zip(&tower.biases)
        .enumerate()
        .map(|(j, (w, b))| DenseLayer { weight: w, bias: b, relu: j + 1 < n })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::masking::MaskLayer;

    fn samples(cards: &[usize], n: usize, task: Task) -> Vec<Sample> {
        (0..n)
            .map(|i| {
                let ids = cards.iter().enumerate().map(|(f, &c)| (i * 7 + f * 3) % c).collect();
                Sample::new(i as u64, task, (i % 2) as f64, ids)
            })
            .collect()
    }

    fn model(mode: SharingMode) -> Model<f64> {
        let cfg = ModelConfig::desk(vec![5, 4, 3], 4, mode);
        Model::new(cfg, RngSeed(11)).unwrap()
    }

    #[test]
    fn all_ones_mask_is_bit_identical() {
        let m = model(SharingMode::ConnectionShare);
        let data = samples(&[5, 4, 3], 9, Task::Ctr);
        let ones = TaskMask::all_ones(m.config(), Task::Ctr);
        let a = m.predict_samples(&data, None, Task::Ctr).unwrap();
        let b = m.predict_samples(&data, Some(&ones), Task::Ctr).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert!(a.iter().all(|&p| p > 0.0 && p < 1.0));
    }

    #[test]
    fn zero_final_layer_gives_half() {
        let m = model(SharingMode::ConnectionShare);
        let mut mask = TaskMask::all_ones(m.config(), Task::Cvr);
        let last = mask.layers().len() - 1;
        let (r, c) = mask.layer(last).shape();
        mask.layers_mut()[last] = MaskLayer::zeros(r, c);
        let data = samples(&[5, 4, 3], 6, Task::Cvr);
        let p = m.predict_samples(&data, Some(&mask), Task::Cvr).unwrap();
        assert!(p.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn masks_rejected_outside_mask_modes() {
        for mode in [SharingMode::SingleTask, SharingMode::LayerShare] {
            let m = model(mode);
            let ones = TaskMask::all_ones(m.config(), Task::Ctr);
            let data = samples(&[5, 4, 3], 2, Task::Ctr);
            let err = m.predict_samples(&data, Some(&ones), Task::Ctr).unwrap_err();
            assert!(matches!(err, Error::InvalidArgument(_)));
        }
    }

    #[test]
    fn mask_shape_mismatch() {
        let m = model(SharingMode::NeuronShare);
        let other = ModelConfig::desk(vec![5, 4], 4, SharingMode::NeuronShare);
        let bad = TaskMask::all_ones(&other, Task::Ctr);
        let data = samples(&[5, 4, 3], 2, Task::Ctr);
        assert!(matches!(
            m.predict_samples(&data, Some(&bad), Task::Ctr),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn layer_share_towers_are_isolated() {
        let mut m = model(SharingMode::LayerShare);
        let data = samples(&[5, 4, 3], 8, Task::Ctr);
        let before = m.predict_samples(&data, None, Task::Ctr).unwrap();
        let cvr_before = m.predict_samples(&data, None, Task::Cvr).unwrap();
        for w in &mut m.params.towers[Task::Cvr.index()].weights {
            w.as_mut_slice().iter_mut().for_each(|v| *v += 0.37);
        }
        assert_eq!(before, m.predict_samples(&data, None, Task::Ctr).unwrap());
        assert_ne!(cvr_before, m.predict_samples(&data, None, Task::Cvr).unwrap());
    }

    #[test]
    fn equal_features_equal_outputs() {
        let m = model(SharingMode::SingleTask);
        let s = Sample::new(1, Task::Ctr, 1.0, vec![2, 1, 0]);
        let t = Sample::new(2, Task::Ctr, 0.0, vec![2, 1, 0]);
        let p = m.forward(&[&s, &t], None, Task::Ctr).unwrap();
        assert_eq!(p[0], p[1]);
    }

    #[test]
    fn snapshot_freeze_and_rewind() {
        let mut m = model(SharingMode::ConnectionShare);
        assert!(m.rewind().is_err());
        m.freeze_snapshot().unwrap();
        assert!(m.freeze_snapshot().is_err());
        let snap = m.params.clone();
        m.params.weights[0].as_mut_slice()[0] += 1.0;
        m.rewind().unwrap();
        assert!(m.params.bit_identical(&snap));
    }

    #[test]
    fn backward_rejects_wrong_upstream_length() {
        let m = model(SharingMode::SingleTask);
        let data = samples(&[5, 4, 3], 3, Task::Ctr);
        let refs: Vec<&Sample> = data.iter().collect();
        let pass = m.forward_train(&refs, None, Task::Ctr).unwrap();
        assert!(m.backward(&pass, &[1.0, 2.0]).is_err());
        assert!(m.backward(&pass, &[1.0, 2.0, 3.0]).is_ok());
    }
}
