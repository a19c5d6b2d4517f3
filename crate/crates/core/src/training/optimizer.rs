use crate::error::{Error, Result};
use crate::masking::TaskMask;
use crate::model::{BlockId, Model, ModelParams, SharingMode};
use crate::nn::{adam_update, AdamConfig, Scalar};
use crate::task::Task;

/// Adam over a whole parameter set with one global step counter.
///
/// Each step is gated by the batch's task: masked-off weights, hidden
/// biases of units outside the task's subnetwork, the other task's head
/// bias and the other task's tower keep their values and moments exactly.
/// Embeddings are always updated.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOptimizer<T> {
    config: AdamConfig,
    first: ModelParams<T>,
    second: ModelParams<T>,
    step: u64,
}

enum Gate {
    All,
    Nothing,
    Bits(Vec<bool>),
}

impl<T: Scalar> ModelOptimizer<T> {
    pub fn new(params: &ModelParams<T>, config: AdamConfig) -> Self {
        ModelOptimizer {
            config,
            first: params.zeros_like(),
            second: params.zeros_like(),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self) -> &ModelParams<T> {
        &self.first
    }

    pub fn second_moment(&self) -> &ModelParams<T> {
        &self.second
    }

    /// [`ModelOptimizer::step`] on a model's live parameters, gated by its mode.
    pub fn step_model(
        &mut self,
        model: &mut Model<T>,
        grads: &ModelParams<T>,
        task: Task,
        mask: Option<&TaskMask>,
        lr: f64,
    ) -> Result<()> {
        let mode = model.mode();
        self.step(&mut model.params, grads, task, mask, mode, lr)
    }

    pub fn step(
        &mut self,
        params: &mut ModelParams<T>,
        grads: &ModelParams<T>,
        task: Task,
        mask: Option<&TaskMask>,
        mode: SharingMode,
        lr: f64,
    ) -> Result<()> {
        if !params.same_shape(grads) || !params.same_shape(&self.first) {
            return Err(Error::invalid("optimizer, parameters and gradients differ in shape"));
        }
        if let Some(m) = mask {
            m.check_against(&params.weights)?;
        }
        self.step += 1;
        let lr = T::of(lr);
        let grads = grads.blocks();
        let firsts = self.first.blocks_mut();
        let seconds = self.second.blocks_mut();
        for (((id, p), (_, g)), ((_, m), (_, v))) in params
            .blocks_mut()
            .into_iter()
            .zip(grads)
            .zip(firsts.into_iter().zip(seconds))
        {
            let gate = gate_for(id, task, mask, mode);
            let bits = match &gate {
                Gate::All => None,
                Gate::Nothing => continue,
                Gate::Bits(b) => Some(b.as_slice()),
            };
            adam_update(p, g, m, v, self.step, &self.config, lr, bits);
        }
        Ok(())
    }
}

fn gate_for(id: BlockId, task: Task, mask: Option<&TaskMask>, mode: SharingMode) -> Gate {
    match id {
        BlockId::Embedding(_) => Gate::All,
        BlockId::Weight(i) => match mask {
            Some(m) => Gate::Bits(m.layer(i).bits().to_vec()),
            None => Gate::All,
        },
        BlockId::Bias(i) => match (mask, mode) {
            (Some(m), _) if mode != SharingMode::LayerShare => Gate::Bits(m.unit_live(i)),
            _ => Gate::All,
        },
        BlockId::HeadBias => Gate::Bits(Task::ALL.iter().map(|&t| t == task).collect()),
        BlockId::TowerWeight(t, _) | BlockId::TowerBias(t, _) => {
            if t == task {
                Gate::All
            } else {
                Gate::Nothing
            }
        }
    }
}
