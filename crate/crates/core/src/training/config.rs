use crate::error::{Error, Result};
use crate::nn::{AdamConfig, RngSeed};
use crate::task::Task;

/// Hyperparameters of every training stage.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub omega_ctr: f64,
    pub omega_cvr: f64,
    /// Fraction of surviving weights (or units) removed per pruning round.
    pub q: f64,
    pub n_pruning: u32,
    pub warmup_epochs: u32,
    /// Epochs trained under each candidate mask before it is scored and pruned.
    pub mask_epochs: u32,
    pub joint_epochs: u32,
    /// Epochs for the single-task and layer-share baselines.
    pub baseline_epochs: u32,
    pub seed: u64,
    /// Keep the parameters of the epoch with the lowest validation
    /// objective instead of the last epoch, in joint and baseline training.
    pub select_epoch: bool,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 3e-3,
            batch_size: 256,
            omega_ctr: 0.7,
            omega_cvr: 0.3,
            q: 0.2,
            n_pruning: 6,
            warmup_epochs: 1,
            mask_epochs: 1,
            joint_epochs: 5,
            baseline_epochs: 6,
            seed: 42,
            select_epoch: true,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn omega(&self, task: Task) -> f64 {
        match task {
            Task::Ctr => self.omega_ctr,
            Task::Cvr => self.omega_cvr,
        }
    }

    pub fn rng_seed(&self) -> RngSeed {
        RngSeed(self.seed)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::invalid(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be at least 1"));
        }
        for (name, w) in [("omega_ctr", self.omega_ctr), ("omega_cvr", self.omega_cvr)] {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and >= 0, got {w}")));
            }
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::invalid(format!("q must lie in (0, 1), got {}", self.q)));
        }
        if self.n_pruning == 0 {
            return Err(Error::invalid("n_pruning must be at least 1"));
        }
        let a = &self.adam;
        if !(0.0..1.0).contains(&a.beta1) || !(0.0..1.0).contains(&a.beta2) || !a.epsilon.is_finite() || a.epsilon <= 0.0 {
            return Err(Error::invalid("adam betas must lie in [0, 1) and epsilon must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_valid_and_checks_fire() {
        TrainConfig::default().validate().unwrap();
        for bad in [
            TrainConfig { q: 1.0, ..Default::default() },
            TrainConfig { n_pruning: 0, ..Default::default() },
            TrainConfig { omega_cvr: -0.1, ..Default::default() },
            TrainConfig { batch_size: 0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }
}
