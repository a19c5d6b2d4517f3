//! Losses, the gated optimizer and the staged training pipeline.

mod config;
mod loss;
mod optimizer;
mod pipeline;
mod progress;

pub use crate::data::Batch;
pub use config::TrainConfig;
pub use loss::{joint_loss, loss_and_grads, loss_from_logits, task_loss};
pub use optimizer::ModelOptimizer;
pub use pipeline::{
    evaluate, evaluate_task, generate_masks, init_model, joint_train, select_best, train, train_baseline,
    validation_objective, warmup,
    MaskSearch, Trained, TrainedArtifacts,
};
pub use progress::{quiet, Progress, ProgressRecord};
