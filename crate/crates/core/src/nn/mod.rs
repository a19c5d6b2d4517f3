//! Dense linear algebra, initialization, activations, reverse-mode passes
//! for dense stacks, and the Adam optimizer.

mod adam;
mod init;
mod matrix;
pub mod ops;
mod scalar;
mod stack;

pub use adam::{adam_step, adam_step_gated, adam_update, AdamConfig, AdamState};
pub use init::{splitmix64, xavier_bound, xavier_init, xavier_init_with, Rng, RngSeed};
pub use matrix::Matrix;
pub use ops::{affine_forward, bce, bce_with_logit, relu, sigmoid, softplus};
pub use scalar::Scalar;
pub use stack::{stack_backward, stack_forward, DenseLayer, StackCache, StackGrads};
