//! Multi-task CTR/CVR ranking models with connection-level parameter
//! sharing.
//!
//! A shared base network is warmed up on both tasks, each task then finds
//! its own subnetwork by iterative magnitude pruning with weight rewind, and
//! finally both subnetworks are trained jointly on the shared weights. Each
//! task only updates the connections its mask keeps, so overlapping
//! connections carry shared knowledge and the rest stay task-specific.
//!
//! The numeric core is generic over the scalar type ([`nn::Scalar`], `f32`
//! or `f64`); the aliases below fix it for the common cases.

mod codec;
pub mod data;
pub mod error;
pub mod masking;
pub mod metrics;
pub mod model;
pub mod nn;
mod task;
pub mod training;

pub use error::{Error, Result};
pub use task::Task;

pub type Matrix64 = nn::Matrix<f64>;
pub type Matrix32 = nn::Matrix<f32>;
pub type Model64 = model::Model<f64>;
pub type Model32 = model::Model<f32>;
pub type ModelParams64 = model::ModelParams<f64>;
pub type ModelParams32 = model::ModelParams<f32>;
