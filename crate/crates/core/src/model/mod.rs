//! The ranking network: embeddings, feature cross, MLP trunk and per-task
//! heads, in all four sharing configurations.

mod checkpoint;
mod config;
mod embed;
mod network;
mod params;
mod sample;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
};
pub use config::{cross_width, CrossKind, ModelConfig, SharingMode};
pub use embed::{embed, feature_cross, feature_cross_backward, field_pairs};
pub use network::{probability, ForwardPass, Model};
pub use params::{BlockId, ModelParams, Tower};
pub use sample::Sample;
