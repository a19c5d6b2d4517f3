#![allow(dead_code)]

use lotshare_core::data::{generate, Dataset, Split, SyntheticSpec};
use lotshare_core::model::{cross_width, CrossKind, ModelConfig, SharingMode};
use lotshare_core::training::TrainConfig;

pub fn tiny_spec(seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        n_users: 40,
        n_items: 30,
        latent_dim: 3,
        quantized_fields: 2,
        buckets: 4,
        n_impressions: 1500,
        seed,
        ..SyntheticSpec::default()
    }
}

pub struct Splits {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
}

pub fn tiny_data(seed: u64) -> Splits {
    let d = generate(&tiny_spec(seed)).unwrap();
    Splits {
        train: d.split(Split::Train),
        validation: d.split(Split::Validation),
        test: d.split(Split::Test),
    }
}

pub fn tiny_model(mode: SharingMode) -> ModelConfig {
    let cards = tiny_spec(0).field_cardinalities();
    let d = 4;
    let input = cross_width(cards.len(), d, CrossKind::PairwiseDot);
    let (mlp_dims, tower_dims) = match mode {
        SharingMode::LayerShare => (vec![input, 12], vec![12, 6, 1]),
        _ => (vec![input, 12, 6, 1], Vec::new()),
    };
    ModelConfig {
        field_cardinalities: cards,
        embedding_dim: d,
        mlp_dims,
        tower_dims,
        cross_kind: CrossKind::PairwiseDot,
        sharing_mode: mode,
    }
}

pub fn tiny_train_config(seed: u64) -> TrainConfig {
    TrainConfig {
        batch_size: 64,
        n_pruning: 3,
        warmup_epochs: 1,
        joint_epochs: 2,
        baseline_epochs: 2,
        seed,
        ..TrainConfig::default()
    }
}
