use crate::error::{Error, Result};
use crate::model::config::{ModelConfig, SharingMode};
use crate::nn::{splitmix64, xavier_init, Matrix, RngSeed, Scalar};
use crate::task::Task;

const SEED_EMBEDDING: u64 = 1;
const SEED_TRUNK: u64 = 2;
const SEED_TOWER: u64 = 3;

/// One task tower of the layer-share model.
#[derive(Debug, Clone, PartialEq)]
pub struct Tower<T> {
    pub weights: Vec<Matrix<T>>,
    pub biases: Vec<Vec<T>>,
}

/// Every trainable block of a network.
///
/// In the shared modes `weights` holds the full MLP (the prunable part),
/// `biases` the hidden-layer biases, and `head_bias` one output bias per
/// task. In `layer_share` mode `weights`/`biases` are the shared trunk
/// (all hidden), `head_bias` is empty and each task owns a [`Tower`].
///
/// The same type carries gradients and optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub embeddings: Vec<Matrix<T>>,
    pub weights: Vec<Matrix<T>>,
    pub biases: Vec<Vec<T>>,
    pub head_bias: Vec<T>,
    pub towers: Vec<Tower<T>>,
}

/// Identifies a parameter block, in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockId {
    Embedding(usize),
    Weight(usize),
    Bias(usize),
    HeadBias,
    TowerWeight(Task, usize),
    TowerBias(Task, usize),
}

impl<T: Scalar> ModelParams<T> {
    /// Xavier-uniform weights and embeddings, zero biases.
    pub fn init(config: &ModelConfig, seed: RngSeed) -> Result<Self> {
        config.validate()?;
        let d = config.embedding_dim;
        let embeddings = config
            .field_cardinalities
            .iter()
            .enumerate()
            .map(|(f, &card)| xavier_init(card, d, seed.derive2(SEED_EMBEDDING, f as u64)))
            .collect::<Result<Vec<_>>>()?;
        let weights = config
            .trunk_shapes()
            .into_iter()
            .enumerate()
            .map(|(i, (r, c))| xavier_init(r, c, seed.derive2(SEED_TRUNK, i as u64)))
            .collect::<Result<Vec<_>>>()?;
        let layer_share = config.sharing_mode == SharingMode::LayerShare;
        let hidden = if layer_share { weights.len() } else { weights.len() - 1 };
        let biases = config.mlp_dims[1..=hidden].iter().map(|&w| vec![T::zero(); w]).collect();
        let (head_bias, towers) = if layer_share {
            let towers = Task::ALL
                .iter()
                .map(|&task| {
                    let tseed = seed.derive2(SEED_TOWER, task.index() as u64);
                    let weights = config
                        .tower_shapes()
                        .into_iter()
                        .enumerate()
                        .map(|(j, (r, c))| xavier_init(r, c, tseed.derive(j as u64)))
                        .collect::<Result<Vec<_>>>()?;
                    let biases = config.tower_dims[1..].iter().map(|&w| vec![T::zero(); w]).collect();
                    Ok(Tower { weights, biases })
                })
                .collect::<Result<Vec<_>>>()?;
            (Vec::new(), towers)
        } else {
            (vec![T::zero(); Task::ALL.len()], Vec::new())
        };
        Ok(ModelParams {
            embeddings,
            weights,
            biases,
            head_bias,
            towers,
        })
    }

    pub fn zeros_like(&self) -> Self {
        ModelParams {
            embeddings: self.embeddings.iter().map(|m| Matrix::zeros(m.rows(), m.cols())).collect(),
            weights: self.weights.iter().map(|m| Matrix::zeros(m.rows(), m.cols())).collect(),
            biases: self.biases.iter().map(|b| vec![T::zero(); b.len()]).collect(),
            head_bias: vec![T::zero(); self.head_bias.len()],
            towers: self
                .towers
                .iter()
                .map(|t| Tower {
                    weights: t.weights.iter().map(|m| Matrix::zeros(m.rows(), m.cols())).collect(),
                    biases: t.biases.iter().map(|b| vec![T::zero(); b.len()]).collect(),
                })
                .collect(),
        }
    }

    pub fn tower(&self, task: Task) -> Option<&Tower<T>> {
        self.towers.get(task.index())
    }

    /// All blocks in declaration order.
    pub fn blocks(&self) -> Vec<(BlockId, &[T])> {
        let mut out: Vec<(BlockId, &[T])> = Vec::new();
        for (f, m) in self.embeddings.iter().enumerate() {
            out.push((BlockId::Embedding(f), m.as_slice()));
        }
        for (i, m) in self.weights.iter().enumerate() {
            out.push((BlockId::Weight(i), m.as_slice()));
        }
        for (i, b) in self.biases.iter().enumerate() {
            out.push((BlockId::Bias(i), b.as_slice()));
        }
        if !self.head_bias.is_empty() {
            out.push((BlockId::HeadBias, self.head_bias.as_slice()));
        }
        for (k, t) in self.towers.iter().enumerate() {
            let task = Task::from_index(k).expect("two towers");
            for (j, m) in t.weights.iter().enumerate() {
                out.push((BlockId::TowerWeight(task, j), m.as_slice()));
            }
            for (j, b) in t.biases.iter().enumerate() {
                out.push((BlockId::TowerBias(task, j), b.as_slice()));
            }
        }
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<(BlockId, &mut [T])> {
        let mut out: Vec<(BlockId, &mut [T])> = Vec::new();
        for (f, m) in self.embeddings.iter_mut().enumerate() {
            out.push((BlockId::Embedding(f), m.as_mut_slice()));
        }
        for (i, m) in self.weights.iter_mut().enumerate() {
            out.push((BlockId::Weight(i), m.as_mut_slice()));
        }
        for (i, b) in self.biases.iter_mut().enumerate() {
            out.push((BlockId::Bias(i), b.as_mut_slice()));
        }
        if !self.head_bias.is_empty() {
            out.push((BlockId::HeadBias, self.head_bias.as_mut_slice()));
        }
        for (k, t) in self.towers.iter_mut().enumerate() {
            let task = Task::from_index(k).expect("two towers");
            for (j, m) in t.weights.iter_mut().enumerate() {
                out.push((BlockId::TowerWeight(task, j), m.as_mut_slice()));
            }
            for (j, b) in t.biases.iter_mut().enumerate() {
                out.push((BlockId::TowerBias(task, j), b.as_mut_slice()));
            }
        }
        out
    }

    pub fn num_params(&self) -> usize {
        self.blocks().iter().map(|(_, b)| b.len()).sum()
    }

    pub fn same_shape(&self, other: &ModelParams<T>) -> bool {
        let a = self.blocks();
        let b = other.blocks();
        a.len() == b.len() && a.iter().zip(&b).all(|((ia, sa), (ib, sb))| ia == ib && sa.len() == sb.len())
    }

    /// Bitwise equality, distinguishing `-0.0` from `0.0`.
    pub fn bit_identical(&self, other: &ModelParams<T>) -> bool {
        self.same_shape(other)
            && self.blocks().iter().zip(other.blocks()).all(|((_, a), (_, b))| {
                a.iter()
                    .zip(b.iter())
                    .all(|(x, y)| x.to_f64_lossy().to_bits() == y.to_f64_lossy().to_bits())
            })
    }

    /// Order-sensitive 64-bit digest of every value's bit pattern.
    pub fn fingerprint(&self) -> u64 {
        let mut h = 0x243f_6a88_85a3_08d3u64;
        for (_, block) in self.blocks() {
            h = splitmix64(h ^ block.len() as u64);
            for v in block {
                h = splitmix64(h ^ v.to_f64_lossy().to_bits());
            }
        }
        h
    }

    /// Flattened copy of every value, in declaration order.
    pub fn flatten(&self) -> Vec<T> {
        self.blocks().into_iter().flat_map(|(_, b)| b.iter().copied()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.blocks().iter().all(|(_, b)| b.iter().all(|v| v.is_finite()))
    }

    /// Checks block shapes against `config`.
    pub fn check_config(&self, config: &ModelConfig) -> Result<()> {
        let reference = ModelParams::<T>::skeleton(config)?;
        if !self.same_shape(&reference)
            || self
                .weights
                .iter()
                .zip(&reference.weights)
                .any(|(a, b)| a.shape() != b.shape())
        {
            return Err(Error::invalid("parameter blocks do not match the model config"));
        }
        Ok(())
    }

    /// Zero-valued parameters with the shapes `config` implies.
    pub fn skeleton(config: &ModelConfig) -> Result<Self> {
        Ok(ModelParams::<T>::init(config, RngSeed(0))?.zeros_like())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_follow_config() {
        let cfg = ModelConfig::desk(vec![4, 5], 3, SharingMode::ConnectionShare);
        let p: ModelParams<f64> = ModelParams::init(&cfg, RngSeed(1)).unwrap();
        assert_eq!(p.embeddings[1].shape(), (5, 3));
        assert_eq!(p.weights.len(), 4);
        assert_eq!(p.weights[0].shape(), (cfg.input_width(), 64));
        assert_eq!(p.biases.len(), 3);
        assert_eq!(p.head_bias.len(), 2);
        assert!(p.towers.is_empty());
        assert!(p.biases.iter().all(|b| b.iter().all(|&v| v == 0.0)));

        let cfg = ModelConfig::desk(vec![4, 5], 3, SharingMode::LayerShare);
        let p: ModelParams<f64> = ModelParams::init(&cfg, RngSeed(1)).unwrap();
        assert_eq!(p.weights.len(), 2);
        assert_eq!(p.biases.len(), 2);
        assert!(p.head_bias.is_empty());
        assert_eq!(p.towers.len(), 2);
        assert_eq!(p.towers[1].weights[0].shape(), (32, 16));
        assert_ne!(p.towers[0], p.towers[1]);
    }

    #[test]
    fn blocks_round_trip_through_mut() {
        let cfg = ModelConfig::desk(vec![3], 2, SharingMode::LayerShare);
        let mut p: ModelParams<f64> = ModelParams::init(&cfg, RngSeed(2)).unwrap();
        let n = p.num_params();
        for (_, b) in p.blocks_mut() {
            b.iter_mut().for_each(|v| *v = 1.5);
        }
        assert_eq!(p.flatten(), vec![1.5; n]);
    }

    #[test]
    fn bit_identical_sees_signed_zero() {
        let cfg = ModelConfig::desk(vec![3], 2, SharingMode::SingleTask);
        let p: ModelParams<f64> = ModelParams::init(&cfg, RngSeed(2)).unwrap();
        let mut q = p.clone();
        assert!(p.bit_identical(&q));
        q.head_bias[0] = -0.0;
        assert_eq!(p, q);
        assert!(!p.bit_identical(&q));
    }
}
