use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// How field embeddings are combined before the MLP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CrossKind {
    /// Flattened embeddings only.
    None,
    /// One dot product per field pair, then the flattened embeddings.
    PairwiseDot,
    /// One elementwise product vector per field pair, then the flattened
    /// embeddings.
    PairwiseProduct,
}

impl CrossKind {
    pub fn name(self) -> &'static str {
        match self {
            CrossKind::None => "none",
            CrossKind::PairwiseDot => "pairwise_dot",
            CrossKind::PairwiseProduct => "pairwise_product",
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            CrossKind::None => 0,
            CrossKind::PairwiseDot => 1,
            CrossKind::PairwiseProduct => 2,
        }
    }

    pub(crate) fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(CrossKind::None),
            1 => Some(CrossKind::PairwiseDot),
            2 => Some(CrossKind::PairwiseProduct),
            _ => None,
        }
    }
}

impl fmt::Display for CrossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CrossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "none" => Ok(CrossKind::None),
            "pairwise_dot" | "dot" => Ok(CrossKind::PairwiseDot),
            "pairwise_product" | "product" => Ok(CrossKind::PairwiseProduct),
            other => Err(Error::invalid(format!("unknown cross kind `{other}`"))),
        }
    }
}

/// Which parameters the two tasks share.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SharingMode {
    /// Two independent networks.
    SingleTask,
    /// Shared embeddings and trunk, one tower per task.
    LayerShare,
    /// One network, per-task connection masks from magnitude pruning.
    ConnectionShare,
    /// One network, per-task masks that remove whole hidden units.
    NeuronShare,
}

impl SharingMode {
    pub const ALL: [SharingMode; 4] = [
        SharingMode::SingleTask,
        SharingMode::LayerShare,
        SharingMode::ConnectionShare,
        SharingMode::NeuronShare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SharingMode::SingleTask => "single_task",
            SharingMode::LayerShare => "layer_share",
            SharingMode::ConnectionShare => "connection_share",
            SharingMode::NeuronShare => "neuron_share",
        }
    }

    /// Modes whose forward pass takes a task mask.
    pub fn uses_masks(self) -> bool {
        matches!(self, SharingMode::ConnectionShare | SharingMode::NeuronShare)
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            SharingMode::SingleTask => 0,
            SharingMode::LayerShare => 1,
            SharingMode::ConnectionShare => 2,
            SharingMode::NeuronShare => 3,
        }
    }

    pub(crate) fn from_code(c: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.code() == c)
    }
}

impl fmt::Display for SharingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SharingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown sharing mode `{s}`")))
    }
}

/// Width of the feature-cross output for `fields` embeddings of size `dim`.
pub fn cross_width(fields: usize, dim: usize, kind: CrossKind) -> usize {
    let pairs = fields * fields.saturating_sub(1) / 2;
    let flat = fields * dim;
    match kind {
        CrossKind::None => flat,
        CrossKind::PairwiseDot => pairs + flat,
        CrossKind::PairwiseProduct => pairs * dim + flat,
    }
}

/// Architecture of one network.
///
/// `mlp_dims` lists layer widths starting with the MLP input width, so
/// `[in, 64, 32, 16, 1]` describes four weight matrices. In `layer_share`
/// mode `mlp_dims` is the shared trunk (possibly just `[in]`) and
/// `tower_dims` describes each task tower, starting at the trunk output
/// width.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModelConfig {
    pub field_cardinalities: Vec<usize>,
    pub embedding_dim: usize,
    pub mlp_dims: Vec<usize>,
    pub tower_dims: Vec<usize>,
    pub cross_kind: CrossKind,
    pub sharing_mode: SharingMode,
}

impl ModelConfig {
    /// Small default network: `in → 64 → 32 → 16 → 1`, or for
    /// `layer_share` a `in → 64 → 32` trunk with `32 → 16 → 1` towers.
    pub fn desk(field_cardinalities: Vec<usize>, embedding_dim: usize, mode: SharingMode) -> Self {
        let input = cross_width(field_cardinalities.len(), embedding_dim, CrossKind::PairwiseDot);
        let (mlp_dims, tower_dims) = match mode {
            SharingMode::LayerShare => (vec![input, 64, 32], vec![32, 16, 1]),
            _ => (vec![input, 64, 32, 16, 1], Vec::new()),
        };
        ModelConfig {
            field_cardinalities,
            embedding_dim,
            mlp_dims,
            tower_dims,
            cross_kind: CrossKind::PairwiseDot,
            sharing_mode: mode,
        }
    }

    pub fn num_fields(&self) -> usize {
        self.field_cardinalities.len()
    }

    pub fn input_width(&self) -> usize {
        cross_width(self.num_fields(), self.embedding_dim, self.cross_kind)
    }

    /// Number of trunk weight matrices (the prunable layers in shared modes).
    pub fn num_trunk_layers(&self) -> usize {
        self.mlp_dims.len().saturating_sub(1)
    }

    /// `(rows, cols)` of each trunk weight matrix.
    pub fn trunk_shapes(&self) -> Vec<(usize, usize)> {
        self.mlp_dims.windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn tower_shapes(&self) -> Vec<(usize, usize)> {
        self.tower_dims.windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.field_cardinalities.is_empty() {
            return Err(Error::invalid("model needs at least one field"));
        }
        if let Some(f) = self.field_cardinalities.iter().position(|&c| c == 0) {
            return Err(Error::invalid(format!("field {f} has zero cardinality")));
        }
        if self.embedding_dim == 0 {
            return Err(Error::invalid("embedding_dim must be >= 1"));
        }
        if self.mlp_dims.is_empty() {
            return Err(Error::invalid("mlp_dims must be nonempty"));
        }
        if self.mlp_dims.iter().chain(&self.tower_dims).any(|&d| d == 0) {
            return Err(Error::invalid("layer widths must be >= 1"));
        }
        let input = self.input_width();
        if self.mlp_dims[0] != input {
            return Err(Error::invalid(format!(
                "first MLP width {} does not match cross output width {input} \
                 ({} fields, dim {}, {})",
                self.mlp_dims[0],
                self.num_fields(),
                self.embedding_dim,
                self.cross_kind
            )));
        }
        match self.sharing_mode {
            SharingMode::LayerShare => {
                if self.tower_dims.len() < 2 {
                    return Err(Error::invalid("layer_share needs tower_dims with >= 2 widths"));
                }
                if self.tower_dims[0] != *self.mlp_dims.last().unwrap() {
                    return Err(Error::invalid(format!(
                        "tower input width {} does not match trunk output width {}",
                        self.tower_dims[0],
                        self.mlp_dims.last().unwrap()
                    )));
                }
                if *self.tower_dims.last().unwrap() != 1 {
                    return Err(Error::invalid("tower output width must be 1"));
                }
            }
            _ => {
                if self.mlp_dims.len() < 2 {
                    return Err(Error::invalid("mlp_dims needs at least an input and an output width"));
                }
                if *self.mlp_dims.last().unwrap() != 1 {
                    return Err(Error::invalid("MLP output width must be 1"));
                }
                if !self.tower_dims.is_empty() {
                    return Err(Error::invalid(format!(
                        "tower_dims only apply to layer_share, mode is {}",
                        self.sharing_mode
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn widths() {
        assert_eq!(cross_width(1, 7, CrossKind::PairwiseDot), 7);
        assert_eq!(cross_width(1, 7, CrossKind::PairwiseProduct), 7);
        assert_eq!(cross_width(2, 2, CrossKind::PairwiseDot), 5);
        // C(3,2) = 3 pairs of width 4, plus 3·4 flattened
        assert_eq!(cross_width(3, 4, CrossKind::PairwiseProduct), 24);
        assert_eq!(cross_width(3, 4, CrossKind::None), 12);
    }

    #[test]
    fn desk_configs_validate() {
        for mode in SharingMode::ALL {
            ModelConfig::desk(vec![5, 6, 7], 4, mode).validate().unwrap();
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = ModelConfig::desk(vec![5, 6], 4, SharingMode::ConnectionShare);
        c.mlp_dims[0] += 1;
        assert!(c.validate().is_err());
        let mut c = ModelConfig::desk(vec![5, 0], 4, SharingMode::SingleTask);
        assert!(c.validate().is_err());
        c.field_cardinalities[1] = 2;
        c.embedding_dim = 0;
        assert!(c.validate().is_err());
        let mut c = ModelConfig::desk(vec![3], 2, SharingMode::LayerShare);
        c.tower_dims[0] = 31;
        assert!(c.validate().is_err());
    }

    #[test]
    fn mode_names_round_trip() {
        for m in SharingMode::ALL {
            assert_eq!(m.name().parse::<SharingMode>().unwrap(), m);
            assert_eq!(SharingMode::from_code(m.code()), Some(m));
        }
    }
}
