use crate::error::{Error, Result};
use crate::model::{ModelConfig, ModelParams};
use crate::nn::{Matrix, Scalar};
use crate::task::Task;

/// Binary mask over one weight matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MaskLayer {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl MaskLayer {
    pub fn ones(rows: usize, cols: usize) -> Self {
        MaskLayer {
            rows,
            cols,
            bits: vec![true; rows * cols],
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        MaskLayer {
            rows,
            cols,
            bits: vec![false; rows * cols],
        }
    }

    pub fn from_bits(rows: usize, cols: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != rows * cols {
            return Err(Error::Shape {
                op: "MaskLayer::from_bits",
                left: (rows, cols),
                right: (bits.len(), 1),
            });
        }
        Ok(MaskLayer { rows, cols, bits })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let bits = (0..rows * cols).map(|i| f(i / cols, i % cols)).collect();
        MaskLayer { rows, cols, bits }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.bits[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        self.bits[r * self.cols + c] = v;
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn to_matrix<T: Scalar>(&self) -> Matrix<T> {
        let data = self.bits.iter().map(|&b| if b { T::one() } else { T::zero() }).collect();
        Matrix::from_vec(self.rows, self.cols, data).expect("mask shape is consistent")
    }

    /// `weights ⊙ mask`.
    pub fn apply<T: Scalar>(&self, weights: &Matrix<T>) -> Result<Matrix<T>> {
        if weights.shape() != self.shape() {
            return Err(Error::Shape {
                op: "apply_mask",
                left: weights.shape(),
                right: self.shape(),
            });
        }
        let data = weights
            .as_slice()
            .iter()
            .zip(&self.bits)
            .map(|(&w, &b)| if b { w * T::one() } else { w * T::zero() })
            .collect();
        Matrix::from_vec(self.rows, self.cols, data)
    }

    /// Entrywise `self ≤ other`.
    pub fn is_subset_of(&self, other: &MaskLayer) -> bool {
        self.shape() == other.shape() && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }
}

/// One task's subnetwork: a mask per prunable (MLP) weight matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TaskMask {
    layers: Vec<MaskLayer>,
    pub task: Task,
    pub pruning_round: u32,
}

impl TaskMask {
    pub fn new(layers: Vec<MaskLayer>, task: Task, pruning_round: u32) -> Self {
        TaskMask {
            layers,
            task,
            pruning_round,
        }
    }

    /// The round-0 mask: every connection kept.
    pub fn all_ones(config: &ModelConfig, task: Task) -> Self {
        let layers = config.trunk_shapes().into_iter().map(|(r, c)| MaskLayer::ones(r, c)).collect();
        TaskMask::new(layers, task, 0)
    }

    pub fn all_zeros(config: &ModelConfig, task: Task) -> Self {
        let layers = config.trunk_shapes().into_iter().map(|(r, c)| MaskLayer::zeros(r, c)).collect();
        TaskMask::new(layers, task, 0)
    }

    pub fn layers(&self) -> &[MaskLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [MaskLayer] {
        &mut self.layers
    }

    pub fn layer(&self, i: usize) -> &MaskLayer {
        &self.layers[i]
    }

    pub fn total(&self) -> usize {
        self.layers.iter().map(MaskLayer::len).sum()
    }

    pub fn survivors(&self) -> usize {
        self.layers.iter().map(MaskLayer::count_ones).sum()
    }

    /// Fraction of connections still set.
    pub fn density(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        self.survivors() as f64 / total as f64
    }

    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.layers.iter().map(MaskLayer::shape).collect()
    }

    /// Errors unless the mask has one layer per weight matrix, shape for shape.
    pub fn check_against<T: Scalar>(&self, weights: &[Matrix<T>]) -> Result<()> {
        if self.layers.len() != weights.len() {
            return Err(Error::Shape {
                op: "mask layers",
                left: (self.layers.len(), 0),
                right: (weights.len(), 0),
            });
        }
        for (m, w) in self.layers.iter().zip(weights) {
            if m.shape() != w.shape() {
                return Err(Error::Shape {
                    op: "mask layer",
                    left: m.shape(),
                    right: w.shape(),
                });
            }
        }
        Ok(())
    }

    pub fn check_config(&self, config: &ModelConfig) -> Result<()> {
        if self.shapes() != config.trunk_shapes() {
            return Err(Error::invalid(format!(
                "mask shapes {:?} do not match model layers {:?}",
                self.shapes(),
                config.trunk_shapes()
            )));
        }
        Ok(())
    }

    /// Entrywise `self ≤ other`.
    pub fn is_subset_of(&self, other: &TaskMask) -> bool {
        self.layers.len() == other.layers.len()
            && self.layers.iter().zip(&other.layers).all(|(a, b)| a.is_subset_of(b))
    }

    /// Whether each hidden unit of layer `i` (output column `j` of weight
    /// `i`) feeds anything downstream in this subnetwork. A hidden unit is
    /// part of the subnetwork iff at least one of its outgoing connections
    /// survives. Output units always count as live.
    pub fn unit_live(&self, i: usize) -> Vec<bool> {
        match self.layers.get(i + 1) {
            None => vec![true; self.layers[i].cols()],
            Some(next) => (0..next.rows())
                .map(|r| (0..next.cols()).any(|c| next.get(r, c)))
                .collect(),
        }
    }

    /// Hidden units of layer `i` that still have an incoming connection.
    pub fn unit_fed(&self, i: usize) -> Vec<bool> {
        let m = &self.layers[i];
        (0..m.cols()).map(|c| (0..m.rows()).any(|r| m.get(r, c))).collect()
    }
}

/// `params` with every MLP weight multiplied by its mask entry. Embeddings,
/// biases and towers pass through unchanged.
pub fn apply_mask<T: Scalar>(params: &ModelParams<T>, mask: &TaskMask) -> Result<ModelParams<T>> {
    mask.check_against(&params.weights)?;
    let mut out = params.clone();
    for (w, m) in out.weights.iter_mut().zip(mask.layers()) {
        *w = m.apply(w)?;
    }
    Ok(out)
}
