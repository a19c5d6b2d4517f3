use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::{Matrix, Scalar};

/// Generator behind every random draw in the crate. ChaCha is
/// platform-independent, so equal seeds give equal streams everywhere.
pub type Rng = ChaCha8Rng;

/// Root of all randomness. Sub-streams are obtained with [`RngSeed::derive`]
/// so that adding a consumer never perturbs the others.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Independent child seed for a named purpose.
    pub fn derive(self, tag: u64) -> RngSeed {
        RngSeed(splitmix64(self.0 ^ splitmix64(tag.wrapping_add(0x5851_f42d_4c95_7f2d))))
    }

    pub fn derive2(self, tag: u64, index: u64) -> RngSeed {
        self.derive(tag).derive(index)
    }
}

impl From<u64> for RngSeed {
    fn from(v: u64) -> Self {
        RngSeed(v)
    }
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Half-width of the Xavier/Glorot uniform range.
pub fn xavier_bound(rows: usize, cols: usize) -> f64 {
    (6.0 / (rows + cols) as f64).sqrt()
}

/// Xavier-uniform matrix on `[-b, b]`, `b = sqrt(6 / (rows + cols))`.
pub fn xavier_init<T: Scalar>(rows: usize, cols: usize, seed: RngSeed) -> Result<Matrix<T>> {
    xavier_init_with(rows, cols, &mut seed.rng())
}

/// Same as [`xavier_init`] but draws from a caller-owned stream. Values are
/// sampled in `f64` and then converted, so `f32` and `f64` models built from
/// one seed agree up to rounding.
pub fn xavier_init_with<T: Scalar>(rows: usize, cols: usize, rng: &mut Rng) -> Result<Matrix<T>> {
    if rows == 0 || cols == 0 {
        return Err(Error::invalid(format!(
            "xavier_init needs nonzero dimensions, got {rows}x{cols}"
        )));
    }
    let b = xavier_bound(rows, cols);
    let dist = Uniform::new_inclusive(-b, b);
    let data = (0..rows * cols).map(|_| T::of(dist.sample(rng))).collect();
    Matrix::from_vec(rows, cols, data)
}
