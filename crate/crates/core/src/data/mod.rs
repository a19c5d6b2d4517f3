//! Datasets, the synthetic generator, file I/O and batching.

mod batch;
mod dataset;
mod synthetic;
mod tsv;

pub use batch::{batches, Batch, TaskFilter};
pub use dataset::{hash_split, Dataset, Split};
pub use synthetic::{generate, generate_traced, sidecar_path, ImpressionTrace, SyntheticSpec};
pub use tsv::{format_dataset, load_dataset, parse_dataset, save_dataset};
