//! Task subnetwork masks, magnitude pruning and mask overlap statistics.

mod io;
mod mask;
mod overlap;
mod prune;

pub use io::{deserialize_mask, load_mask, save_mask, serialize_mask, MASK_MAGIC, MASK_VERSION};
pub use mask::{apply_mask, MaskLayer, TaskMask};
pub use overlap::{overlap_stats, MaskOverlapStats, OverlapCounts};
pub use prune::{
    live_hidden_units, nearest_rank, prune_connections, prune_neurons, quantile_threshold, remove_unit,
    total_hidden_units, unit_importances,
};
