//! Offline metrics, the multi-task gain, and the online rank score.

mod auc;
mod gain;
mod rank;
mod regression;
mod report;

pub use auc::auc;
pub use gain::{format_gain, mtl_gain, signed, MtlGain};
pub use rank::{rank_score, rank_top_k, RankInput};
pub use regression::{log_loss, mse};
pub use report::MetricsReport;
