use crate::task::Task;

/// One labeled impression (CTR) or one clicked impression's consumption
/// depth (CVR).
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub impression_id: u64,
    pub task: Task,
    /// `{0, 1}` for CTR, `[0, 1]` for CVR.
    pub label: f64,
    /// One categorical id per field.
    pub feature_ids: Vec<usize>,
    pub day: Option<u32>,
}

impl Sample {
    pub fn new(impression_id: u64, task: Task, label: f64, feature_ids: Vec<usize>) -> Self {
        Sample {
            impression_id,
            task,
            label,
            feature_ids,
            day: None,
        }
    }
}
