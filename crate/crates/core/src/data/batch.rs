use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::model::Sample;
use crate::nn::RngSeed;
use crate::task::Task;

use super::Dataset;

/// A task-homogeneous group of samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch<'a> {
    pub task: Task,
    pub samples: Vec<&'a Sample>,
}

impl<'a> Batch<'a> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskFilter {
    Only(Task),
    Both,
}

impl TaskFilter {
    fn tasks(self) -> Vec<Task> {
        match self {
            TaskFilter::Only(t) => vec![t],
            TaskFilter::Both => Task::ALL.to_vec(),
        }
    }
}

const SCHEDULE_TAG: u64 = 0x5c4e_d01e;

/// One epoch of task-homogeneous batches.
///
/// Each task's samples are shuffled with a seed derived from `(seed, task,
/// epoch)` and chunked, the last chunk possibly short. With both tasks the
/// per-task batch sequences are merged by a seeded shuffle of the multiset
/// of batch labels, so each task appears in proportion to its batch count.
pub fn batches<'a>(
    dataset: &'a Dataset,
    filter: TaskFilter,
    batch_size: usize,
    seed: RngSeed,
    epoch: u64,
) -> Result<Vec<Batch<'a>>> {
    if batch_size == 0 {
        return Err(Error::invalid("batch_size must be at least 1"));
    }
    let mut per_task: Vec<(Task, Vec<Batch<'a>>)> = Vec::new();
    for task in filter.tasks() {
        let mut samples: Vec<&Sample> = dataset.task_samples(task).collect();
        let mut rng = seed.derive2(task.index() as u64 + 1, epoch).rng();
        samples.shuffle(&mut rng);
        let chunks = samples
            .chunks(batch_size)
            .map(|c| Batch {
                task,
                samples: c.to_vec(),
            })
            .collect();
        per_task.push((task, chunks));
    }
    if per_task.len() == 1 {
        return Ok(per_task.pop().map(|(_, b)| b).unwrap_or_default());
    }
    let mut schedule: Vec<usize> = per_task
        .iter()
        .enumerate()
        .flat_map(|(i, (_, b))| std::iter::repeat_n(i, b.len()))
        .collect();
    let mut rng = seed.derive2(SCHEDULE_TAG, epoch).rng();
    schedule.shuffle(&mut rng);
    let mut streams: Vec<std::vec::IntoIter<Batch<'a>>> =
        per_task.into_iter().map(|(_, b)| b.into_iter()).collect();
    Ok(schedule
        .into_iter()
        .filter_map(|i| streams[i].next())
        .collect())
}
