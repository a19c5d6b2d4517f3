use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::model::Sample;
use crate::nn::splitmix64;
use crate::task::Task;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// 80/10/10 split by a fixed hash of the impression id. A CVR sample shares
/// its impression id with the click it belongs to, so both land in the same
/// split.
pub fn hash_split(impression_id: u64) -> Split {
    match splitmix64(impression_id ^ 0x6c6f_7473_6861_7265) % 10 {
        8 => Split::Validation,
        9 => Split::Test,
        _ => Split::Train,
    }
}

/// Labeled samples of both tasks plus the feature vocabulary sizes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub field_cardinalities: Vec<usize>,
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn new(field_cardinalities: Vec<usize>, samples: Vec<Sample>) -> Self {
        Dataset {
            field_cardinalities,
            samples,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn task_samples(&self, task: Task) -> impl Iterator<Item = &Sample> {
        self.samples.iter().filter(move |s| s.task == task)
    }

    pub fn count(&self, task: Task) -> usize {
        self.task_samples(task).count()
    }

    pub fn clicks(&self) -> usize {
        self.task_samples(Task::Ctr).filter(|s| s.label > 0.5).count()
    }

    /// Split of one sample. When every sample carries a day, the last day
    /// is the test split and the rest is divided by hash into train and
    /// validation; otherwise the 80/10/10 hash split applies.
    pub fn split_of(&self, sample: &Sample) -> Split {
        match (sample.day, self.last_day()) {
            (Some(day), Some(last)) => {
                if day == last {
                    Split::Test
                } else if hash_split(sample.impression_id) == Split::Train {
                    Split::Train
                } else {
                    Split::Validation
                }
            }
            _ => hash_split(sample.impression_id),
        }
    }

    fn last_day(&self) -> Option<u32> {
        let mut last = None;
        for s in &self.samples {
            let d = s.day?;
            last = Some(last.map_or(d, |l: u32| l.max(d)));
        }
        last
    }

    pub fn split(&self, split: Split) -> Dataset {
        let last = self.last_day();
        let samples = self
            .samples
            .iter()
            .filter(|s| match (s.day, last) {
                (Some(_), Some(_)) => self.split_of(s) == split,
                _ => hash_split(s.impression_id) == split,
            })
            .cloned()
            .collect();
        Dataset::new(self.field_cardinalities.clone(), samples)
    }

    /// Labels in range, ids in range, and every CVR sample backed by a
    /// clicked CTR sample with the same impression id and features. Errors
    /// name the 1-based sample position.
    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.samples.iter().enumerate() {
            validate_sample(s, &self.field_cardinalities).map_err(|msg| Error::Validation { line: i + 1, msg })?;
        }
        let clicks: HashMap<u64, &Sample> = self
            .task_samples(Task::Ctr)
            .filter(|s| s.label > 0.5)
            .map(|s| (s.impression_id, s))
            .collect();
        for (i, s) in self.samples.iter().enumerate() {
            if s.task != Task::Cvr {
                continue;
            }
            match clicks.get(&s.impression_id) {
                Some(c) if c.feature_ids == s.feature_ids => {}
                Some(_) => {
                    return Err(Error::Validation {
                        line: i + 1,
                        msg: format!("CVR impression {} has different features than its click", s.impression_id),
                    })
                }
                None => {
                    return Err(Error::Validation {
                        line: i + 1,
                        msg: format!("CVR impression {} has no clicked CTR sample", s.impression_id),
                    })
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn validate_sample(s: &Sample, cards: &[usize]) -> std::result::Result<(), String> {
    match s.task {
        Task::Ctr if s.label != 0.0 && s.label != 1.0 => {
            return Err(format!("CTR label must be 0 or 1, got {}", s.label));
        }
        Task::Cvr if !(0.0..=1.0).contains(&s.label) => {
            return Err(format!("CVR label must lie in [0, 1], got {}", s.label));
        }
        _ => {}
    }
    if s.feature_ids.len() != cards.len() {
        return Err(format!(
            "expected {} feature ids, got {}",
            cards.len(),
            s.feature_ids.len()
        ));
    }
    for (f, (&id, &card)) in s.feature_ids.iter().zip(cards).enumerate() {
        if id >= card {
            return Err(format!("field {f} id {id} out of range (cardinality {card})"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Dataset {
        let mut v = Vec::new();
        for i in 0..40u64 {
            let ids = vec![(i % 3) as usize, (i % 5) as usize];
            let click = i % 4 == 0;
            v.push(Sample::new(i, Task::Ctr, if click { 1.0 } else { 0.0 }, ids.clone()));
            if click {
                v.push(Sample::new(i, Task::Cvr, 0.25, ids));
            }
        }
        Dataset::new(vec![3, 5], v)
    }

    #[test]
    fn splits_partition_and_keep_pairs_together() {
        let d = tiny();
        d.validate().unwrap();
        let parts: Vec<Dataset> = [Split::Train, Split::Validation, Split::Test].iter().map(|&s| d.split(s)).collect();
        assert_eq!(parts.iter().map(Dataset::len).sum::<usize>(), d.len());
        for p in &parts {
            p.validate().unwrap();
        }
    }

    #[test]
    fn hash_split_proportions() {
        let n = 100_000u64;
        let train = (0..n).filter(|&i| hash_split(i) == Split::Train).count() as f64 / n as f64;
        let test = (0..n).filter(|&i| hash_split(i) == Split::Test).count() as f64 / n as f64;
        assert!((train - 0.8).abs() < 0.01 && (test - 0.1).abs() < 0.01);
    }

    #[test]
    fn day_column_drives_test_split() {
        let mut d = tiny();
        for s in &mut d.samples {
            s.day = Some((s.impression_id % 9) as u32);
        }
        let test = d.split(Split::Test);
        assert!(test.samples.iter().all(|s| s.day == Some(8)));
        assert!(d.split(Split::Train).samples.iter().all(|s| s.day != Some(8)));
    }

    #[test]
    fn validation_failures() {
        let mut d = tiny();
        d.samples.push(Sample::new(1, Task::Cvr, 0.5, vec![1, 1]));
        assert!(matches!(d.validate(), Err(Error::Validation { .. })));
        let mut d = tiny();
        d.samples[3].label = 1.2;
        d.samples[3].task = Task::Cvr;
        assert!(d.validate().is_err());
        let mut d = tiny();
        d.samples[0].feature_ids[1] = 5;
        assert!(matches!(d.validate(), Err(Error::Validation { line: 1, .. })));
    }
}
