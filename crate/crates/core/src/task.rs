use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// The two prediction tasks. CVR samples live inside the clicked subset of
/// the CTR sample space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Task {
    Ctr,
    Cvr,
}

impl Task {
    pub const ALL: [Task; 2] = [Task::Ctr, Task::Cvr];

    /// Stable index used for per-task arrays and on-disk encodings.
    pub fn index(self) -> usize {
        match self {
            Task::Ctr => 0,
            Task::Cvr => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Task> {
        match i {
            0 => Some(Task::Ctr),
            1 => Some(Task::Cvr),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::Ctr => "ctr",
            Task::Cvr => "cvr",
        }
    }

    pub fn other(self) -> Task {
        match self {
            Task::Ctr => Task::Cvr,
            Task::Cvr => Task::Ctr,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ctr" => Ok(Task::Ctr),
            "cvr" => Ok(Task::Cvr),
            other => Err(Error::invalid(format!("unknown task `{other}`"))),
        }
    }
}
