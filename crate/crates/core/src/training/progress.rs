use std::fmt;

/// One line of training progress, rendered as space separated `key=value`
/// pairs starting with the stage.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgressRecord {
    pub stage: &'static str,
    pub fields: Vec<(&'static str, String)>,
}

impl ProgressRecord {
    pub fn new(stage: &'static str) -> Self {
        ProgressRecord {
            stage,
            fields: Vec::new(),
        }
    }

    pub fn with(mut self, key: &'static str, value: impl fmt::Display) -> Self {
        self.fields.push((key, value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| *k == key).map(|(_, v)| v.as_str())
    }
}

impl fmt::Display for ProgressRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage={}", self.stage)?;
        for (k, v) in &self.fields {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

/// Receiver of progress records.
pub type Progress<'a> = &'a mut dyn FnMut(&ProgressRecord);

/// Discards every record.
pub fn quiet(_: &ProgressRecord) {}
