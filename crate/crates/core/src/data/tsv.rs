use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::Sample;
use crate::task::Task;

use super::dataset::validate_sample;
use super::Dataset;

const MAGIC_LINE: &str = "# lotshare-dataset v1";
const CARD_PREFIX: &str = "# cardinalities=";

/// Renders `task  label  ids  impression [day]`, tab separated, preceded by
/// a header carrying the field cardinalities. Labels use the shortest
/// representation that parses back to the same f64.
pub fn format_dataset(dataset: &Dataset) -> String {
    let mut out = String::new();
    out.push_str(MAGIC_LINE);
    out.push('\n');
    out.push_str(CARD_PREFIX);
    out.push_str(&join(&dataset.field_cardinalities));
    out.push('\n');
    for s in &dataset.samples {
        let _ = write!(out, "{}\t{:?}\t{}\t{}", s.task.name(), s.label, join(&s.feature_ids), s.impression_id);
        if let Some(day) = s.day {
            let _ = write!(out, "\t{day}");
        }
        out.push('\n');
    }
    out
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

/// Parses the TSV format. The impression column may be omitted; CTR lines
/// then take their line number as impression id, and each CVR line binds
/// to the earliest unclaimed clicked CTR line with identical features.
pub fn parse_dataset(text: &str) -> Result<Dataset> {
    let mut cards: Option<Vec<usize>> = None;
    let mut samples = Vec::new();
    let mut lines_of = Vec::new();
    let mut open_clicks: HashMap<Vec<usize>, VecDeque<u64>> = HashMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix(CARD_PREFIX) {
            let parsed = if rest.trim().is_empty() {
                Vec::new()
            } else {
                parse_ids(rest).map_err(|msg| Error::Parse { line: line_no, msg })?
            };
            cards = Some(parsed);
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let cards = cards.as_ref().ok_or_else(|| Error::Parse {
            line: line_no,
            msg: "sample line before the cardinalities header".into(),
        })?;
        let cols: Vec<&str> = line.split('\t').collect();
        if !(3..=5).contains(&cols.len()) {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected 3 to 5 tab-separated columns, got {}", cols.len()),
            });
        }
        let perr = |msg: String| Error::Parse { line: line_no, msg };
        let task: Task = cols[0].trim().parse().map_err(|_| perr(format!("unknown task '{}'", cols[0])))?;
        let label: f64 = cols[1].trim().parse().map_err(|_| perr(format!("bad label '{}'", cols[1])))?;
        if !label.is_finite() {
            return Err(perr(format!("non-finite label '{}'", cols[1])));
        }
        let ids = parse_ids(cols[2]).map_err(perr)?;
        let impression = match cols.get(3) {
            Some(c) => Some(c.trim().parse::<u64>().map_err(|_| perr(format!("bad impression id '{c}'")))?),
            None => None,
        };
        let day = match cols.get(4) {
            Some(c) => Some(c.trim().parse::<u32>().map_err(|_| perr(format!("bad day '{c}'")))?),
            None => None,
        };
        let mut sample = Sample::new(0, task, label, ids);
        sample.day = day;
        validate_sample(&sample, cards).map_err(|msg| Error::Validation { line: line_no, msg })?;
        sample.impression_id = match (impression, task) {
            (Some(id), _) => id,
            (None, Task::Ctr) => {
                let id = line_no as u64;
                if label > 0.5 {
                    open_clicks.entry(sample.feature_ids.clone()).or_default().push_back(id);
                }
                id
            }
            (None, Task::Cvr) => open_clicks
                .get_mut(&sample.feature_ids)
                .and_then(VecDeque::pop_front)
                .ok_or_else(|| Error::Validation {
                    line: line_no,
                    msg: "CVR sample has no preceding clicked CTR sample with the same features".into(),
                })?,
        };
        samples.push(sample);
        lines_of.push(line_no);
    }
    let dataset = Dataset::new(cards.unwrap_or_default(), samples);
    dataset.validate().map_err(|e| match e {
        Error::Validation { line, msg } => Error::Validation {
            line: lines_of[line - 1],
            msg,
        },
        other => other,
    })?;
    Ok(dataset)
}

fn parse_ids(s: &str) -> std::result::Result<Vec<usize>, String> {
    s.trim()
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| format!("bad id '{t}'")))
        .collect()
}

pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    std::fs::write(path, format_dataset(dataset))?;
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    parse_dataset(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_set() -> Dataset {
        let mut s = vec![
            Sample::new(10, Task::Ctr, 1.0, vec![0, 2]),
            Sample::new(11, Task::Ctr, 0.0, vec![1, 1]),
            Sample::new(10, Task::Cvr, 0.1 + 0.2, vec![0, 2]),
        ];
        s[1].day = Some(3);
        Dataset::new(vec![2, 3], s)
    }

    #[test]
    fn round_trip_is_exact() {
        let d = sample_set();
        assert_eq!(parse_dataset(&format_dataset(&d)).unwrap(), d);
    }

    #[test]
    fn empty_input_is_empty_dataset() {
        assert!(parse_dataset("").unwrap().is_empty());
    }

    #[test]
    fn cvr_label_out_of_range_names_line() {
        let text = "# cardinalities=2,3\nctr\t1\t0,2\t5\ncvr\t1.2\t0,2\t5\n";
        match parse_dataset(text) {
            Err(Error::Validation { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_and_out_of_range() {
        let e = parse_dataset("# cardinalities=2,3\nctr\tx\t0,2\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        let e = parse_dataset("# cardinalities=2,3\nctr\t0\t0,3\n").unwrap_err();
        assert!(matches!(e, Error::Validation { line: 2, .. }));
        let e = parse_dataset("ctr\t0\t0,1\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn three_column_lines_bind_by_features() {
        let text = "# cardinalities=2,3\nctr\t1\t0,2\nctr\t1\t1,1\ncvr\t0.5\t1,1\n";
        let d = parse_dataset(text).unwrap();
        assert_eq!(d.samples[2].impression_id, d.samples[1].impression_id);
        let orphan = "# cardinalities=2,3\nctr\t0\t0,2\ncvr\t0.5\t0,2\n";
        assert!(matches!(parse_dataset(orphan), Err(Error::Validation { line: 3, .. })));
    }
}
