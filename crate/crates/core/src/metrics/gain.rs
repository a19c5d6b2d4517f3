use crate::error::{Error, Result};
use crate::task::Task;

/// Improvement of a multi-task model over the single-task one. Positive
/// means better for both tasks: higher AUC for CTR, lower MSE for CVR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MtlGain {
    pub absolute: f64,
    /// `absolute / metric_single`.
    pub relative: f64,
}

pub fn mtl_gain(metric_single: f64, metric_mtl: f64, task: Task) -> Result<MtlGain> {
    if !metric_single.is_finite() || !metric_mtl.is_finite() {
        return Err(Error::invalid("mtl_gain needs finite metrics"));
    }
    let absolute = match task {
        Task::Ctr => metric_mtl - metric_single,
        Task::Cvr => metric_single - metric_mtl,
    };
    if metric_single == 0.0 {
        return Err(Error::UndefinedMetric(
            "relative gain is undefined for a zero single-task metric".into(),
        ));
    }
    Ok(MtlGain {
        absolute,
        relative: absolute / metric_single,
    })
}

/// Signed value with `decimals` places; negative zero prints as `+0`.
pub fn signed(v: f64, decimals: usize) -> String {
    let s = format!("{:+.*}", decimals, v);
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        format!("+{}", &s[1..])
    } else {
        s
    }
}

/// `+0.00462 (+3.38%)`: five places absolute, two places relative.
pub fn format_gain(g: &MtlGain) -> String {
    format!("{} ({}%)", signed(g.absolute, 5), signed(g.relative * 100.0, 2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printed_table_cells() {
        let g = mtl_gain(0.13688, 0.13226, Task::Cvr).unwrap();
        assert!((g.absolute - 0.00462).abs() < 1e-12);
        assert_eq!(format_gain(&g), "+0.00462 (+3.38%)");
        let g = mtl_gain(0.78572, 0.78874, Task::Ctr).unwrap();
        assert_eq!(format_gain(&g), "+0.00302 (+0.38%)");
        let g = mtl_gain(0.78572, 0.78346, Task::Ctr).unwrap();
        assert_eq!(format_gain(&g), "-0.00226 (-0.29%)");
    }

    #[test]
    fn equal_metrics_give_zero() {
        for task in Task::ALL {
            let g = mtl_gain(0.5, 0.5, task).unwrap();
            assert_eq!((g.absolute, g.relative), (0.0, 0.0));
            assert_eq!(format_gain(&g), "+0.00000 (+0.00%)");
        }
    }

    #[test]
    fn improvement_is_positive_for_both_tasks() {
        assert!(mtl_gain(0.7, 0.71, Task::Ctr).unwrap().absolute > 0.0);
        assert!(mtl_gain(0.2, 0.19, Task::Cvr).unwrap().absolute > 0.0);
        assert!(mtl_gain(0.7, 0.69, Task::Ctr).unwrap().absolute < 0.0);
        assert!(mtl_gain(0.2, 0.21, Task::Cvr).unwrap().absolute < 0.0);
    }

    #[test]
    fn zero_single_metric() {
        assert!(matches!(mtl_gain(0.0, 0.1, Task::Cvr), Err(Error::UndefinedMetric(_))));
        assert!(mtl_gain(f64::NAN, 0.1, Task::Cvr).is_err());
    }

    #[test]
    fn signed_zero_formatting() {
        assert_eq!(signed(-0.0, 5), "+0.00000");
        assert_eq!(signed(-0.000_001, 5), "+0.00000");
        assert_eq!(signed(-0.5, 2), "-0.50");
    }
}
