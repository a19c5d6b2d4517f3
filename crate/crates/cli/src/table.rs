//! Plain-text tables: the model comparison and dataset statistics.

use std::collections::HashSet;
use std::fmt::Write as _;

use lotshare_core::data::{Dataset, Split};
use lotshare_core::metrics::{format_gain, mtl_gain, MetricsReport, MtlGain};
use lotshare_core::model::SharingMode;
use lotshare_core::Task;

use crate::error::{CliError, CliResult};

/// `Connection_Share` style label for a sharing mode.
pub fn display_name(mode: SharingMode) -> &'static str {
    match mode {
        SharingMode::SingleTask => "Single_Task",
        SharingMode::LayerShare => "Layer_Share",
        SharingMode::ConnectionShare => "Connection_Share",
        SharingMode::NeuronShare => "Neuron_Share",
    }
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.5}"))
}

fn gain(single: Option<f64>, mtl: Option<f64>, task: Task) -> Option<MtlGain> {
    mtl_gain(single?, mtl?, task).ok()
}

/// One row of the comparison, with gains against the single-task run.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub mode: SharingMode,
    pub cvr_mse: Option<f64>,
    pub ctr_auc: Option<f64>,
    pub cvr_gain: Option<MtlGain>,
    pub ctr_gain: Option<MtlGain>,
}

/// Gains of every report against the first single-task report.
pub fn compare_reports(reports: &[MetricsReport]) -> CliResult<Vec<ComparisonRow>> {
    let base = reports
        .iter()
        .find(|r| r.mode == SharingMode::SingleTask)
        .ok_or_else(|| CliError::config("comparison needs a single_task run as the gain reference"))?;
    Ok(reports
        .iter()
        .map(|r| ComparisonRow {
            mode: r.mode,
            cvr_mse: r.cvr_mse,
            ctr_auc: r.ctr_auc,
            cvr_gain: gain(base.cvr_mse, r.cvr_mse, Task::Cvr),
            ctr_gain: gain(base.ctr_auc, r.ctr_auc, Task::Ctr),
        })
        .collect())
}

/// Rows = runs in the given order; metrics with five decimals; gains as
/// `+0.00462 (+3.38%)`; missing values as `n/a`.
pub fn comparison_table(reports: &[MetricsReport]) -> CliResult<String> {
    let rows = compare_reports(reports)?;
    let header = ["Model", "CVR MSE", "CTR AUC", "CVR MTL Gain", "CTR MTL Gain"];
    let body: Vec<[String; 5]> = rows
        .iter()
        .map(|r| {
            [
                display_name(r.mode).to_string(),
                cell(r.cvr_mse),
                cell(r.ctr_auc),
                r.cvr_gain.as_ref().map_or_else(|| "n/a".into(), format_gain),
                r.ctr_gain.as_ref().map_or_else(|| "n/a".into(), format_gain),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &body {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &[&str]| {
        let parts: Vec<String> = cells.iter().zip(widths).map(|(c, w)| format!("{c:<w$}")).collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&header);
    for row in &body {
        line(&row.iter().map(String::as_str).collect::<Vec<_>>());
    }
    Ok(out)
}

/// Counts shown per dataset split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetStats {
    pub users: usize,
    pub items: usize,
    pub impressions: usize,
    pub clicks: usize,
    pub conversions: usize,
}

/// Distinct values of the first two fields stand for users and items.
/// Conversions are the summed CVR labels, which counts positives for hard
/// labels and gives the expected count for soft ones.
pub fn dataset_stats(d: &Dataset) -> DatasetStats {
    let distinct = |f: usize| -> usize {
        d.task_samples(Task::Ctr)
            .filter_map(|s| s.feature_ids.get(f))
            .collect::<HashSet<_>>()
            .len()
    };
    DatasetStats {
        users: distinct(0),
        items: distinct(1),
        impressions: d.count(Task::Ctr),
        clicks: d.clicks(),
        conversions: d.task_samples(Task::Cvr).map(|s| s.label).sum::<f64>().round() as usize,
    }
}

pub fn stats_table(d: &Dataset) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:>8} {:>8} {:>12} {:>8} {:>12}",
        "Dataset", "#User", "#Item", "#Impression", "#Click", "#Conversion"
    );
    let mut row = |name: &str, s: DatasetStats| {
        let _ = writeln!(
            out,
            "{:<12} {:>8} {:>8} {:>12} {:>8} {:>12}",
            name, s.users, s.items, s.impressions, s.clicks, s.conversions
        );
    };
    row("all", dataset_stats(d));
    for split in [Split::Train, Split::Validation, Split::Test] {
        row(split.name(), dataset_stats(&d.split(split)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(mode: SharingMode, mse: Option<f64>, auc: Option<f64>) -> MetricsReport {
        let mut r = MetricsReport::new(mode, "x");
        r.cvr_mse = mse;
        r.ctr_auc = auc;
        r
    }

    #[test]
    fn self_comparison_has_zero_gain() {
        let r = report(SharingMode::SingleTask, Some(0.1), Some(0.7));
        let t = comparison_table(&[r.clone(), r]).unwrap();
        assert_eq!(t.matches("+0.00000 (+0.00%)").count(), 4);
    }

    #[test]
    fn missing_metric_gives_na_and_missing_base_errors() {
        let t = comparison_table(&[
            report(SharingMode::SingleTask, Some(0.1), Some(0.7)),
            report(SharingMode::LayerShare, Some(0.09), None),
        ])
        .unwrap();
        let last = t.lines().last().unwrap();
        assert!(last.contains("n/a") && last.contains("+0.01000 (+10.00%)"), "{t}");
        assert!(comparison_table(&[report(SharingMode::LayerShare, None, None)]).is_err());
    }
}
