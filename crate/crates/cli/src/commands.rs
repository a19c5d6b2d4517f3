//! `generate-data`, `compare` and `mask stats`.

use std::path::{Path, PathBuf};

use lotshare_core::data::{generate, save_dataset, sidecar_path};
use lotshare_core::masking::{load_mask, overlap_stats};
use lotshare_core::metrics::MetricsReport;
use lotshare_core::Task;

use crate::config::ExperimentConfig;
use crate::error::{as_data, CliError, CliResult};
use crate::table::{comparison_table, dataset_stats, stats_table};

/// Generates the synthetic dataset, writes it with its sidecar spec and
/// returns the statistics text.
pub fn generate_data(cfg: &ExperimentConfig, out: Option<&Path>) -> CliResult<(PathBuf, String)> {
    let path = out.map_or_else(|| cfg.output_dir.join("data.tsv"), Path::to_path_buf);
    let data = generate(&cfg.synthetic).map_err(|e| CliError::config(e.to_string()))?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::data(format!("cannot create {}: {e}", parent.display())))?;
    }
    save_dataset(&data, &path)?;
    cfg.synthetic.save(&sidecar_path(&path))?;
    let s = dataset_stats(&data);
    let mut text = stats_table(&data);
    text.push_str(&format!(
        "impressions={} clicks={} conversions={} path={}\n",
        s.impressions,
        s.clicks,
        s.conversions,
        path.display()
    ));
    Ok((path, text))
}

/// Accepts run directories or report files.
pub fn read_report(path: &Path) -> CliResult<MetricsReport> {
    let file = if path.is_dir() { path.join("report.kv") } else { path.to_path_buf() };
    let text = std::fs::read_to_string(&file).map_err(|e| CliError::data(format!("{}: {e}", file.display())))?;
    MetricsReport::from_kv(&text).map_err(|e| as_data(e).context(file.display()))
}

pub fn compare(paths: &[PathBuf]) -> CliResult<String> {
    let reports = paths.iter().map(|p| read_report(p)).collect::<CliResult<Vec<_>>>()?;
    comparison_table(&reports)
}

pub fn mask_stats(ctr: &Path, cvr: &Path) -> CliResult<String> {
    let a = load_mask(ctr).map_err(|e| as_data(e).context(ctr.display()))?;
    let b = load_mask(cvr).map_err(|e| as_data(e).context(cvr.display()))?;
    if a.task != Task::Ctr || b.task != Task::Cvr {
        return Err(CliError::data(format!(
            "expected a CTR mask then a CVR mask, got {} and {}",
            a.task, b.task
        )));
    }
    let stats = overlap_stats(&a, &b).map_err(as_data)?;
    let mut out = stats.to_string();
    out.push_str(&format!(
        "ctr.round={} ctr.density={:.6} cvr.round={} cvr.density={:.6}\n",
        a.pruning_round,
        a.density(),
        b.pruning_round,
        b.density()
    ));
    for line in stats.to_kv_lines("overlap.") {
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}
