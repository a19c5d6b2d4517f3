//! `train` and `prune-sweep`: run directories, artifacts and reports.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use lotshare_core::data::{generate, load_dataset, Dataset, Split};
use lotshare_core::masking::{overlap_stats, save_mask, TaskMask};
use lotshare_core::metrics::MetricsReport;
use lotshare_core::model::{save_checkpoint, ModelConfig};
use lotshare_core::nn::Scalar;
use lotshare_core::training::{
    evaluate, generate_masks, init_model, train, warmup, MaskSearch, ProgressRecord, Trained,
};
use lotshare_core::Task;

use crate::config::{ExperimentConfig, Precision};
use crate::error::{as_data, CliError, CliResult};

/// Loads `data.path` when set, otherwise generates from the synthetic spec.
pub fn load_data(cfg: &ExperimentConfig) -> CliResult<Dataset> {
    match &cfg.data_path {
        Some(p) => load_dataset(p).map_err(|e| as_data(e).context(p.display())),
        None => generate(&cfg.synthetic).map_err(|e| CliError::config(e.to_string())),
    }
}

pub struct Splits {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
}

impl Splits {
    pub fn of(d: &Dataset) -> Self {
        Splits {
            train: d.split(Split::Train),
            validation: d.split(Split::Validation),
            test: d.split(Split::Test),
        }
    }

    pub fn get(&self, split: Split) -> &Dataset {
        match split {
            Split::Train => &self.train,
            Split::Validation => &self.validation,
            Split::Test => &self.test,
        }
    }
}

/// Creates the run directory and records the configuration: the source
/// text verbatim (when the run came from a file) and the resolved values.
pub fn prepare_run_dir(cfg: &ExperimentConfig, source: Option<&str>) -> CliResult<PathBuf> {
    let dir = cfg.output_dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| CliError::data(format!("cannot create {}: {e}", dir.display())))?;
    if let Some(text) = source {
        std::fs::write(dir.join("config.conf"), text)?;
    }
    std::fs::write(dir.join("resolved.conf"), cfg.to_text())?;
    Ok(dir)
}

/// Writes each progress record to a log file and forwards it.
struct LogSink<'a> {
    file: BufWriter<File>,
    echo: &'a mut dyn FnMut(&str),
    error: Option<std::io::Error>,
}

impl<'a> LogSink<'a> {
    fn create(path: &Path, echo: &'a mut dyn FnMut(&str)) -> CliResult<Self> {
        Ok(LogSink {
            file: BufWriter::new(File::create(path)?),
            echo,
            error: None,
        })
    }

    fn record(&mut self, r: &ProgressRecord) {
        let line = r.to_string();
        if let Err(e) = writeln!(self.file, "{line}") {
            self.error.get_or_insert(e);
        }
        (self.echo)(&line);
    }

    fn finish(mut self) -> CliResult<()> {
        if let Some(e) = self.error.take() {
            return Err(e.into());
        }
        self.file.flush()?;
        Ok(())
    }
}

fn model_config(cfg: &ExperimentConfig, data: &Dataset) -> CliResult<ModelConfig> {
    if data.field_cardinalities.is_empty() {
        return Err(CliError::data("dataset has no fields"));
    }
    cfg.model.model_config(data.field_cardinalities.clone())
}

/// Result of `train`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub dir: PathBuf,
    pub report: MetricsReport,
}

/// Runs the configured sharing mode end to end and writes its artifacts.
pub fn run_train(cfg: &ExperimentConfig, source: Option<&str>, echo: &mut dyn FnMut(&str)) -> CliResult<TrainOutcome> {
    cfg.validate()?;
    let data = load_data(cfg)?;
    let mc = model_config(cfg, &data)?;
    let splits = Splits::of(&data);
    let dir = prepare_run_dir(cfg, source)?;
    let report = match cfg.precision {
        Precision::F64 => train_as::<f64>(cfg, &mc, &splits, &dir, echo)?,
        Precision::F32 => train_as::<f32>(cfg, &mc, &splits, &dir, echo)?,
    };
    std::fs::write(dir.join("report.kv"), report.to_kv())?;
    std::fs::write(dir.join("report.txt"), report.to_string())?;
    Ok(TrainOutcome { dir, report })
}

fn train_as<T: Scalar>(
    cfg: &ExperimentConfig,
    mc: &ModelConfig,
    splits: &Splits,
    dir: &Path,
    echo: &mut dyn FnMut(&str),
) -> CliResult<MetricsReport> {
    let mut sink = LogSink::create(&dir.join("train.log"), echo)?;
    let trained = train::<T>(mc, &splits.train, &splits.validation, &cfg.train, &mut |r| sink.record(r));
    sink.finish()?;
    let trained = trained?;

    let eval_split = splits.get(cfg.report_split);
    let scores = evaluate(&trained, eval_split)?;
    let mut report = MetricsReport::new(mc.sharing_mode, cfg.fingerprint());
    report.ctr_auc = Some(scores[Task::Ctr.index()]);
    report.cvr_mse = Some(scores[Task::Cvr.index()]);
    report.notes.insert("report_split".into(), cfg.report_split.name().into());
    report.notes.insert("precision".into(), cfg.precision.name().into());
    report.notes.insert("activation".into(), "relu".into());
    report.notes.insert("train_impressions".into(), splits.train.count(Task::Ctr).to_string());
    report.notes.insert("train_cvr_samples".into(), splits.train.count(Task::Cvr).to_string());
    report.notes.insert("eval_impressions".into(), eval_split.count(Task::Ctr).to_string());
    report.notes.insert("eval_cvr_samples".into(), eval_split.count(Task::Cvr).to_string());

    match &trained {
        Trained::SingleTask { ctr, cvr } => {
            save_checkpoint(ctr, &dir.join("ctr_model.ltck"))?;
            save_checkpoint(cvr, &dir.join("cvr_model.ltck"))?;
        }
        Trained::LayerShare(m) => {
            save_checkpoint(m, &dir.join("ctr_model.ltck"))?;
            save_checkpoint(m, &dir.join("cvr_model.ltck"))?;
        }
        Trained::Masked(a) => {
            save_checkpoint(&a.model, &dir.join("shared.ltck"))?;
            for task in Task::ALL {
                save_checkpoint(&a.task_model(task)?, &dir.join(format!("{}_model.ltck", task.name())))?;
            }
            write_masks(dir, &a.searches)?;
            std::fs::write(dir.join("sweep.csv"), sweep_csv(&a.searches))?;
            let (ctr, cvr) = (a.mask(Task::Ctr), a.mask(Task::Cvr));
            report.ctr_density = Some(ctr.density());
            report.cvr_density = Some(cvr.density());
            report.ctr_best_round = Some(a.searches[0].best as u32);
            report.cvr_best_round = Some(a.searches[1].best as u32);
            report.overlap = Some(overlap_stats(ctr, cvr)?.totals);
            report.notes.insert("optimizer_reset".into(), "every_rewind".into());
            report.notes.insert("quantile_pool".into(), "all_layers_surviving".into());
        }
    }
    Ok(report)
}

/// Every candidate mask under `masks/`, plus the selected ones at the top.
fn write_masks(dir: &Path, searches: &[MaskSearch]) -> CliResult<()> {
    let mdir = dir.join("masks");
    std::fs::create_dir_all(&mdir)?;
    for s in searches {
        for (round, m) in s.masks.iter().enumerate() {
            save_mask(m, &mdir.join(format!("{}_round{round}.ltmk", s.task.name())))?;
        }
        save_mask(s.best_mask(), &dir.join(format!("{}_mask.ltmk", s.task.name())))?;
    }
    Ok(())
}

/// Proportion of connections a mask keeps.
pub fn proportion_left(mask: &TaskMask) -> f64 {
    mask.density()
}

/// `task,round,proportion,survivors,metric,value` rows, one per task and round.
pub fn sweep_csv(searches: &[MaskSearch]) -> String {
    let mut out = String::from("task,round,proportion,survivors,metric,value\n");
    for s in searches {
        let metric = if s.task == Task::Ctr { "val_auc" } else { "val_mse" };
        for (round, (m, v)) in s.masks.iter().zip(&s.scores).enumerate() {
            let _ = writeln!(
                out,
                "{},{round},{:?},{},{metric},{v:?}",
                s.task.name(),
                proportion_left(m),
                m.survivors()
            );
        }
    }
    out
}

/// Result of `prune-sweep`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub dir: PathBuf,
    pub searches: Vec<MaskSearch>,
    /// `key=value` lines, one per task and round.
    pub lines: Vec<String>,
}

/// Warmup plus mask generation only, recording the per-round curve.
pub fn run_prune_sweep(cfg: &ExperimentConfig, source: Option<&str>, echo: &mut dyn FnMut(&str)) -> CliResult<SweepOutcome> {
    cfg.validate()?;
    if !cfg.model.mode.uses_masks() {
        return Err(CliError::config(format!(
            "prune-sweep needs connection_share or neuron_share, not {}",
            cfg.model.mode
        )));
    }
    let data = load_data(cfg)?;
    let mc = model_config(cfg, &data)?;
    let splits = Splits::of(&data);
    let dir = prepare_run_dir(cfg, source)?;
    let searches = match cfg.precision {
        Precision::F64 => sweep_as::<f64>(cfg, &mc, &splits, &dir, echo)?,
        Precision::F32 => sweep_as::<f32>(cfg, &mc, &splits, &dir, echo)?,
    };
    write_masks(&dir, &searches)?;
    std::fs::write(dir.join("sweep.csv"), sweep_csv(&searches))?;
    let mut lines = Vec::new();
    for s in &searches {
        let metric = if s.task == Task::Ctr { "val_auc" } else { "val_mse" };
        for (round, (m, v)) in s.masks.iter().zip(&s.scores).enumerate() {
            lines.push(format!(
                "task={} round={round} proportion={:.6} survivors={} {metric}={v:.5}",
                s.task.name(),
                proportion_left(m),
                m.survivors()
            ));
        }
        lines.push(format!("task={} best_round={}", s.task.name(), s.best));
    }
    Ok(SweepOutcome { dir, searches, lines })
}

fn sweep_as<T: Scalar>(
    cfg: &ExperimentConfig,
    mc: &ModelConfig,
    splits: &Splits,
    dir: &Path,
    echo: &mut dyn FnMut(&str),
) -> CliResult<Vec<MaskSearch>> {
    let mut sink = LogSink::create(&dir.join("sweep.log"), echo)?;
    let result = (|| {
        let mut model = init_model::<T>(mc, &cfg.train)?;
        warmup(&mut model, &splits.train, &cfg.train, &mut |r| sink.record(r))?;
        generate_masks(&mut model, &splits.train, &splits.validation, &cfg.train, &mut |r| sink.record(r))
    })();
    sink.finish()?;
    Ok(result?)
}
