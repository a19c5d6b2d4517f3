use crate::data::{batches, Dataset, TaskFilter};
use crate::error::{Error, Result};
use crate::masking::{prune_connections, prune_neurons, TaskMask};
use crate::metrics::{auc, log_loss, mse};
use crate::model::{Model, ModelConfig, ModelParams, Sample, SharingMode};
use crate::nn::{RngSeed, Scalar};
use crate::task::Task;

use super::loss::loss_and_grads;
use super::optimizer::ModelOptimizer;
use super::progress::{Progress, ProgressRecord};
use super::TrainConfig;

const SEED_INIT: u64 = 1;
const SEED_WARMUP: u64 = 2;
const SEED_MASK: u64 = 3;
const SEED_JOINT: u64 = 4;
const SEED_BASELINE: u64 = 5;

const EVAL_CHUNK: usize = 4096;

/// Candidate masks of one task, their validation scores and the pick.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskSearch {
    pub task: Task,
    /// Round `i` holds the mask after `i` prunings; round 0 is all ones.
    pub masks: Vec<TaskMask>,
    /// AUC for CTR, MSE for CVR.
    pub scores: Vec<f64>,
    pub best: usize,
}

impl MaskSearch {
    pub fn best_mask(&self) -> &TaskMask {
        &self.masks[self.best]
    }
}

/// Index of the best score: highest AUC for CTR, lowest MSE for CVR. Ties
/// go to the earliest round.
pub fn select_best(task: Task, scores: &[f64]) -> Result<usize> {
    if scores.is_empty() {
        return Err(Error::invalid("no validation scores to select from"));
    }
    let better = |a: f64, b: f64| match task {
        Task::Ctr => a > b,
        Task::Cvr => a < b,
    };
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if better(s, scores[best]) {
            best = i;
        }
    }
    Ok(best)
}

/// Output of the masked sharing pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedArtifacts<T> {
    /// Final shared parameters; the snapshot is the post-warmup state.
    pub model: Model<T>,
    /// Indexed by [`Task::index`].
    pub searches: Vec<MaskSearch>,
}

impl<T: Scalar> TrainedArtifacts<T> {
    pub fn mask(&self, task: Task) -> &TaskMask {
        self.searches[task.index()].best_mask()
    }

    /// `params ⊙ mask[task]` as a standalone network.
    pub fn task_model(&self, task: Task) -> Result<Model<T>> {
        self.model.masked_copy(self.mask(task))
    }
}

/// A trained model of any sharing mode.
#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum Trained<T> {
    SingleTask { ctr: Model<T>, cvr: Model<T> },
    LayerShare(Model<T>),
    Masked(TrainedArtifacts<T>),
}

impl<T: Scalar> Trained<T> {
    pub fn mode(&self) -> SharingMode {
        match self {
            Trained::SingleTask { .. } => SharingMode::SingleTask,
            Trained::LayerShare(_) => SharingMode::LayerShare,
            Trained::Masked(a) => a.model.mode(),
        }
    }

    pub fn predict(&self, task: Task, samples: &[&Sample]) -> Result<Vec<T>> {
        let (model, mask) = self.parts(task);
        predict_chunked(model, samples, mask, task)
    }

    /// Network and mask used for `task`.
    pub fn parts(&self, task: Task) -> (&Model<T>, Option<&TaskMask>) {
        match self {
            Trained::SingleTask { ctr, cvr } => (if task == Task::Ctr { ctr } else { cvr }, None),
            Trained::LayerShare(m) => (m, None),
            Trained::Masked(a) => (&a.model, Some(a.mask(task))),
        }
    }
}

fn predict_chunked<T: Scalar>(model: &Model<T>, samples: &[&Sample], mask: Option<&TaskMask>, task: Task) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(samples.len());
    for chunk in samples.chunks(EVAL_CHUNK) {
        out.extend(model.forward(chunk, mask, task)?);
    }
    Ok(out)
}

/// Validation score of `task`: AUC for CTR, MSE for CVR.
pub fn evaluate_task<T: Scalar>(model: &Model<T>, data: &Dataset, task: Task, mask: Option<&TaskMask>) -> Result<f64> {
    let samples: Vec<&Sample> = data.task_samples(task).collect();
    if samples.is_empty() {
        return Err(Error::invalid(format!("no {task} samples to evaluate")));
    }
    let preds = predict_chunked(model, &samples, mask, task)?;
    score(task, &samples, &preds)
}

pub(crate) fn score<T: Scalar>(task: Task, samples: &[&Sample], preds: &[T]) -> Result<f64> {
    match task {
        Task::Ctr => {
            let labels: Vec<bool> = samples.iter().map(|s| s.label > 0.5).collect();
            auc(&labels, preds)
        }
        Task::Cvr => {
            let labels: Vec<f64> = samples.iter().map(|s| s.label).collect();
            let p: Vec<f64> = preds.iter().map(|v| v.to_f64_lossy()).collect();
            mse(&labels, &p)
        }
    }
}

/// Scores of both tasks for any trained model.
pub fn evaluate<T: Scalar>(trained: &Trained<T>, data: &Dataset) -> Result<[f64; 2]> {
    let mut out = [0.0; 2];
    for task in Task::ALL {
        let (model, mask) = trained.parts(task);
        out[task.index()] = evaluate_task(model, data, task, mask)?;
    }
    Ok(out)
}

/// One pass over `data` for the tasks in `filter`. Returns the mean
/// weighted batch loss.
#[allow(clippy::too_many_arguments)]
fn run_epoch<T: Scalar>(
    model: &mut Model<T>,
    optimizer: &mut ModelOptimizer<T>,
    data: &Dataset,
    filter: TaskFilter,
    masks: [Option<&TaskMask>; 2],
    weights: [f64; 2],
    lr: f64,
    batch_size: usize,
    seed: RngSeed,
    epoch: u64,
) -> Result<f64> {
    let stream = batches(data, filter, batch_size, seed, epoch)?;
    let mut total = 0.0;
    for batch in &stream {
        let t = batch.task.index();
        let (loss, grads) = loss_and_grads(model, batch, masks[t], weights[t])?;
        optimizer.step_model(model, &grads, batch.task, masks[t], lr)?;
        total += loss.to_f64_lossy();
    }
    if !model.params.is_finite() {
        return Err(Error::state("parameters became non-finite"));
    }
    Ok(if stream.is_empty() { 0.0 } else { total / stream.len() as f64 })
}

fn require_samples(data: &Dataset, tasks: &[Task]) -> Result<()> {
    if data.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    for &task in tasks {
        if data.count(task) == 0 {
            return Err(Error::invalid(format!("training set has no {task} samples")));
        }
    }
    Ok(())
}

fn weights(config: &TrainConfig) -> [f64; 2] {
    [config.omega_ctr, config.omega_cvr]
}

/// Fresh model for `config`, initialized from the training seed.
pub fn init_model<T: Scalar>(model_config: &ModelConfig, config: &TrainConfig) -> Result<Model<T>> {
    Model::new(model_config.clone(), config.rng_seed().derive(SEED_INIT))
}

/// Trains unmasked on interleaved batches with the weighted joint loss,
/// then freezes the result as the rewind snapshot.
pub fn warmup<T: Scalar>(model: &mut Model<T>, train: &Dataset, config: &TrainConfig, progress: Progress<'_>) -> Result<()> {
    config.validate()?;
    require_samples(train, &[])?;
    let mut opt = ModelOptimizer::new(&model.params, config.adam);
    let seed = config.rng_seed().derive(SEED_WARMUP);
    for epoch in 0..config.warmup_epochs {
        let loss = run_epoch(
            model,
            &mut opt,
            train,
            TaskFilter::Both,
            [None, None],
            weights(config),
            config.learning_rate,
            config.batch_size,
            seed,
            epoch as u64,
        )?;
        progress(&ProgressRecord::new("warmup").with("epoch", epoch).with("loss", loss));
    }
    model.freeze_snapshot()
}

fn prune<T: Scalar>(model: &Model<T>, mask: &TaskMask, q: f64) -> Result<TaskMask> {
    match model.mode() {
        SharingMode::ConnectionShare => prune_connections(&model.params, mask, q),
        SharingMode::NeuronShare => prune_neurons(&model.params, mask, q),
        other => Err(Error::invalid(format!("{other} mode does not prune"))),
    }
}

/// Iterative magnitude pruning with rewind, independently per task.
///
/// Round `i` trains `mask_epochs` epochs of the task's samples from the
/// snapshot under mask `i` with a fresh optimizer, scores the result on
/// validation and, unless it is the last round, prunes to obtain mask
/// `i + 1`. Weights are rewound after every round, so on return the live
/// parameters equal the snapshot.
pub fn generate_masks<T: Scalar>(
    model: &mut Model<T>,
    train: &Dataset,
    validation: &Dataset,
    config: &TrainConfig,
    progress: Progress<'_>,
) -> Result<Vec<MaskSearch>> {
    config.validate()?;
    if model.init_snapshot().is_none() {
        return Err(Error::state("mask generation requires a frozen snapshot"));
    }
    if !model.mode().uses_masks() {
        return Err(Error::invalid(format!("{} mode does not use masks", model.mode())));
    }
    require_samples(train, &Task::ALL)?;
    let mut searches = Vec::with_capacity(2);
    for task in Task::ALL {
        let seed = config.rng_seed().derive2(SEED_MASK, task.index() as u64);
        let mut mask = TaskMask::all_ones(model.config(), task);
        let mut masks = Vec::new();
        let mut scores = Vec::new();
        for round in 0..=config.n_pruning {
            model.rewind()?;
            progress(&rewind_record(model, task, round));
            let mut opt = ModelOptimizer::new(&model.params, config.adam);
            let mut masks_arg = [None, None];
            masks_arg[task.index()] = Some(&mask);
            for e in 0..config.mask_epochs {
                let epoch = round as u64 * config.mask_epochs as u64 + e as u64;
                run_epoch(
                    model,
                    &mut opt,
                    train,
                    TaskFilter::Only(task),
                    masks_arg,
                    [1.0, 1.0],
                    config.learning_rate,
                    config.batch_size,
                    seed,
                    epoch,
                )?;
            }
            let s = evaluate_task(model, validation, task, Some(&mask))?;
            progress(
                &ProgressRecord::new("mask")
                    .with("task", task)
                    .with("round", round)
                    .with("density", format!("{:.6}", mask.density()))
                    .with("survivors", mask.survivors())
                    .with(if task == Task::Ctr { "val_auc" } else { "val_mse" }, s)
                    .with("fingerprint", format!("{:016x}", model.params.fingerprint())),
            );
            scores.push(s);
            let next = if round < config.n_pruning {
                Some(prune(model, &mask, config.q)?)
            } else {
                None
            };
            masks.push(mask.clone());
            if let Some(n) = next {
                mask = n;
            }
        }
        model.rewind()?;
        progress(&rewind_record(model, task, config.n_pruning + 1));
        let best = select_best(task, &scores)?;
        progress(&ProgressRecord::new("select").with("task", task).with("best_round", best));
        searches.push(MaskSearch {
            task,
            masks,
            scores,
            best,
        });
    }
    Ok(searches)
}

/// Weighted held-out objective: `Σ ω_task · loss_task` with log loss for
/// CTR and squared error for CVR, over the tasks present in `data`.
pub fn validation_objective<T: Scalar>(
    model: &Model<T>,
    data: &Dataset,
    masks: [Option<&TaskMask>; 2],
    weights: [f64; 2],
) -> Result<f64> {
    let mut total = 0.0;
    for task in Task::ALL {
        let samples: Vec<&Sample> = data.task_samples(task).collect();
        if samples.is_empty() {
            continue;
        }
        let preds: Vec<f64> = predict_chunked(model, &samples, masks[task.index()], task)?
            .iter()
            .map(|v| v.to_f64_lossy())
            .collect();
        let labels: Vec<f64> = samples.iter().map(|s| s.label).collect();
        let loss = match task {
            Task::Ctr => log_loss(&labels, &preds)?,
            Task::Cvr => mse(&labels, &preds)?,
        };
        total += weights[task.index()] * loss;
    }
    Ok(total)
}

struct Fit<'a> {
    stage: &'static str,
    task: Option<Task>,
    filter: TaskFilter,
    masks: [Option<&'a TaskMask>; 2],
    weights: [f64; 2],
    seed: RngSeed,
}

/// `epochs` passes with a fresh optimizer. With a validation set each
/// epoch is scored and, if `select_epoch` is on, the best epoch's
/// parameters are restored at the end.
fn fit<T: Scalar>(
    model: &mut Model<T>,
    fit: &Fit<'_>,
    train: &Dataset,
    validation: Option<&Dataset>,
    epochs: u32,
    config: &TrainConfig,
    progress: Progress<'_>,
) -> Result<()> {
    let mut opt = ModelOptimizer::new(&model.params, config.adam);
    let mut best: Option<(f64, u32, ModelParams<T>)> = None;
    for epoch in 0..epochs {
        let loss = run_epoch(
            model,
            &mut opt,
            train,
            fit.filter,
            fit.masks,
            fit.weights,
            config.learning_rate,
            config.batch_size,
            fit.seed,
            epoch as u64,
        )?;
        let mut rec = ProgressRecord::new(fit.stage);
        if let Some(t) = fit.task {
            rec = rec.with("task", t);
        }
        rec = rec.with("epoch", epoch).with("loss", loss);
        if let Some(v) = validation {
            for task in Task::ALL {
                let wanted = match fit.filter {
                    TaskFilter::Only(t) => t == task,
                    TaskFilter::Both => true,
                };
                if wanted && v.count(task) > 0 {
                    let key = if task == Task::Ctr { "val_auc" } else { "val_mse" };
                    rec = rec.with(key, evaluate_task(model, v, task, fit.masks[task.index()])?);
                }
            }
            let objective = validation_objective(model, v, fit.masks, fit.weights)?;
            rec = rec.with("val_objective", objective);
            if config.select_epoch && best.as_ref().is_none_or(|(b, _, _)| objective < *b) {
                best = Some((objective, epoch, model.params.clone()));
            }
        }
        progress(&rec);
    }
    if let Some((_, epoch, params)) = best {
        model.params = params;
        let mut rec = ProgressRecord::new(fit.stage);
        if let Some(t) = fit.task {
            rec = rec.with("task", t);
        }
        progress(&rec.with("selected_epoch", epoch));
    }
    Ok(())
}

fn rewind_record<T: Scalar>(model: &Model<T>, task: Task, round: u32) -> ProgressRecord {
    ProgressRecord::new("rewind")
        .with("task", task)
        .with("round", round)
        .with("fingerprint", format!("{:016x}", model.params.fingerprint()))
}

/// Restarts from the snapshot and trains on interleaved batches, each
/// under its task's selected mask.
pub fn joint_train<T: Scalar>(
    model: &mut Model<T>,
    searches: Vec<MaskSearch>,
    train: &Dataset,
    validation: Option<&Dataset>,
    config: &TrainConfig,
    progress: Progress<'_>,
) -> Result<TrainedArtifacts<T>> {
    config.validate()?;
    for task in Task::ALL {
        match searches.get(task.index()) {
            Some(s) if s.task == task && s.best < s.masks.len() => {}
            _ => return Err(Error::state(format!("no selected mask for {task}"))),
        }
    }
    require_samples(train, &[])?;
    model.rewind()?;
    let masks = [searches[0].best_mask(), searches[1].best_mask()];
    for m in masks {
        m.check_config(model.config())?;
    }
    let spec = Fit {
        stage: "joint",
        task: None,
        filter: TaskFilter::Both,
        masks: [Some(masks[0]), Some(masks[1])],
        weights: weights(config),
        seed: config.rng_seed().derive(SEED_JOINT),
    };
    fit(model, &spec, train, validation, config.joint_epochs, config, progress)?;
    Ok(TrainedArtifacts {
        model: model.clone(),
        searches,
    })
}

/// Single-task (two independent networks) or layer-share baseline.
pub fn train_baseline<T: Scalar>(
    model_config: &ModelConfig,
    train: &Dataset,
    validation: Option<&Dataset>,
    config: &TrainConfig,
    progress: Progress<'_>,
) -> Result<Trained<T>> {
    config.validate()?;
    let seed = config.rng_seed().derive(SEED_BASELINE);
    match model_config.sharing_mode {
        SharingMode::SingleTask => {
            require_samples(train, &Task::ALL)?;
            let mut nets = Vec::with_capacity(2);
            for task in Task::ALL {
                let mut model = init_model::<T>(model_config, config)?;
                let spec = Fit {
                    stage: "single_task",
                    task: Some(task),
                    filter: TaskFilter::Only(task),
                    masks: [None, None],
                    weights: [1.0, 1.0],
                    seed: seed.derive(task.index() as u64),
                };
                fit(&mut model, &spec, train, validation, config.baseline_epochs, config, progress)?;
                nets.push(model);
            }
            let cvr = nets.pop().ok_or_else(|| Error::state("missing CVR network"))?;
            let ctr = nets.pop().ok_or_else(|| Error::state("missing CTR network"))?;
            Ok(Trained::SingleTask { ctr, cvr })
        }
        SharingMode::LayerShare => {
            require_samples(train, &[])?;
            let mut model = init_model::<T>(model_config, config)?;
            let spec = Fit {
                stage: "layer_share",
                task: None,
                filter: TaskFilter::Both,
                masks: [None, None],
                weights: weights(config),
                seed,
            };
            fit(&mut model, &spec, train, validation, config.baseline_epochs, config, progress)?;
            Ok(Trained::LayerShare(model))
        }
        other => Err(Error::invalid(format!("{other} is not a baseline mode"))),
    }
}

/// Runs the full pipeline for `model_config.sharing_mode`.
pub fn train<T: Scalar>(
    model_config: &ModelConfig,
    train: &Dataset,
    validation: &Dataset,
    config: &TrainConfig,
    progress: Progress<'_>,
) -> Result<Trained<T>> {
    if !model_config.sharing_mode.uses_masks() {
        return train_baseline(model_config, train, Some(validation), config, progress);
    }
    let mut model = init_model::<T>(model_config, config)?;
    warmup(&mut model, train, config, progress)?;
    let searches = generate_masks(&mut model, train, validation, config, progress)?;
    joint_train(&mut model, searches, train, Some(validation), config, progress).map(Trained::Masked)
}
