use lotshare_core::data::Batch;
use lotshare_core::masking::{MaskLayer, TaskMask};
use lotshare_core::model::{cross_width, CrossKind, Model, ModelConfig, Sample, SharingMode};
use lotshare_core::nn::RngSeed;
use lotshare_core::training::loss_and_grads;
use lotshare_core::Task;
use rand::Rng;

fn config(mode: SharingMode, cross: CrossKind) -> ModelConfig {
    let cards = vec![5, 4, 3];
    let d = 3;
    let input = cross_width(cards.len(), d, cross);
    let (mlp_dims, tower_dims) = match mode {
        SharingMode::LayerShare => (vec![input, 6], vec![6, 4, 1]),
        _ => (vec![input, 6, 4, 1], Vec::new()),
    };
    ModelConfig {
        field_cardinalities: cards,
        embedding_dim: d,
        mlp_dims,
        tower_dims,
        cross_kind: cross,
        sharing_mode: mode,
    }
}

fn random_samples(task: Task, n: usize, seed: u64) -> Vec<Sample> {
    let mut rng = RngSeed(seed).rng();
    (0..n)
        .map(|i| {
            let ids = vec![rng.gen_range(0..5), rng.gen_range(0..4), rng.gen_range(0..3)];
            let label = match task {
                Task::Ctr => f64::from(rng.gen_bool(0.4) as u8),
                Task::Cvr => rng.gen(),
            };
            Sample::new(i as u64, task, label, ids)
        })
        .collect()
}

fn random_mask(cfg: &ModelConfig, task: Task, seed: u64) -> TaskMask {
    let mut rng = RngSeed(seed).rng();
    let layers = cfg
        .trunk_shapes()
        .into_iter()
        .map(|(r, c)| {
            let bits = (0..r * c).map(|_| rng.gen_bool(0.7)).collect();
            MaskLayer::from_bits(r, c, bits).unwrap()
        })
        .collect();
    TaskMask::new(layers, task, 0)
}

/// Largest relative error between backprop and central differences.
fn max_rel_error(model: &mut Model<f64>, batch: &Batch<'_>, mask: Option<&TaskMask>) -> f64 {
    let (_, grads) = loss_and_grads(model, batch, mask, 1.0).unwrap();
    let analytic = grads.flatten();
    let h = 1e-4;
    let mut worst = 0.0f64;
    for (k, &a) in analytic.iter().enumerate() {
        let bump = |m: &mut Model<f64>, delta: f64| {
            let mut idx = k;
            for (_, block) in m.params.blocks_mut() {
                if idx < block.len() {
                    block[idx] += delta;
                    return;
                }
                idx -= block.len();
            }
        };
        bump(model, h);
        let up = loss_and_grads(model, batch, mask, 1.0).unwrap().0;
        bump(model, -2.0 * h);
        let down = loss_and_grads(model, batch, mask, 1.0).unwrap().0;
        bump(model, h);
        let numeric = (up - down) / (2.0 * h);
        let scale = a.abs().max(numeric.abs()).max(1e-7);
        worst = worst.max((a - numeric).abs() / scale);
    }
    worst
}

#[test]
fn backprop_matches_finite_differences_in_every_mode() {
    for mode in SharingMode::ALL {
        for cross in [CrossKind::None, CrossKind::PairwiseDot, CrossKind::PairwiseProduct] {
            for task in Task::ALL {
                let cfg = config(mode, cross);
                let mut model: Model<f64> = Model::new(cfg.clone(), RngSeed(17)).unwrap();
                for b in model.params.biases.iter_mut().flatten() {
                    *b = 0.05;
                }
                let samples = random_samples(task, 9, 3);
                let batch = Batch { task, samples: samples.iter().collect() };
                let mask = mode.uses_masks().then(|| random_mask(&cfg, task, 5));
                let err = max_rel_error(&mut model, &batch, mask.as_ref());
                assert!(err < 1e-3, "{mode} {cross:?} {task}: {err}");
            }
        }
    }
}
