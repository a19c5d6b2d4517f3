mod common;

use std::collections::HashSet;

use lotshare_core::data::{
    batches, generate, generate_traced, load_dataset, save_dataset, sidecar_path, Dataset, Split, SyntheticSpec,
    TaskFilter,
};
use lotshare_core::model::Sample;
use lotshare_core::nn::RngSeed;
use lotshare_core::Task;
use proptest::prelude::*;

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

#[test]
fn task_correlation_is_monotone_in_rho() {
    for seed in [1, 2, 3] {
        let mut last = -1.0;
        for step in 0..=10 {
            let rho = step as f64 / 10.0;
            let spec = SyntheticSpec {
                n_impressions: 12_000,
                task_correlation: rho,
                seed,
                ..SyntheticSpec::default()
            };
            let (_, traces) = generate_traced(&spec).unwrap();
            let c: Vec<f64> = traces.iter().map(|t| t.click_logit).collect();
            let v: Vec<f64> = traces.iter().map(|t| t.conversion_logit).collect();
            let r = pearson(&c, &v).abs();
            assert!(r >= last, "seed {seed} rho {rho}: {r} < {last}");
            last = r;
        }
    }
}

fn assert_nested(d: &Dataset) {
    let clicks: HashSet<(u64, Vec<usize>)> = d
        .task_samples(Task::Ctr)
        .filter(|s| s.label == 1.0)
        .map(|s| (s.impression_id, s.feature_ids.clone()))
        .collect();
    for s in d.task_samples(Task::Cvr) {
        assert!(clicks.contains(&(s.impression_id, s.feature_ids.clone())));
    }
    assert_eq!(d.count(Task::Cvr), d.clicks());
}

#[test]
fn generated_and_loaded_datasets_are_nested() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..4 {
        let spec = common::tiny_spec(seed);
        let d = generate(&spec).unwrap();
        assert_nested(&d);
        let path = dir.path().join(format!("d{seed}.tsv"));
        save_dataset(&d, &path).unwrap();
        let back = load_dataset(&path).unwrap();
        assert_eq!(back, d);
        assert_nested(&back);
        for split in [Split::Train, Split::Validation, Split::Test] {
            assert_nested(&d.split(split));
        }
    }
}

#[test]
fn same_spec_gives_byte_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let spec = common::tiny_spec(5);
    let a = dir.path().join("a.tsv");
    let b = dir.path().join("b.tsv");
    save_dataset(&generate(&spec).unwrap(), &a).unwrap();
    save_dataset(&generate(&spec).unwrap(), &b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn sidecar_spec_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("x.tsv");
    let spec = SyntheticSpec { task_correlation: -0.25, seed: 123, ..common::tiny_spec(3) };
    let side = sidecar_path(&data);
    assert!(side.to_string_lossy().ends_with("x.tsv.spec"));
    spec.save(&side).unwrap();
    assert_eq!(SyntheticSpec::load(&side).unwrap(), spec);
}

#[test]
fn empty_file_loads_as_empty_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("empty.tsv");
    std::fs::write(&p, "").unwrap();
    assert!(load_dataset(&p).unwrap().is_empty());
}

#[test]
fn split_assignment_is_disjoint_and_stable() {
    let d = generate(&common::tiny_spec(2)).unwrap();
    let ids = |s: Split| -> HashSet<u64> { d.split(s).samples.iter().map(|x| x.impression_id).collect() };
    let (tr, va, te) = (ids(Split::Train), ids(Split::Validation), ids(Split::Test));
    assert!(tr.is_disjoint(&va) && tr.is_disjoint(&te) && va.is_disjoint(&te));
    assert_eq!(d.split(Split::Test), generate(&common::tiny_spec(2)).unwrap().split(Split::Test));
}

fn synthetic(n_ctr: usize, n_cvr: usize) -> Dataset {
    let mut v: Vec<Sample> = (0..n_ctr)
        .map(|i| Sample::new(i as u64, Task::Ctr, if i < n_cvr { 1.0 } else { 0.0 }, vec![0]))
        .collect();
    v.extend((0..n_cvr).map(|i| Sample::new(i as u64, Task::Cvr, 0.5, vec![0])));
    Dataset::new(vec![1], v)
}

proptest! {
    #[test]
    fn batching_covers_each_sample_once(n_cvr in 0usize..60, extra in 0usize..200, bs in 1usize..40, seed: u64, epoch in 0u64..5) {
        let d = synthetic(n_cvr + extra, n_cvr);
        let stream = batches(&d, TaskFilter::Both, bs, RngSeed(seed), epoch).unwrap();
        for task in Task::ALL {
            let mut seen: Vec<u64> = stream
                .iter()
                .filter(|b| b.task == task)
                .flat_map(|b| b.samples.iter().map(|s| s.impression_id))
                .collect();
            seen.sort_unstable();
            let n = d.count(task) as u64;
            prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
            let sizes: Vec<usize> = stream.iter().filter(|b| b.task == task).map(|b| b.len()).collect();
            prop_assert_eq!(sizes.len(), (n as usize).div_ceil(bs));
        }
        prop_assert!(stream.iter().all(|b| !b.is_empty() && b.samples.iter().all(|s| s.task == b.task)));
    }
}
