use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::Sample;
use crate::nn::{sigmoid, Rng, RngSeed};
use crate::task::Task;

use super::Dataset;

/// Parameters of the synthetic click / consumption generator.
///
/// Fields: user id, item id, then `quantized_fields` buckets of latent
/// coordinates alternating between the user and the item vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_users: usize,
    pub n_items: usize,
    pub latent_dim: usize,
    pub quantized_fields: usize,
    pub buckets: usize,
    pub click_base_rate: f64,
    /// Weight of the click-only utility in the click logit.
    pub click_specific: f64,
    /// Weight of the conversion-only utility in the conversion logit.
    pub conversion_specific: f64,
    pub click_noise: f64,
    pub conversion_noise: f64,
    pub conversion_offset: f64,
    pub task_correlation: f64,
    pub n_impressions: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_users: 1000,
            n_items: 500,
            latent_dim: 4,
            quantized_fields: 8,
            buckets: 10,
            click_base_rate: 0.2,
            click_specific: 0.3,
            conversion_specific: 0.5,
            click_noise: 0.0,
            conversion_noise: 1.0,
            conversion_offset: 0.0,
            task_correlation: 0.8,
            n_impressions: 50_000,
            seed: 7,
        }
    }
}

/// Per-impression latent quantities, kept for diagnostics and tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpressionTrace {
    /// Click logit before the calibrated offset, noise included.
    pub click_logit: f64,
    pub conversion_logit: f64,
    pub clicked: bool,
}

const KEYS: [&str; 14] = [
    "n_users",
    "n_items",
    "latent_dim",
    "quantized_fields",
    "buckets",
    "click_base_rate",
    "click_specific",
    "conversion_specific",
    "click_noise",
    "conversion_noise",
    "conversion_offset",
    "task_correlation",
    "n_impressions",
    "seed",
];

impl SyntheticSpec {
    pub fn n_fields(&self) -> usize {
        2 + self.quantized_fields
    }

    pub fn field_cardinalities(&self) -> Vec<usize> {
        let mut cards = vec![self.n_users, self.n_items];
        cards.extend(std::iter::repeat_n(self.buckets, self.quantized_fields));
        cards
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 || self.n_items == 0 || self.latent_dim == 0 {
            return Err(Error::invalid("n_users, n_items and latent_dim must be positive"));
        }
        if self.quantized_fields > 0 && self.buckets == 0 {
            return Err(Error::invalid("buckets must be positive when quantized fields are present"));
        }
        if !(self.click_base_rate > 0.0 && self.click_base_rate < 1.0) {
            return Err(Error::invalid(format!("click_base_rate {} outside (0, 1)", self.click_base_rate)));
        }
        if !(-1.0..=1.0).contains(&self.task_correlation) {
            return Err(Error::invalid(format!("task_correlation {} outside [-1, 1]", self.task_correlation)));
        }
        let reals = [
            ("click_specific", self.click_specific),
            ("conversion_specific", self.conversion_specific),
            ("click_noise", self.click_noise),
            ("conversion_noise", self.conversion_noise),
        ];
        for (name, v) in reals {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        if !self.conversion_offset.is_finite() {
            return Err(Error::invalid("conversion_offset must be finite"));
        }
        Ok(())
    }

    pub fn to_kv(&self) -> String {
        let values = self.values();
        KEYS.iter().zip(values).map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    fn values(&self) -> [String; 14] {
        [
            self.n_users.to_string(),
            self.n_items.to_string(),
            self.latent_dim.to_string(),
            self.quantized_fields.to_string(),
            self.buckets.to_string(),
            format!("{:?}", self.click_base_rate),
            format!("{:?}", self.click_specific),
            format!("{:?}", self.conversion_specific),
            format!("{:?}", self.click_noise),
            format!("{:?}", self.conversion_noise),
            format!("{:?}", self.conversion_offset),
            format!("{:?}", self.task_correlation),
            self.n_impressions.to_string(),
            self.seed.to_string(),
        ]
    }

    /// Applies `key -> value` overrides on top of `self`. Unknown keys are
    /// rejected.
    pub fn with_overrides(&self, map: &BTreeMap<String, String>) -> Result<Self> {
        let mut s = self.clone();
        for (k, v) in map {
            s.set(k, v)?;
        }
        Ok(s)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.trim()
                .parse()
                .map_err(|_| Error::invalid(format!("cannot parse {key}={v}")))
        }
        match key {
            "n_users" => self.n_users = num(key, value)?,
            "n_items" => self.n_items = num(key, value)?,
            "latent_dim" => self.latent_dim = num(key, value)?,
            "quantized_fields" => self.quantized_fields = num(key, value)?,
            "buckets" => self.buckets = num(key, value)?,
            "click_base_rate" => self.click_base_rate = num(key, value)?,
            "click_specific" => self.click_specific = num(key, value)?,
            "conversion_specific" => self.conversion_specific = num(key, value)?,
            "click_noise" => self.click_noise = num(key, value)?,
            "conversion_noise" => self.conversion_noise = num(key, value)?,
            "conversion_offset" => self.conversion_offset = num(key, value)?,
            "task_correlation" => self.task_correlation = num(key, value)?,
            "n_impressions" => self.n_impressions = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            _ => return Err(Error::invalid(format!("unknown synthetic spec key '{key}'"))),
        }
        Ok(())
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let mut s = SyntheticSpec::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: format!("expected key=value, got '{line}'"),
            })?;
            s.set(k.trim(), v)?;
        }
        Ok(s)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_kv())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_kv(&std::fs::read_to_string(path)?)
    }
}

/// Sidecar path written next to a generated dataset file.
pub fn sidecar_path(dataset_path: &Path) -> std::path::PathBuf {
    let mut s = dataset_path.as_os_str().to_owned();
    s.push(".spec");
    s.into()
}

pub fn generate(spec: &SyntheticSpec) -> Result<Dataset> {
    generate_traced(spec).map(|(d, _)| d)
}

/// Generates the dataset and returns the per-impression logits alongside.
///
/// Every impression consumes the same random draws whatever its click
/// outcome, so changing ρ or the noise levels leaves the sampled users,
/// items and base noise untouched.
pub fn generate_traced(spec: &SyntheticSpec) -> Result<(Dataset, Vec<ImpressionTrace>)> {
    spec.validate()?;
    let root = RngSeed(spec.seed);
    let l = spec.latent_dim;

    let mut rng = root.derive(1).rng();
    let users = gaussian_rows(&mut rng, spec.n_users, l);
    let mut rng = root.derive(2).rng();
    let items = gaussian_rows(&mut rng, spec.n_items, l);
    let mut rng = root.derive(3).rng();
    let p_click = gaussian_rows(&mut rng, l, l);
    let mut rng = root.derive(4).rng();
    let p_conv = gaussian_rows(&mut rng, l, l);

    let sqrt_l = (l as f64).sqrt();
    let lf = l as f64;
    let mut rng = root.derive(5).rng();
    struct Draw {
        user: usize,
        item: usize,
        click_part: f64,
        conv_part: f64,
        uniform: f64,
    }
    let mut draws = Vec::with_capacity(spec.n_impressions);
    for _ in 0..spec.n_impressions {
        let user = rng.gen_range(0..spec.n_users);
        let item = rng.gen_range(0..spec.n_items);
        let e_click: f64 = rng.sample(StandardNormal);
        let e_conv: f64 = rng.sample(StandardNormal);
        let uniform: f64 = rng.gen();
        let u = &users[user * l..(user + 1) * l];
        let v = &items[item * l..(item + 1) * l];
        let shared = dot(u, v) / sqrt_l;
        let c = bilinear(u, &p_click, v, l) / lf;
        let t = bilinear(u, &p_conv, v, l) / lf;
        draws.push(Draw {
            user,
            item,
            click_part: shared + spec.click_specific * c + spec.click_noise * e_click,
            conv_part: spec.task_correlation * shared
                + spec.conversion_specific * t
                + spec.conversion_noise * e_conv
                + spec.conversion_offset,
            uniform,
        });
    }

    let logits: Vec<f64> = draws.iter().map(|d| d.click_part).collect();
    let offset = calibrate_offset(&logits, spec.click_base_rate);

    let mut samples = Vec::with_capacity(spec.n_impressions * 2);
    let mut traces = Vec::with_capacity(spec.n_impressions);
    for (i, d) in draws.iter().enumerate() {
        let clicked = d.uniform < sigmoid(d.click_part + offset);
        let ids = feature_ids(spec, d.user, d.item, &users, &items);
        traces.push(ImpressionTrace {
            click_logit: d.click_part,
            conversion_logit: d.conv_part,
            clicked,
        });
        samples.push(Sample::new(i as u64, Task::Ctr, if clicked { 1.0 } else { 0.0 }, ids.clone()));
        if clicked {
            let label = sigmoid(d.conv_part).clamp(0.0, 1.0);
            samples.push(Sample::new(i as u64, Task::Cvr, label, ids));
        }
    }
    Ok((Dataset::new(spec.field_cardinalities(), samples), traces))
}

fn gaussian_rows(rng: &mut Rng, rows: usize, cols: usize) -> Vec<f64> {
    (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn bilinear(u: &[f64], p: &[f64], v: &[f64], l: usize) -> f64 {
    (0..l).map(|i| u[i] * dot(&p[i * l..(i + 1) * l], v)).sum()
}

/// Offset `b` with `mean(sigmoid(logit + b)) = rate`, by bisection.
fn calibrate_offset(logits: &[f64], rate: f64) -> f64 {
    if logits.is_empty() {
        return (rate / (1.0 - rate)).ln();
    }
    let mean = |b: f64| logits.iter().map(|&z| sigmoid(z + b)).sum::<f64>() / logits.len() as f64;
    let (mut lo, mut hi) = (-60.0, 60.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean(mid) < rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn feature_ids(spec: &SyntheticSpec, user: usize, item: usize, users: &[f64], items: &[f64]) -> Vec<usize> {
    let l = spec.latent_dim;
    let mut ids = Vec::with_capacity(spec.n_fields());
    ids.push(user);
    ids.push(item);
    for q in 0..spec.quantized_fields {
        let coord = (q / 2) % l;
        let z = if q % 2 == 0 { users[user * l + coord] } else { items[item * l + coord] };
        // Logistic CDF approximation of the normal CDF; only monotonicity matters.
        let u = sigmoid(1.702 * z);
        ids.push(((u * spec.buckets as f64) as usize).min(spec.buckets - 1));
    }
    ids
}
