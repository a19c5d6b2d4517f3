//! Flat `section.key = value` experiment configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use lotshare_core::data::{Split, SyntheticSpec};
use lotshare_core::model::{cross_width, CrossKind, ModelConfig, SharingMode};
use lotshare_core::training::TrainConfig;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Environment variable that overrides both the data and the training seed.
pub const SEED_ENV: &str = "LOTSHARE_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    F64,
    F32,
}

impl Precision {
    pub fn name(self) -> &'static str {
        match self {
            Precision::F64 => "f64",
            Precision::F32 => "f32",
        }
    }
}

/// Network shape, independent of the dataset's vocabulary sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSettings {
    pub embedding_dim: usize,
    /// Hidden widths between the interaction layer and the scalar output.
    pub hidden: Vec<usize>,
    /// In layer-share mode, how many leading hidden layers form the shared
    /// trunk; the rest are duplicated per task.
    pub shared_layers: usize,
    pub cross: CrossKind,
    pub mode: SharingMode,
}

impl Default for ModelSettings {
    fn default() -> Self {
        ModelSettings {
            embedding_dim: 8,
            hidden: vec![64, 32, 16],
            shared_layers: 2,
            cross: CrossKind::PairwiseDot,
            mode: SharingMode::ConnectionShare,
        }
    }
}

impl ModelSettings {
    pub fn model_config(&self, field_cardinalities: Vec<usize>) -> CliResult<ModelConfig> {
        let input = cross_width(field_cardinalities.len(), self.embedding_dim, self.cross);
        let (mlp_dims, tower_dims) = if self.mode == SharingMode::LayerShare {
            if self.shared_layers > self.hidden.len() {
                return Err(CliError::config(format!(
                    "model.shared_layers = {} exceeds the {} hidden layers",
                    self.shared_layers,
                    self.hidden.len()
                )));
            }
            let mut trunk = vec![input];
            trunk.extend(&self.hidden[..self.shared_layers]);
            let mut tower = vec![*trunk.last().unwrap_or(&input)];
            tower.extend(&self.hidden[self.shared_layers..]);
            tower.push(1);
            (trunk, tower)
        } else {
            let mut mlp = vec![input];
            mlp.extend(&self.hidden);
            mlp.push(1);
            (mlp, Vec::new())
        };
        let config = ModelConfig {
            field_cardinalities,
            embedding_dim: self.embedding_dim,
            mlp_dims,
            tower_dims,
            cross_kind: self.cross,
            sharing_mode: self.mode,
        };
        config.validate().map_err(|e| CliError::config(e.to_string()))?;
        Ok(config)
    }
}

/// Everything a run needs; serializes to the same flat format it parses.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Generator parameters, used when `data_path` is unset.
    pub synthetic: SyntheticSpec,
    pub data_path: Option<PathBuf>,
    pub model: ModelSettings,
    pub train: TrainConfig,
    pub output_dir: PathBuf,
    pub precision: Precision,
    /// Split the final report is computed on.
    pub report_split: Split,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            synthetic: SyntheticSpec::default(),
            data_path: None,
            model: ModelSettings::default(),
            train: TrainConfig::default(),
            output_dir: PathBuf::from("runs/default"),
            precision: Precision::F64,
            report_split: Split::Test,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> CliResult<T> {
    value
        .parse()
        .map_err(|_| CliError::config(format!("invalid value for {key}: '{value}'")))
}

fn parse_list(key: &str, value: &str) -> CliResult<Vec<usize>> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| parse(key, v.trim())).collect()
}

fn parse_bool(key: &str, value: &str) -> CliResult<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::config(format!("invalid boolean for {key}: '{value}'"))),
    }
}

fn list(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// Sets one `section.key` entry.
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let value = value.trim();
        let (section, name) = key
            .split_once('.')
            .ok_or_else(|| CliError::config(format!("key '{key}' lacks a section prefix")))?;
        match section {
            "run" => match name {
                "output_dir" => self.output_dir = PathBuf::from(value),
                "precision" => {
                    self.precision = match value {
                        "f64" => Precision::F64,
                        "f32" => Precision::F32,
                        _ => return Err(CliError::config(format!("run.precision must be f64 or f32, got '{value}'"))),
                    }
                }
                _ => return Err(unknown(key)),
            },
            "data" => match name {
                "path" => self.data_path = (!value.is_empty()).then(|| PathBuf::from(value)),
                _ => self.synthetic.set(name, value).map_err(|e| CliError::config(e.to_string()))?,
            },
            "model" => match name {
                "embedding_dim" => self.model.embedding_dim = parse(key, value)?,
                "hidden" => self.model.hidden = parse_list(key, value)?,
                "shared_layers" => self.model.shared_layers = parse(key, value)?,
                "cross" => {
                    self.model.cross = value
                        .parse()
                        .map_err(|_| CliError::config(format!("unknown cross kind '{value}'")))?
                }
                "mode" => self.model.mode = parse_mode(value)?,
                _ => return Err(unknown(key)),
            },
            "train" => {
                let t = &mut self.train;
                match name {
                    "learning_rate" => t.learning_rate = parse(key, value)?,
                    "batch_size" => t.batch_size = parse(key, value)?,
                    "omega_ctr" => t.omega_ctr = parse(key, value)?,
                    "omega_cvr" => t.omega_cvr = parse(key, value)?,
                    "q" => t.q = parse(key, value)?,
                    "n_pruning" => t.n_pruning = parse(key, value)?,
                    "warmup_epochs" => t.warmup_epochs = parse(key, value)?,
                    "mask_epochs" => t.mask_epochs = parse(key, value)?,
                    "joint_epochs" => t.joint_epochs = parse(key, value)?,
                    "baseline_epochs" => t.baseline_epochs = parse(key, value)?,
                    "seed" => t.seed = parse(key, value)?,
                    "select_epoch" => t.select_epoch = parse_bool(key, value)?,
                    "adam_beta1" => t.adam.beta1 = parse(key, value)?,
                    "adam_beta2" => t.adam.beta2 = parse(key, value)?,
                    "adam_epsilon" => t.adam.epsilon = parse(key, value)?,
                    _ => return Err(unknown(key)),
                }
            }
            "report" => match name {
                "split" => {
                    self.report_split = match value {
                        "train" => Split::Train,
                        "validation" => Split::Validation,
                        "test" => Split::Test,
                        _ => return Err(CliError::config(format!("unknown split '{value}'"))),
                    }
                }
                _ => return Err(unknown(key)),
            },
            _ => return Err(unknown(key)),
        }
        Ok(())
    }

    /// Applies the lines of a config file on top of `self`. Keys may not
    /// repeat within one file.
    pub fn apply_text(&mut self, text: &str) -> CliResult<()> {
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("line {}: expected 'key = value'", i + 1)))?;
            let k = k.trim();
            if let Some(prev) = seen.insert(k.to_string(), i + 1) {
                return Err(CliError::config(format!("line {}: '{k}' already set on line {prev}", i + 1)));
            }
            self.set(k, v).map_err(|e| e.context(format!("line {}", i + 1)))?;
        }
        Ok(())
    }

    /// Applies `key=value` overrides given on the command line.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> CliResult<()> {
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("override '{o}' is not key=value")))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    /// Defaults, then the file, then `LOTSHARE_SEED`, then overrides.
    pub fn resolve(file_text: Option<&str>, seed_env: Option<&str>, overrides: &[String]) -> CliResult<Self> {
        let mut c = ExperimentConfig::default();
        if let Some(t) = file_text {
            c.apply_text(t)?;
        }
        if let Some(s) = seed_env {
            let seed: u64 = parse(SEED_ENV, s.trim())?;
            c.train.seed = seed;
            c.synthetic.seed = seed;
        }
        c.apply_overrides(overrides)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.train.validate().map_err(|e| CliError::config(e.to_string()))?;
        if self.data_path.is_none() {
            self.synthetic.validate().map_err(|e| CliError::config(e.to_string()))?;
        }
        if self.model.embedding_dim == 0 || self.model.hidden.contains(&0) {
            return Err(CliError::config("model widths must be positive"));
        }
        Ok(())
    }

    /// Canonical text: every key, fixed order, full precision.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let t = &self.train;
        let _ = writeln!(out, "run.output_dir = {}", self.output_dir.display());
        let _ = writeln!(out, "run.precision = {}", self.precision.name());
        let _ = writeln!(
            out,
            "data.path = {}",
            self.data_path.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
        );
        for line in self.synthetic.to_kv().lines() {
            let (k, v) = line.split_once('=').unwrap_or((line, ""));
            let _ = writeln!(out, "data.{k} = {v}");
        }
        let m = &self.model;
        let _ = writeln!(out, "model.embedding_dim = {}", m.embedding_dim);
        let _ = writeln!(out, "model.hidden = {}", list(&m.hidden));
        let _ = writeln!(out, "model.shared_layers = {}", m.shared_layers);
        let _ = writeln!(out, "model.cross = {}", m.cross.name());
        let _ = writeln!(out, "model.mode = {}", m.mode.name());
        let _ = writeln!(out, "train.learning_rate = {:?}", t.learning_rate);
        let _ = writeln!(out, "train.batch_size = {}", t.batch_size);
        let _ = writeln!(out, "train.omega_ctr = {:?}", t.omega_ctr);
        let _ = writeln!(out, "train.omega_cvr = {:?}", t.omega_cvr);
        let _ = writeln!(out, "train.q = {:?}", t.q);
        let _ = writeln!(out, "train.n_pruning = {}", t.n_pruning);
        let _ = writeln!(out, "train.warmup_epochs = {}", t.warmup_epochs);
        let _ = writeln!(out, "train.mask_epochs = {}", t.mask_epochs);
        let _ = writeln!(out, "train.joint_epochs = {}", t.joint_epochs);
        let _ = writeln!(out, "train.baseline_epochs = {}", t.baseline_epochs);
        let _ = writeln!(out, "train.seed = {}", t.seed);
        let _ = writeln!(out, "train.select_epoch = {}", t.select_epoch);
        let _ = writeln!(out, "train.adam_beta1 = {:?}", t.adam.beta1);
        let _ = writeln!(out, "train.adam_beta2 = {:?}", t.adam.beta2);
        let _ = writeln!(out, "train.adam_epsilon = {:?}", t.adam.epsilon);
        let _ = writeln!(out, "report.split = {}", self.report_split.name());
        out
    }

    /// First 16 hex digits of the SHA-256 of everything except the output
    /// directory, so identical experiments share a fingerprint wherever
    /// they are written.
    pub fn fingerprint(&self) -> String {
        let text: String = self
            .to_text()
            .lines()
            .filter(|l| !l.starts_with("run.output_dir"))
            .map(|l| format!("{l}\n"))
            .collect();
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn load(path: &Path, seed_env: Option<&str>, overrides: &[String]) -> CliResult<(Self, String)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        Ok((Self::resolve(Some(&text), seed_env, overrides)?, text))
    }
}

pub fn parse_mode(value: &str) -> CliResult<SharingMode> {
    value
        .parse()
        .map_err(|_| CliError::config(format!("unknown sharing mode '{value}'")))
}

fn unknown(key: &str) -> CliError {
    CliError::config(format!("unknown config key '{key}'"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_text_round_trips() {
        let mut c = ExperimentConfig::default();
        c.set("train.q", "0.35").unwrap();
        c.set("model.mode", "neuron_share").unwrap();
        c.set("data.task_correlation", "0.5").unwrap();
        c.set("model.hidden", "8,4").unwrap();
        let back = ExperimentConfig::resolve(Some(&c.to_text()), None, &[]).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn precedence_flags_over_env_over_file() {
        let file = "train.seed = 5\ndata.seed = 6\n";
        let c = ExperimentConfig::resolve(Some(file), None, &[]).unwrap();
        assert_eq!((c.train.seed, c.synthetic.seed), (5, 6));
        let c = ExperimentConfig::resolve(Some(file), Some("9"), &[]).unwrap();
        assert_eq!((c.train.seed, c.synthetic.seed), (9, 9));
        let c = ExperimentConfig::resolve(Some(file), Some("9"), &["train.seed=11".into()]).unwrap();
        assert_eq!((c.train.seed, c.synthetic.seed), (11, 9));
    }

    #[test]
    fn errors_name_the_problem() {
        let e = ExperimentConfig::resolve(Some("train.q = 2\n"), None, &[]).unwrap_err();
        assert!(e.message.contains('q'));
        let e = ExperimentConfig::resolve(Some("# c\nbogus.key = 1\n"), None, &[]).unwrap_err();
        assert!(e.message.contains("line 2"), "{}", e.message);
        assert!(ExperimentConfig::resolve(Some("train.q = 0.1\ntrain.q = 0.2\n"), None, &[]).is_err());
        assert!(ExperimentConfig::resolve(None, Some("x"), &[]).is_err());
    }

    #[test]
    fn layer_share_shapes() {
        let m = ModelSettings { mode: SharingMode::LayerShare, ..ModelSettings::default() };
        let c = m.model_config(vec![3, 4]).unwrap();
        assert_eq!(c.mlp_dims[1..], [64, 32]);
        assert_eq!(c.tower_dims, vec![32, 16, 1]);
        let d = ModelSettings::default().model_config(vec![3, 4]).unwrap();
        assert_eq!(d.mlp_dims[1..], [64, 32, 16, 1]);
    }

    #[test]
    fn fingerprint_ignores_output_dir() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig { output_dir: "elsewhere".into(), ..a.clone() };
        assert_eq!(a.fingerprint(), b.fingerprint());
        let c = ExperimentConfig { precision: Precision::F32, ..a.clone() };
        assert_ne!(a.fingerprint(), c.fingerprint());
    }
}
