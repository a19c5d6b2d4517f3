//! Evaluation report: per-task metrics, sparsity and mask overlap, with a
//! text rendering and a `key=value` form that parses back.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::masking::OverlapCounts;
use crate::metrics::gain::{format_gain, MtlGain};
use crate::model::SharingMode;
use crate::task::Task;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub mode: SharingMode,
    /// Test AUC of the CTR model.
    pub ctr_auc: Option<f64>,
    /// Test MSE of the CVR model.
    pub cvr_mse: Option<f64>,
    pub ctr_gain: Option<MtlGain>,
    pub cvr_gain: Option<MtlGain>,
    /// Fraction of MLP connections kept by each task's selected mask.
    pub ctr_density: Option<f64>,
    pub cvr_density: Option<f64>,
    pub ctr_best_round: Option<u32>,
    pub cvr_best_round: Option<u32>,
    pub overlap: Option<OverlapCounts>,
    pub config_fingerprint: String,
    /// Free-form `key=value` facts about how the run was set up.
    pub notes: BTreeMap<String, String>,
}

impl MetricsReport {
    pub fn new(mode: SharingMode, config_fingerprint: impl Into<String>) -> Self {
        MetricsReport {
            mode,
            ctr_auc: None,
            cvr_mse: None,
            ctr_gain: None,
            cvr_gain: None,
            ctr_density: None,
            cvr_density: None,
            ctr_best_round: None,
            cvr_best_round: None,
            overlap: None,
            config_fingerprint: config_fingerprint.into(),
            notes: BTreeMap::new(),
        }
    }

    pub fn metric(&self, task: Task) -> Option<f64> {
        match task {
            Task::Ctr => self.ctr_auc,
            Task::Cvr => self.cvr_mse,
        }
    }

    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(out, "{k}={v}");
        };
        line("mode", self.mode.name().to_string());
        line("config_fingerprint", self.config_fingerprint.clone());
        let opt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:?}"));
        line("ctr.auc", opt(self.ctr_auc));
        line("cvr.mse", opt(self.cvr_mse));
        line("ctr.gain_abs", opt(self.ctr_gain.map(|g| g.absolute)));
        line("ctr.gain_rel", opt(self.ctr_gain.map(|g| g.relative)));
        line("cvr.gain_abs", opt(self.cvr_gain.map(|g| g.absolute)));
        line("cvr.gain_rel", opt(self.cvr_gain.map(|g| g.relative)));
        line("ctr.density", opt(self.ctr_density));
        line("cvr.density", opt(self.cvr_density));
        let opt_u = |v: Option<u32>| v.map_or_else(|| "n/a".to_string(), |x| x.to_string());
        line("ctr.best_round", opt_u(self.ctr_best_round));
        line("cvr.best_round", opt_u(self.cvr_best_round));
        if let Some(o) = &self.overlap {
            line("overlap.shared", o.shared.to_string());
            line("overlap.ctr_only", o.ctr_only.to_string());
            line("overlap.cvr_only", o.cvr_only.to_string());
            line("overlap.dead", o.dead.to_string());
        }
        for (k, v) in &self.notes {
            line(&format!("note.{k}"), v.clone());
        }
        out
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let l = raw.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            let (k, v) = l.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: format!("expected key=value, got `{l}`"),
            })?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        let mode: SharingMode = map
            .get("mode")
            .ok_or_else(|| Error::invalid("report has no mode"))?
            .parse()?;
        let float = |k: &str| -> Result<Option<f64>> {
            match map.get(k).map(String::as_str) {
                None | Some("n/a") => Ok(None),
                Some(v) => v
                    .parse::<f64>()
                    .map(Some)
                    .map_err(|_| Error::invalid(format!("report key {k}: bad number `{v}`"))),
            }
        };
        let uint = |k: &str| -> Result<Option<u32>> {
            match map.get(k).map(String::as_str) {
                None | Some("n/a") => Ok(None),
                Some(v) => v
                    .parse::<u32>()
                    .map(Some)
                    .map_err(|_| Error::invalid(format!("report key {k}: bad integer `{v}`"))),
            }
        };
        let gain = |a: &str, r: &str| -> Result<Option<MtlGain>> {
            Ok(match (float(a)?, float(r)?) {
                (Some(absolute), Some(relative)) => Some(MtlGain { absolute, relative }),
                _ => None,
            })
        };
        let count = |k: &str| -> Result<Option<usize>> { Ok(uint(k)?.map(|v| v as usize)) };
        let overlap = match (
            count("overlap.shared")?,
            count("overlap.ctr_only")?,
            count("overlap.cvr_only")?,
            count("overlap.dead")?,
        ) {
            (Some(shared), Some(ctr_only), Some(cvr_only), Some(dead)) => Some(OverlapCounts {
                shared,
                ctr_only,
                cvr_only,
                dead,
            }),
            _ => None,
        };
        Ok(MetricsReport {
            mode,
            ctr_auc: float("ctr.auc")?,
            cvr_mse: float("cvr.mse")?,
            ctr_gain: gain("ctr.gain_abs", "ctr.gain_rel")?,
            cvr_gain: gain("cvr.gain_abs", "cvr.gain_rel")?,
            ctr_density: float("ctr.density")?,
            cvr_density: float("cvr.density")?,
            ctr_best_round: uint("ctr.best_round")?,
            cvr_best_round: uint("cvr.best_round")?,
            overlap,
            config_fingerprint: map.get("config_fingerprint").cloned().unwrap_or_default(),
            notes: map
                .iter()
                .filter_map(|(k, v)| k.strip_prefix("note.").map(|n| (n.to_string(), v.clone())))
                .collect(),
        })
    }
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.5}"))
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<24} {}", "mode", self.mode)?;
        writeln!(f, "{:<24} {}", "config fingerprint", self.config_fingerprint)?;
        writeln!(f, "{:<24} {}", "CTR test AUC", cell(self.ctr_auc))?;
        writeln!(f, "{:<24} {}", "CVR test MSE", cell(self.cvr_mse))?;
        if let Some(g) = &self.ctr_gain {
            writeln!(f, "{:<24} {}", "CTR MTL gain", format_gain(g))?;
        }
        if let Some(g) = &self.cvr_gain {
            writeln!(f, "{:<24} {}", "CVR MTL gain", format_gain(g))?;
        }
        if self.ctr_density.is_some() || self.cvr_density.is_some() {
            writeln!(f, "{:<24} {}", "CTR mask density", cell(self.ctr_density))?;
            writeln!(f, "{:<24} {}", "CVR mask density", cell(self.cvr_density))?;
        }
        if let (Some(a), Some(b)) = (self.ctr_best_round, self.cvr_best_round) {
            writeln!(f, "{:<24} ctr={a} cvr={b}", "best pruning round")?;
        }
        if let Some(o) = &self.overlap {
            writeln!(
                f,
                "{:<24} shared={} ctr_only={} cvr_only={} dead={}",
                "mask overlap", o.shared, o.ctr_only, o.cvr_only, o.dead
            )?;
        }
        for (k, v) in &self.notes {
            writeln!(f, "{:<24} {}", k, v)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_round_trip() {
        let mut r = MetricsReport::new(SharingMode::ConnectionShare, "abc123");
        r.ctr_auc = Some(0.1 + 0.2);
        r.cvr_mse = Some(0.13226);
        r.cvr_gain = Some(MtlGain { absolute: 0.00462, relative: 0.0337518 });
        r.ctr_density = Some(0.8);
        r.cvr_best_round = Some(2);
        r.ctr_best_round = Some(0);
        r.overlap = Some(OverlapCounts { shared: 5, ctr_only: 2, cvr_only: 1, dead: 0 });
        r.notes.insert("hidden_activation".into(), "relu".into());
        let back = MetricsReport::from_kv(&r.to_kv()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.to_kv(), r.to_kv());
    }

    #[test]
    fn missing_metrics_render_na() {
        let r = MetricsReport::new(SharingMode::SingleTask, "x");
        let text = r.to_string();
        assert!(text.contains("CTR test AUC             n/a"), "{text}");
        let back = MetricsReport::from_kv(&r.to_kv()).unwrap();
        assert_eq!(back.ctr_auc, None);
    }

    #[test]
    fn text_uses_five_places() {
        let mut r = MetricsReport::new(SharingMode::LayerShare, "x");
        r.cvr_mse = Some(0.135634);
        assert!(r.to_string().contains("0.13563"));
    }

    #[test]
    fn malformed_kv() {
        assert!(MetricsReport::from_kv("mode=single_task\nnot a pair").is_err());
        assert!(MetricsReport::from_kv("ctr.auc=0.5").is_err());
        assert!(MetricsReport::from_kv("mode=single_task\nctr.auc=abc").is_err());
    }
}
