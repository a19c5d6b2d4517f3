//! Candidate ranking with `pCTR^α · pCVR^β · length^γ`.

use std::fmt::Write as _;
use std::path::Path;

use lotshare_core::metrics::{rank_score, rank_top_k, RankInput};
use lotshare_core::model::{load_checkpoint, Model, Sample};
use lotshare_core::Task;

use crate::error::{as_data, CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub id: String,
    pub feature_ids: Vec<usize>,
    pub video_length: f64,
}

/// One `id<TAB>f0,f1,...<TAB>length` line per candidate; `#` starts a comment.
pub fn parse_candidates(text: &str) -> CliResult<Vec<Candidate>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |m: String| CliError::data(format!("candidates line {}: {m}", i + 1));
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(err(format!("expected 3 tab-separated columns, got {}", cols.len())));
        }
        let feature_ids = cols[1]
            .split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|_| err(format!("bad id '{t}'"))))
            .collect::<CliResult<Vec<_>>>()?;
        let video_length: f64 = cols[2].trim().parse().map_err(|_| err(format!("bad length '{}'", cols[2])))?;
        out.push(Candidate { id: cols[0].trim().to_string(), feature_ids, video_length });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub candidate: Candidate,
    pub p_ctr: f64,
    pub p_cvr: f64,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponents {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for Exponents {
    fn default() -> Self {
        Exponents { alpha: 1.0, beta: 1.0, gamma: 1.0 }
    }
}

/// Top `k` candidates by rank score, best first.
pub fn rank_candidates(
    ctr: &Model<f64>,
    cvr: &Model<f64>,
    candidates: &[Candidate],
    k: usize,
    exp: Exponents,
) -> CliResult<Vec<Scored>> {
    if ctr.config().field_cardinalities != cvr.config().field_cardinalities {
        return Err(CliError::data("CTR and CVR checkpoints disagree on the feature schema"));
    }
    let cards = &ctr.config().field_cardinalities;
    for c in candidates {
        if c.feature_ids.len() != cards.len() {
            return Err(CliError::data(format!(
                "candidate {} has {} feature ids, the models expect {}",
                c.id,
                c.feature_ids.len(),
                cards.len()
            )));
        }
        if let Some((f, (&id, &card))) = c.feature_ids.iter().zip(cards).enumerate().find(|(_, (&id, &card))| id >= card) {
            return Err(CliError::data(format!(
                "candidate {}: field {f} id {id} out of range (cardinality {card})",
                c.id
            )));
        }
    }
    let predict = |model: &Model<f64>, task: Task| -> CliResult<Vec<f64>> {
        let samples: Vec<Sample> = candidates
            .iter()
            .enumerate()
            .map(|(i, c)| Sample::new(i as u64, task, 0.0, c.feature_ids.clone()))
            .collect();
        Ok(model.predict_samples(&samples, None, task)?)
    };
    let p_ctr = predict(ctr, Task::Ctr)?;
    let p_cvr = predict(cvr, Task::Cvr)?;
    let inputs: Vec<RankInput> = candidates
        .iter()
        .enumerate()
        .map(|(i, c)| RankInput::new(p_ctr[i], p_cvr[i], c.video_length).with_exponents(exp.alpha, exp.beta, exp.gamma))
        .collect();
    let order = rank_top_k(&inputs, k).map_err(|e| CliError::data(e.to_string()))?;
    order
        .into_iter()
        .map(|i| {
            Ok(Scored {
                candidate: candidates[i].clone(),
                p_ctr: p_ctr[i],
                p_cvr: p_cvr[i],
                score: rank_score(&inputs[i]).map_err(|e| CliError::data(e.to_string()))?,
            })
        })
        .collect()
}

pub fn format_ranking(ranked: &[Scored]) -> String {
    let mut out = String::from("rank\tcandidate\tscore\tp_ctr\tp_cvr\tlength\n");
    for (r, s) in ranked.iter().enumerate() {
        let _ = writeln!(
            out,
            "{}\t{}\t{:.5}\t{:.5}\t{:.5}\t{}",
            r + 1,
            s.candidate.id,
            s.score,
            s.p_ctr,
            s.p_cvr,
            s.candidate.video_length
        );
    }
    out
}

/// Loads both checkpoints and the candidates file, then ranks.
pub fn score_files(ctr: &Path, cvr: &Path, candidates: &Path, k: usize, exp: Exponents) -> CliResult<String> {
    let ctr_model: Model<f64> = load_checkpoint(ctr).map_err(|e| as_data(e).context(ctr.display()))?;
    let cvr_model: Model<f64> = load_checkpoint(cvr).map_err(|e| as_data(e).context(cvr.display()))?;
    let text = std::fs::read_to_string(candidates)
        .map_err(|e| CliError::data(format!("{}: {e}", candidates.display())))?;
    let cands = parse_candidates(&text)?;
    Ok(format_ranking(&rank_candidates(&ctr_model, &cvr_model, &cands, k, exp)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use lotshare_core::model::{ModelConfig, SharingMode};
    use lotshare_core::nn::RngSeed;

    fn models() -> (Model<f64>, Model<f64>) {
        let cfg = ModelConfig::desk(vec![6, 5], 3, SharingMode::SingleTask);
        (Model::new(cfg.clone(), RngSeed(1)).unwrap(), Model::new(cfg, RngSeed(2)).unwrap())
    }

    fn cands(n: usize, scale: f64) -> Vec<Candidate> {
        (0..n)
            .map(|i| Candidate { id: format!("c{i}"), feature_ids: vec![i % 6, i % 5], video_length: scale * (1.0 + i as f64) })
            .collect()
    }

    #[test]
    fn single_candidate_is_returned() {
        let (a, b) = models();
        let r = rank_candidates(&a, &b, &cands(1, 1.0), 1, Exponents::default()).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].candidate.id, "c0");
    }

    #[test]
    fn doubling_lengths_keeps_order() {
        let (a, b) = models();
        let ids = |s| -> Vec<String> {
            rank_candidates(&a, &b, &cands(12, s), 12, Exponents::default())
                .unwrap()
                .into_iter()
                .map(|x| x.candidate.id)
                .collect()
        };
        assert_eq!(ids(1.0), ids(2.0));
    }

    #[test]
    fn schema_mismatch_and_bad_ids_rejected() {
        let (a, _) = models();
        let other: Model<f64> =
            Model::new(ModelConfig::desk(vec![6, 4], 3, SharingMode::SingleTask), RngSeed(1)).unwrap();
        assert!(rank_candidates(&a, &other, &cands(2, 1.0), 1, Exponents::default()).is_err());
        let bad = vec![Candidate { id: "x".into(), feature_ids: vec![9, 0], video_length: 1.0 }];
        assert!(rank_candidates(&a, &a, &bad, 1, Exponents::default()).is_err());
    }

    #[test]
    fn candidate_parsing() {
        let c = parse_candidates("# id ids len\nv1\t0,1\t30\n").unwrap();
        assert_eq!(c[0].feature_ids, vec![0, 1]);
        assert!(parse_candidates("v1\t0,x\t30\n").is_err());
    }
}
