use std::cmp::Ordering;

use crate::error::{Error, Result};

/// One candidate video for the online ranking formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankInput {
    pub p_ctr: f64,
    pub p_cvr: f64,
    /// Seconds.
    pub video_length: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl RankInput {
    /// Unit exponents, the setting used online.
    pub fn new(p_ctr: f64, p_cvr: f64, video_length: f64) -> Self {
        RankInput {
            p_ctr,
            p_cvr,
            video_length,
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
        }
    }

    pub fn with_exponents(mut self, alpha: f64, beta: f64, gamma: f64) -> Self {
        self.alpha = alpha;
        self.beta = beta;
        self.gamma = gamma;
        self
    }
}

/// `pCTR^α · pCVR^β · length^γ`.
pub fn rank_score(input: &RankInput) -> Result<f64> {
    if !input.video_length.is_finite() || input.video_length <= 0.0 {
        return Err(Error::invalid(format!(
            "video length must be positive, got {}",
            input.video_length
        )));
    }
    for (name, p) in [("pCTR", input.p_ctr), ("pCVR", input.p_cvr)] {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::invalid(format!("{name} must lie in (0, 1), got {p}")));
        }
    }
    Ok(input.p_ctr.powf(input.alpha) * input.p_cvr.powf(input.beta) * input.video_length.powf(input.gamma))
}

/// Indices of the `k` best candidates, by descending score, ties broken by
/// ascending index.
pub fn rank_top_k(candidates: &[RankInput], k: usize) -> Result<Vec<usize>> {
    if k > candidates.len() {
        return Err(Error::invalid(format!(
            "asked for top {k} of {} candidates",
            candidates.len()
        )));
    }
    let scores = candidates.iter().map(rank_score).collect::<Result<Vec<_>>>()?;
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    order.truncate(k);
    Ok(order)
}
