//! Distance-deviation reward and group-relative advantages.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesic::inverse_distance;
use crate::geohash::{validate, LatLon, DEFAULT_LENGTH};

/// Constants of the reward `R = (sqrt(T) - sqrt(D)) / S`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardParams {
    /// Distance in metres at which the reward crosses zero.
    pub t: f64,
    /// Normalizer.
    pub s: f64,
    /// Reward assigned to output that is not a well-formed geohash.
    pub invalid_penalty: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        RewardParams {
            t: 100.0,
            s: 1000.0,
            invalid_penalty: -4.5,
        }
    }
}

/// Longest possible geodesic on WGS-84 (half the meridian circumference is
/// 20 003 931 m; antipodal equatorial pairs reach 20 037 508 m).
pub const MAX_TERRESTRIAL_DISTANCE_M: f64 = 20_037_508.4;

impl RewardParams {
    pub fn validated(self) -> Result<Self> {
        if !(self.t > 0.0) || !(self.s > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "reward T and S must be positive, got T={} S={}",
                self.t, self.s
            )));
        }
        let worst_valid = self.from_distance(MAX_TERRESTRIAL_DISTANCE_M);
        if !(self.invalid_penalty < worst_valid) {
            return Err(Error::InvalidArgument(format!(
                "invalid_penalty {} must be below the worst valid reward {worst_valid}",
                self.invalid_penalty
            )));
        }
        Ok(self)
    }

    pub fn from_distance(&self, distance_m: f64) -> f64 {
        (self.t.sqrt() - distance_m.sqrt()) / self.s
    }
}

pub fn reward(pred: LatLon, truth: LatLon, params: &RewardParams) -> f64 {
    params.from_distance(inverse_distance(pred, truth))
}

/// Text after the last `</thinking>` tag, or the whole string.
pub fn answer_span(raw: &str) -> &str {
    match raw.rfind("</thinking>") {
        Some(i) => &raw[i + "</thinking>".len()..],
        None => raw,
    }
}

/// Reward of a raw model output: decoded cell centroid scored against
/// `truth`, or the invalid penalty when the answer is not a geohash.
pub fn reward_of_output(raw: &str, truth: LatLon, params: &RewardParams) -> f64 {
    match validate(answer_span(raw), DEFAULT_LENGTH) {
        Ok(g) => reward(g.centroid(), truth, params),
        Err(_) => params.invalid_penalty,
    }
}

pub const DEFAULT_ADVANTAGE_EPS: f64 = 1e-8;

/// `(r_i - mean) / (population_std + eps)` over one group.
pub fn group_advantages(rewards: &[f64], eps: f64) -> Result<Vec<f64>> {
    if rewards.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "group needs at least 2 rewards, got {}",
            rewards.len()
        )));
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let denom = var.sqrt() + eps;
    Ok(rewards.iter().map(|r| (r - mean) / denom).collect())
}

/// One prompt with its sampled candidates, rewards and advantages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutGroup {
    pub prompt_id: String,
    pub candidates: Vec<String>,
    pub rewards: Vec<f64>,
    pub advantages: Vec<f64>,
}

impl RolloutGroup {
    /// Scores `candidates` against `truth` and normalizes within the group.
    pub fn score(
        prompt_id: impl Into<String>,
        candidates: Vec<String>,
        truth: LatLon,
        params: &RewardParams,
    ) -> Result<Self> {
        let rewards: Vec<f64> = candidates
            .iter()
            .map(|c| reward_of_output(c, truth, params))
            .collect();
        let advantages = group_advantages(&rewards, DEFAULT_ADVANTAGE_EPS)?;
        Ok(RolloutGroup {
            prompt_id: prompt_id.into(),
            candidates,
            rewards,
            advantages,
        })
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}
