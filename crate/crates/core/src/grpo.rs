//! Group-relative policy optimization for the tabular policy.
//!
//! Each prompt gets `G` sampled candidates; their rewards are normalized
//! within the group and the policy ascends the PPO clipped surrogate
//!
//! ```text
//! J = mean over tokens [ min(r * A, clip(r, 1 - eps, 1 + eps) * A) - beta * KL ]
//! r = pi(token) / pi_old(token)
//! ```
//!
//! where `pi_old` is the policy at sampling time (recorded in the rollout)
//! and KL is the non-negative estimator `pi_old/pi - ln(pi_old/pi) - 1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geohash::LatLon;
use crate::policy::{sample_rollout, Gradient, PolicyModel, QueryFeatures, Rollout};
use crate::reward::{RewardParams, RolloutGroup};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrpoParams {
    pub clip_eps: f64,
    pub learning_rate: f64,
    pub kl_coeff: f64,
}

impl Default for GrpoParams {
    fn default() -> Self {
        GrpoParams {
            clip_eps: 0.2,
            learning_rate: 0.5,
            kl_coeff: 0.0,
        }
    }
}

/// Rollouts of one prompt together with their advantages.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptGroup {
    pub feats: QueryFeatures,
    pub rollouts: Vec<Rollout>,
    pub advantages: Vec<f64>,
}

fn check_groups(model: &PolicyModel, groups: &[PromptGroup]) -> Result<usize> {
    let Some(first) = groups.first() else {
        return Err(Error::InvalidArgument("no rollout groups".into()));
    };
    let g = first.rollouts.len();
    let mut tokens = 0;
    for group in groups {
        if group.rollouts.len() != g || group.advantages.len() != g {
            return Err(Error::InvalidArgument(format!(
                "group sizes differ: expected {g} rollouts and advantages, got {} and {}",
                group.rollouts.len(),
                group.advantages.len()
            )));
        }
        for r in &group.rollouts {
            if r.symbols.len() != model.sequence_length() || r.log_probs.len() != r.symbols.len() {
                return Err(Error::InvalidArgument(
                    "rollout length does not match the model".into(),
                ));
            }
            tokens += r.symbols.len();
        }
    }
    if tokens == 0 {
        return Err(Error::InvalidArgument(
            "rollout groups contain no tokens".into(),
        ));
    }
    Ok(tokens)
}

struct TokenTerm {
    value: f64,
    /// Derivative of `value` with respect to the new token log-probability.
    slope: f64,
}

fn token_term(new_lp: f64, old_lp: f64, advantage: f64, params: &GrpoParams) -> TokenTerm {
    let ratio = (new_lp - old_lp).exp();
    let clipped = ratio.clamp(1.0 - params.clip_eps, 1.0 + params.clip_eps);
    let unclipped_obj = ratio * advantage;
    let clipped_obj = clipped * advantage;
    let (surrogate, surrogate_slope) = if unclipped_obj <= clipped_obj {
        (unclipped_obj, unclipped_obj)
    } else {
        (clipped_obj, 0.0)
    };
    let inv = (old_lp - new_lp).exp();
    let kl = inv - (old_lp - new_lp) - 1.0;
    let kl_slope = 1.0 - inv;
    TokenTerm {
        value: surrogate - params.kl_coeff * kl,
        slope: surrogate_slope - params.kl_coeff * kl_slope,
    }
}

/// Value of the clipped surrogate (with KL penalty) at `model`.
pub fn surrogate_objective(
    model: &PolicyModel,
    groups: &[PromptGroup],
    params: &GrpoParams,
) -> Result<f64> {
    let tokens = check_groups(model, groups)?;
    let mut total = 0.0;
    for group in groups {
        for (rollout, &adv) in group.rollouts.iter().zip(&group.advantages) {
            let new_lps = model.token_log_probs(&group.feats, &rollout.symbols);
            for (new_lp, &old_lp) in new_lps.iter().zip(&rollout.log_probs) {
                total += token_term(*new_lp, old_lp, adv, params).value;
            }
        }
    }
    Ok(total / tokens as f64)
}

/// Analytic gradient of [`surrogate_objective`].
pub fn surrogate_gradient(
    model: &PolicyModel,
    groups: &[PromptGroup],
    params: &GrpoParams,
) -> Result<Gradient> {
    let tokens = check_groups(model, groups)?;
    let mut grad = Gradient::default();
    for group in groups {
        for (rollout, &adv) in group.rollouts.iter().zip(&group.advantages) {
            let new_lps = model.token_log_probs(&group.feats, &rollout.symbols);
            let slopes: Vec<f64> = new_lps
                .iter()
                .zip(&rollout.log_probs)
                .map(|(&n, &o)| token_term(n, o, adv, params).slope)
                .collect();
            let mut g = model.weighted_log_prob_gradient(&group.feats, &rollout.symbols, &slopes);
            g.scale(1.0 / tokens as f64);
            grad.merge(&g);
        }
    }
    Ok(grad)
}

/// One gradient-ascent step on the surrogate.
pub fn grpo_step(
    model: &mut PolicyModel,
    groups: &[PromptGroup],
    params: &GrpoParams,
) -> Result<()> {
    let grad = surrogate_gradient(model, groups, params)?;
    model.apply(&grad, params.learning_rate);
    Ok(())
}

/// A training prompt: query text and the true location.
#[derive(Debug, Clone, PartialEq)]
pub struct Prompt {
    pub id: String,
    pub query: String,
    pub truth: LatLon,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrpoConfig {
    pub group_size: usize,
    pub epochs: usize,
    /// Prompts per optimizer step; the old policy is re-snapshotted for
    /// every batch.
    pub batch_size: usize,
    pub temperature: f64,
    pub params: GrpoParams,
    pub reward: RewardParams,
    pub seed: u64,
}

impl Default for GrpoConfig {
    fn default() -> Self {
        GrpoConfig {
            group_size: 8,
            epochs: 3,
            batch_size: 16,
            temperature: 1.0,
            params: GrpoParams::default(),
            reward: RewardParams::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub mean_reward: f64,
    pub prompts: usize,
    pub rollouts: usize,
    pub invalid: usize,
}

fn rollout_group(
    model: &PolicyModel,
    prompt: &Prompt,
    feats: &QueryFeatures,
    config: &GrpoConfig,
    seed: u64,
) -> Result<(PromptGroup, RolloutGroup)> {
    let mut r = rng::indexed_stream(seed, "prompt", 0);
    let rollouts = (0..config.group_size)
        .map(|_| sample_rollout(model, feats, config.temperature, &mut r))
        .collect::<Result<Vec<_>>>()?;
    let scored = RolloutGroup::score(
        prompt.id.clone(),
        rollouts.iter().map(Rollout::text).collect(),
        prompt.truth,
        &config.reward,
    )?;
    Ok((
        PromptGroup {
            feats: feats.clone(),
            rollouts,
            advantages: scored.advantages.clone(),
        },
        scored,
    ))
}

/// Runs `epochs` passes of rollout, reward, advantage and update over the
/// prompts. Returns one log entry per epoch.
pub fn grpo_train(
    model: &mut PolicyModel,
    prompts: &[Prompt],
    config: &GrpoConfig,
) -> Result<Vec<EpochLog>> {
    if config.group_size < 2 {
        return Err(Error::InvalidArgument(format!(
            "group size must be at least 2, got {}",
            config.group_size
        )));
    }
    if config.batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    if prompts.is_empty() {
        return Err(Error::InvalidArgument("no prompts".into()));
    }
    config.reward.validated()?;
    let feats: Vec<QueryFeatures> = prompts.iter().map(|p| model.featurize(&p.query)).collect();

    let mut logs = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..prompts.len()).collect();
        {
            use rand::seq::SliceRandom;
            order.shuffle(&mut rng::indexed_stream(
                config.seed,
                "grpo-shuffle",
                epoch as u64,
            ));
        }
        let epoch_seed = rng::derive_seed(config.seed, "rollout", epoch as u64);
        let mut reward_sum = 0.0;
        let mut rollouts = 0;
        let mut invalid = 0;
        for batch in order.chunks(config.batch_size) {
            let snapshot: &PolicyModel = model;
            let results = batch
                .par_iter()
                .map(|&i| {
                    let seed = rng::derive_seed(epoch_seed, "prompt", i as u64);
                    rollout_group(snapshot, &prompts[i], &feats[i], config, seed)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut groups = Vec::with_capacity(results.len());
            for (group, scored) in results {
                reward_sum += scored.rewards.iter().sum::<f64>();
                rollouts += scored.rewards.len();
                invalid += scored
                    .rewards
                    .iter()
                    .filter(|&&r| r == config.reward.invalid_penalty)
                    .count();
                groups.push(group);
            }
            grpo_step(model, &groups, &config.params)?;
        }
        logs.push(EpochLog {
            epoch,
            mean_reward: reward_sum / rollouts as f64,
            prompts: prompts.len(),
            rollouts,
            invalid,
        });
    }
    Ok(logs)
}
