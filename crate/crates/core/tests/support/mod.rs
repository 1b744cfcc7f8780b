//! Randomized checks against the oracles, shared with the acceptance suite.
#![allow(dead_code)]

use geoseq_core::grpo::{self, GrpoParams, PromptGroup};
use geoseq_core::policy::{self, Param, PolicyModel, QueryFeatures, Rollout, PREV_STATES, VOCAB};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::oracles;

pub const FD_STEP: f64 = 1e-5;
pub const FD_REL: f64 = 1e-6;
/// Entries this small are compared absolutely; they are zero analytically
/// up to rounding in the difference quotient.
pub const FD_ABS_FLOOR: f64 = 1e-9;

pub fn all_params(model: &PolicyModel) -> Vec<Param> {
    let mut out = Vec::new();
    for position in 0..model.sequence_length() {
        for prev in 0..PREV_STATES {
            let prev = (prev < VOCAB).then_some(prev as u8);
            for symbol in 0..VOCAB as u8 {
                out.push(Param::Prev {
                    position,
                    prev,
                    symbol,
                });
            }
        }
        for bucket in 0..model.buckets() as u32 {
            for symbol in 0..VOCAB as u8 {
                out.push(Param::Feature {
                    bucket,
                    position,
                    symbol,
                });
            }
        }
    }
    out
}

pub fn random_feats(r: &mut ChaCha8Rng, buckets: u32) -> QueryFeatures {
    let n = r.gen_range(1..6);
    QueryFeatures::from_ids((0..n).map(|_| r.gen_range(0..buckets)).collect())
}

/// Compares `grad(p)` with central differences of `objective` for every
/// weight; returns the worst relative error seen.
fn check_every_param<G, F>(
    model: &mut PolicyModel,
    grad: G,
    mut objective: F,
) -> Result<f64, String>
where
    G: Fn(Param) -> f64,
    F: FnMut(&PolicyModel) -> f64,
{
    let mut worst = 0.0f64;
    for p in all_params(model) {
        let w = model.param(p);
        let numeric = oracles::central_diff(w, FD_STEP, |x| {
            *model.param_mut(p) = x;
            objective(model)
        });
        *model.param_mut(p) = w;
        let analytic = grad(p);
        if !oracles::close_rel(analytic, numeric, FD_REL, FD_ABS_FLOOR) {
            return Err(format!("{p:?}: analytic {analytic:e} numeric {numeric:e}"));
        }
        let scale = analytic.abs().max(numeric.abs());
        if scale > 1e-3 {
            worst = worst.max((analytic - numeric).abs() / scale);
        }
    }
    Ok(worst)
}

/// MLE gradient against finite differences on `instances` random models.
pub fn mle_gradient_check(seed: u64, instances: usize) -> Result<f64, String> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let mut model = PolicyModel::random(8, 3, 1.0, &mut r).unwrap();
        let feats = random_feats(&mut r, 8);
        let target: Vec<u8> = (0..3).map(|_| r.gen_range(0..VOCAB as u8)).collect();
        let grad = model.log_likelihood_gradient(&feats, &target);
        let w = check_every_param(
            &mut model,
            |p| grad.get(p),
            |m| m.sequence_log_prob(&feats, &target),
        )?;
        worst = worst.max(w);
    }
    Ok(worst)
}

/// Small random GRPO instance with no token ratio near a clip boundary.
pub fn grpo_instance(r: &mut ChaCha8Rng) -> (PolicyModel, Vec<PromptGroup>, GrpoParams) {
    loop {
        let old = PolicyModel::random(8, 3, 0.5, r).unwrap();
        let mut model = old.clone();
        for p in all_params(&model) {
            *model.param_mut(p) += r.gen_range(-0.15..0.15);
        }
        let params = GrpoParams {
            clip_eps: 0.2,
            learning_rate: 1.0,
            kl_coeff: r.gen_range(0.0..0.5),
        };
        let groups: Vec<PromptGroup> = (0..3)
            .map(|_| {
                let feats = random_feats(r, 8);
                let rollouts: Vec<Rollout> = (0..4)
                    .map(|_| policy::sample_rollout(&old, &feats, 1.0, r).unwrap())
                    .collect();
                let advantages = (0..4).map(|_| r.gen_range(-1.5..1.5)).collect();
                PromptGroup {
                    feats,
                    rollouts,
                    advantages,
                }
            })
            .collect();
        let near_kink = groups.iter().any(|g| {
            g.rollouts.iter().any(|ro| {
                let new = model.token_log_probs(&g.feats, &ro.symbols);
                new.iter().zip(&ro.log_probs).any(|(n, o)| {
                    let ratio = (n - o).exp();
                    (ratio - 1.0 - params.clip_eps).abs() < 1e-3
                        || (ratio - 1.0 + params.clip_eps).abs() < 1e-3
                })
            })
        });
        if !near_kink {
            return (model, groups, params);
        }
    }
}

/// Clipped-surrogate gradient against finite differences.
pub fn surrogate_gradient_check(seed: u64, instances: usize) -> Result<f64, String> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let (mut model, groups, params) = grpo_instance(&mut r);
        let grad = grpo::surrogate_gradient(&model, &groups, &params).map_err(|e| e.to_string())?;
        let w = check_every_param(
            &mut model,
            |p| grad.get(p),
            |m| grpo::surrogate_objective(m, &groups, &params).unwrap(),
        )?;
        worst = worst.max(w);
    }
    Ok(worst)
}

/// Full-width beam search against enumeration of all 32^3 sequences.
pub fn beam_exhaustive_check(seed: u64, models: usize) -> Result<(), String> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..models {
        let model = PolicyModel::random(8, 3, 2.0, &mut r).unwrap();
        let feats = random_feats(&mut r, 8);
        let k = r.gen_range(1..=20);
        let beams = model
            .beam_search(&feats, VOCAB.pow(3), k)
            .map_err(|e| e.to_string())?;
        let truth = oracles::exhaustive_top_k(VOCAB, 3, k, |s| model.sequence_log_prob(&feats, s));
        if beams.len() != truth.len() {
            return Err(format!(
                "model {i}: {} beams, {} expected",
                beams.len(),
                truth.len()
            ));
        }
        for (rank, (b, (seq, lp))) in beams.iter().zip(&truth).enumerate() {
            if &b.symbols != seq || (b.log_prob - lp).abs() > 1e-12 {
                return Err(format!("model {i} rank {rank}: {:?} vs {seq:?}", b.symbols));
            }
        }
    }
    Ok(())
}

/// Width-1 beam search against greedy decoding.
pub fn width_one_check(seed: u64, models: usize) -> Result<(), String> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..models {
        let model = PolicyModel::random(16, 9, 2.0, &mut r).unwrap();
        let feats = random_feats(&mut r, 16);
        let beams = model.beam_search(&feats, 1, 1).map_err(|e| e.to_string())?;
        if beams[0].symbols != model.greedy_decode(&feats) {
            return Err(format!("model {i}: width 1 differs from greedy"));
        }
    }
    Ok(())
}

/// On a uniform model every sequence ties; the order must be lexicographic
/// and identical across runs.
pub fn tie_break_check() -> Result<(), String> {
    let model = PolicyModel::new(8, 3).unwrap();
    let feats = QueryFeatures::from_ids(vec![0]);
    if model.greedy_decode(&feats) != vec![0, 0, 0] {
        return Err("greedy does not prefer the smallest symbol".into());
    }
    let beams = model
        .beam_search(&feats, 64, 4)
        .map_err(|e| e.to_string())?;
    let seqs: Vec<_> = beams.iter().map(|b| b.symbols.clone()).collect();
    if seqs != vec![vec![0, 0, 0], vec![0, 0, 1], vec![0, 0, 2], vec![0, 0, 3]] {
        return Err(format!("tie order {seqs:?}"));
    }
    if model
        .beam_search(&feats, 64, 4)
        .map_err(|e| e.to_string())?
        != beams
    {
        return Err("beam search is not repeatable".into());
    }
    Ok(())
}
