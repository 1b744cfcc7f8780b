//! Tabular log-linear autoregressive policy over geohash symbols.
//!
//! The logit of symbol `s` at position `t` after previous symbol `prev` is
//!
//! ```text
//! prev_table[t][prev][s] + sum over active features f of feat_table[f][t][s]
//! ```
//!
//! and the next-symbol distribution is the softmax over all 32 symbols.
//! Output length is fixed; there is no end-of-sequence token.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geohash::{Geohash, DEFAULT_LENGTH};
use crate::rng;

pub const VOCAB: usize = 32;
/// Number of previous-symbol states: 32 symbols plus the start sentinel.
pub const PREV_STATES: usize = VOCAB + 1;
pub const START: usize = VOCAB;
pub const DEFAULT_BUCKETS: usize = 4096;
pub const FORMAT_VERSION: u32 = 1;
pub const FEATURE_HASH: &str = "fnv1a64";

/// Hashed feature buckets of one query, sorted and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryFeatures {
    ids: Vec<u32>,
}

impl QueryFeatures {
    pub fn from_ids(mut ids: Vec<u32>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        QueryFeatures { ids }
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

fn bucket_of(bytes: &[u8], buckets: usize) -> u32 {
    (rng::fnv1a64(bytes) % buckets as u64) as u32
}

/// Character trigrams of the lowercased query plus one whole-query bucket.
pub fn featurize(query: &str, buckets: usize) -> QueryFeatures {
    assert!(buckets > 0, "bucket count must be positive");
    let lower = query.to_lowercase();
    let chars: Vec<char> = lower.chars().collect();
    let mut ids = Vec::with_capacity(chars.len() + 1);
    let mut buf = String::new();
    for w in chars.windows(3) {
        buf.clear();
        buf.extend(w);
        ids.push(bucket_of(buf.as_bytes(), buckets));
    }
    let mut whole = Vec::with_capacity(lower.len() + 1);
    whole.push(0u8);
    whole.extend_from_slice(lower.as_bytes());
    ids.push(bucket_of(&whole, buckets));
    QueryFeatures::from_ids(ids)
}

fn prev_state(prev: Option<u8>) -> usize {
    match prev {
        Some(s) => {
            debug_assert!((s as usize) < VOCAB);
            s as usize
        }
        None => START,
    }
}

fn softmax_in_place(v: &mut [f64; VOCAB]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

fn log_softmax(logits: &[f64; VOCAB]) -> [f64; VOCAB] {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
    let mut out = [0.0; VOCAB];
    for (o, x) in out.iter_mut().zip(logits) {
        *o = x - lse;
    }
    out
}

/// Lowest index among the maxima.
fn argmax(v: &[f64; VOCAB]) -> u8 {
    let mut best = 0;
    for i in 1..VOCAB {
        if v[i] > v[best] {
            best = i;
        }
    }
    best as u8
}

/// One scalar weight of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    Prev {
        position: usize,
        prev: Option<u8>,
        symbol: u8,
    },
    Feature {
        bucket: u32,
        position: usize,
        symbol: u8,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Row {
    Prev { position: usize, prev: usize },
    Feature { bucket: u32, position: usize },
}

/// Sparse gradient with the model's row layout.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gradient {
    rows: BTreeMap<Row, [f64; VOCAB]>,
}

impl Gradient {
    fn row_mut(&mut self, row: Row) -> &mut [f64; VOCAB] {
        self.rows.entry(row).or_insert([0.0; VOCAB])
    }

    /// Adds `scale * coeffs` to every row active at (`position`, `prev`).
    fn add_token(
        &mut self,
        feats: &QueryFeatures,
        position: usize,
        prev: usize,
        coeffs: &[f64; VOCAB],
        scale: f64,
    ) {
        let r = self.row_mut(Row::Prev { position, prev });
        for (g, c) in r.iter_mut().zip(coeffs) {
            *g += scale * c;
        }
        for &bucket in feats.ids() {
            let r = self.row_mut(Row::Feature { bucket, position });
            for (g, c) in r.iter_mut().zip(coeffs) {
                *g += scale * c;
            }
        }
    }

    pub fn get(&self, p: Param) -> f64 {
        let (row, symbol) = match p {
            Param::Prev {
                position,
                prev,
                symbol,
            } => (
                Row::Prev {
                    position,
                    prev: prev_state(prev),
                },
                symbol,
            ),
            Param::Feature {
                bucket,
                position,
                symbol,
            } => (Row::Feature { bucket, position }, symbol),
        };
        self.rows.get(&row).map_or(0.0, |r| r[symbol as usize])
    }

    pub fn is_zero(&self) -> bool {
        self.rows.values().all(|r| r.iter().all(|&x| x == 0.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.rows
            .values()
            .flat_map(|r| r.iter())
            .fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn scale(&mut self, factor: f64) {
        for r in self.rows.values_mut() {
            for x in r.iter_mut() {
                *x *= factor;
            }
        }
    }

    pub fn merge(&mut self, other: &Gradient) {
        for (row, vals) in &other.rows {
            let r = self.row_mut(*row);
            for (g, v) in r.iter_mut().zip(vals) {
                *g += v;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyModel {
    buckets: usize,
    sequence_length: usize,
    prev_table: Vec<f64>,
    feat_table: Vec<f64>,
}

impl PolicyModel {
    pub fn new(buckets: usize, sequence_length: usize) -> Result<Self> {
        if buckets == 0 {
            return Err(Error::InvalidArgument(
                "bucket count must be positive".into(),
            ));
        }
        if !(1..=crate::geohash::MAX_LENGTH).contains(&sequence_length) {
            return Err(Error::InvalidArgument(format!(
                "sequence length {sequence_length} outside [1, 12]"
            )));
        }
        Ok(PolicyModel {
            buckets,
            sequence_length,
            prev_table: vec![0.0; sequence_length * PREV_STATES * VOCAB],
            feat_table: vec![0.0; buckets * sequence_length * VOCAB],
        })
    }

    /// Zero-initialized model with the default bucket count and length 9.
    pub fn standard() -> Self {
        Self::new(DEFAULT_BUCKETS, DEFAULT_LENGTH).expect("default dimensions are valid")
    }

    /// Model with every weight drawn uniformly from `[-scale, scale]`.
    pub fn random<R: Rng>(
        buckets: usize,
        sequence_length: usize,
        scale: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let mut m = Self::new(buckets, sequence_length)?;
        for w in m.prev_table.iter_mut().chain(m.feat_table.iter_mut()) {
            *w = rng.gen_range(-scale..=scale);
        }
        Ok(m)
    }

    pub fn buckets(&self) -> usize {
        self.buckets
    }

    pub fn sequence_length(&self) -> usize {
        self.sequence_length
    }

    pub fn featurize(&self, query: &str) -> QueryFeatures {
        featurize(query, self.buckets)
    }

    fn prev_offset(&self, position: usize, prev: usize) -> usize {
        (position * PREV_STATES + prev) * VOCAB
    }

    fn feat_offset(&self, bucket: u32, position: usize) -> usize {
        (bucket as usize * self.sequence_length + position) * VOCAB
    }

    fn row_slice_mut(&mut self, row: Row) -> &mut [f64] {
        match row {
            Row::Prev { position, prev } => {
                let o = self.prev_offset(position, prev);
                &mut self.prev_table[o..o + VOCAB]
            }
            Row::Feature { bucket, position } => {
                let o = self.feat_offset(bucket, position);
                &mut self.feat_table[o..o + VOCAB]
            }
        }
    }

    pub fn param(&self, p: Param) -> f64 {
        match p {
            Param::Prev {
                position,
                prev,
                symbol,
            } => self.prev_table[self.prev_offset(position, prev_state(prev)) + symbol as usize],
            Param::Feature {
                bucket,
                position,
                symbol,
            } => self.feat_table[self.feat_offset(bucket, position) + symbol as usize],
        }
    }

    pub fn param_mut(&mut self, p: Param) -> &mut f64 {
        match p {
            Param::Prev {
                position,
                prev,
                symbol,
            } => {
                let o = self.prev_offset(position, prev_state(prev));
                &mut self.prev_table[o + symbol as usize]
            }
            Param::Feature {
                bucket,
                position,
                symbol,
            } => {
                let o = self.feat_offset(bucket, position);
                &mut self.feat_table[o + symbol as usize]
            }
        }
    }

    fn check_feats(&self, feats: &QueryFeatures) {
        debug_assert!(feats.ids().iter().all(|&b| (b as usize) < self.buckets));
    }

    pub fn logits(&self, feats: &QueryFeatures, position: usize, prev: Option<u8>) -> [f64; VOCAB] {
        self.logits_state(feats, position, prev_state(prev))
    }

    fn logits_state(&self, feats: &QueryFeatures, position: usize, prev: usize) -> [f64; VOCAB] {
        assert!(position < self.sequence_length, "position out of range");
        self.check_feats(feats);
        let mut out = [0.0; VOCAB];
        let o = self.prev_offset(position, prev);
        out.copy_from_slice(&self.prev_table[o..o + VOCAB]);
        for &bucket in feats.ids() {
            let o = self.feat_offset(bucket, position);
            for (x, w) in out.iter_mut().zip(&self.feat_table[o..o + VOCAB]) {
                *x += w;
            }
        }
        out
    }

    /// Softmax over the 32 symbols at `position` after `prev` (`None` for
    /// the first position).
    pub fn next_distribution(
        &self,
        feats: &QueryFeatures,
        position: usize,
        prev: Option<u8>,
    ) -> [f64; VOCAB] {
        let mut v = self.logits(feats, position, prev);
        softmax_in_place(&mut v);
        v
    }

    pub fn next_log_probs(
        &self,
        feats: &QueryFeatures,
        position: usize,
        prev: Option<u8>,
    ) -> [f64; VOCAB] {
        log_softmax(&self.logits(feats, position, prev))
    }

    /// Per-token log-probabilities of `symbols`.
    pub fn token_log_probs(&self, feats: &QueryFeatures, symbols: &[u8]) -> Vec<f64> {
        let mut prev = START;
        symbols
            .iter()
            .enumerate()
            .map(|(t, &s)| {
                let lp = log_softmax(&self.logits_state(feats, t, prev))[s as usize];
                prev = s as usize;
                lp
            })
            .collect()
    }

    pub fn sequence_log_prob(&self, feats: &QueryFeatures, symbols: &[u8]) -> f64 {
        self.token_log_probs(feats, symbols).iter().sum()
    }

    /// Gradient of `log p(target | query)` with respect to every weight.
    pub fn log_likelihood_gradient(&self, feats: &QueryFeatures, target: &[u8]) -> Gradient {
        self.weighted_log_prob_gradient(feats, target, &vec![1.0; target.len()])
    }

    /// Gradient of `sum_t weights[t] * log p(symbols[t] | prefix)`.
    pub fn weighted_log_prob_gradient(
        &self,
        feats: &QueryFeatures,
        symbols: &[u8],
        weights: &[f64],
    ) -> Gradient {
        debug_assert_eq!(symbols.len(), weights.len());
        let mut grad = Gradient::default();
        let mut prev = START;
        for (t, (&s, &w)) in symbols.iter().zip(weights).enumerate() {
            if w != 0.0 {
                let mut coeffs = self.logits_state(feats, t, prev);
                softmax_in_place(&mut coeffs);
                for c in coeffs.iter_mut() {
                    *c = -*c;
                }
                coeffs[s as usize] += 1.0;
                grad.add_token(feats, t, prev, &coeffs, w);
            }
            prev = s as usize;
        }
        grad
    }

    /// `w += step * grad`.
    pub fn apply(&mut self, grad: &Gradient, step: f64) {
        for (row, vals) in &grad.rows {
            let dst = self.row_slice_mut(*row);
            for (w, g) in dst.iter_mut().zip(vals) {
                *w += step * g;
            }
        }
    }

    pub fn greedy_decode(&self, feats: &QueryFeatures) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.sequence_length);
        let mut prev = START;
        for t in 0..self.sequence_length {
            let s = argmax(&self.logits_state(feats, t, prev));
            out.push(s);
            prev = s as usize;
        }
        out
    }

    pub fn beam_search(
        &self,
        feats: &QueryFeatures,
        width: usize,
        top_k: usize,
    ) -> Result<Vec<Beam>> {
        beam_search_with(VOCAB, self.sequence_length, width, top_k, |prefix| {
            let prev = prefix.last().map_or(START, |&s| s as usize);
            log_softmax(&self.logits_state(feats, prefix.len(), prev)).to_vec()
        })
    }

    fn nonzero_feature_rows(&self) -> impl Iterator<Item = (u32, usize, &[f64])> {
        let len = self.sequence_length;
        self.feat_table
            .chunks_exact(VOCAB)
            .enumerate()
            .filter(|(_, row)| row.iter().any(|w| w.to_bits() != 0))
            .map(move |(i, row)| ((i / len) as u32, i % len, row))
    }
}

/// A sampled candidate with the sampling-time log-probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub symbols: Vec<u8>,
    pub log_probs: Vec<f64>,
    pub total_log_prob: f64,
}

impl Rollout {
    pub fn geohash(&self) -> Result<Geohash> {
        Geohash::from_symbols(&self.symbols)
    }

    /// The candidate as the policy would print it: space-separated symbols.
    pub fn text(&self) -> String {
        self.symbols
            .iter()
            .map(|&s| crate::geohash::symbol_char(s).to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Draws one sequence from temperature-scaled next-symbol distributions.
///
/// The recorded log-probabilities are those of the policy itself
/// (temperature 1), which is what the clipped ratio compares against.
pub fn sample_rollout<R: Rng>(
    model: &PolicyModel,
    feats: &QueryFeatures,
    temperature: f64,
    rng: &mut R,
) -> Result<Rollout> {
    if !(temperature > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    let n = model.sequence_length;
    let mut symbols = Vec::with_capacity(n);
    let mut log_probs = Vec::with_capacity(n);
    let mut prev = START;
    for t in 0..n {
        let logits = model.logits_state(feats, t, prev);
        let mut scaled = logits;
        for x in scaled.iter_mut() {
            *x /= temperature;
        }
        softmax_in_place(&mut scaled);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut pick = VOCAB - 1;
        for (i, p) in scaled.iter().enumerate() {
            acc += p;
            if u < acc {
                pick = i;
                break;
            }
        }
        // guard against the cumulative sum stopping short of 1 on a zero-mass tail
        while scaled[pick] == 0.0 && pick > 0 {
            pick -= 1;
        }
        log_probs.push(log_softmax(&logits)[pick]);
        symbols.push(pick as u8);
        prev = pick;
    }
    let total_log_prob = log_probs.iter().sum();
    Ok(Rollout {
        symbols,
        log_probs,
        total_log_prob,
    })
}

pub fn sample_rollout_seeded(
    model: &PolicyModel,
    feats: &QueryFeatures,
    temperature: f64,
    seed: u64,
) -> Result<Rollout> {
    let mut r = rng::stream(seed, "rollout");
    sample_rollout(model, feats, temperature, &mut r)
}

/// A complete beam.
#[derive(Debug, Clone, PartialEq)]
pub struct Beam {
    pub symbols: Vec<u8>,
    pub log_prob: f64,
}

impl Beam {
    pub fn geohash(&self) -> Result<Geohash> {
        Geohash::from_symbols(&self.symbols)
    }
}

/// Higher score first, then lexicographically smaller sequence.
pub fn beam_order(a: &Beam, b: &Beam) -> Ordering {
    b.log_prob
        .total_cmp(&a.log_prob)
        .then_with(|| a.symbols.cmp(&b.symbols))
}

/// Width-limited breadth search over `steps` positions.
///
/// `step_log_probs(prefix)` returns the `vocab` log-probabilities of the
/// next symbol. At every step the `width` best extensions survive; the
/// `top_k` best complete sequences are returned in [`beam_order`].
pub fn beam_search_with<F>(
    vocab: usize,
    steps: usize,
    width: usize,
    top_k: usize,
    mut step_log_probs: F,
) -> Result<Vec<Beam>>
where
    F: FnMut(&[u8]) -> Vec<f64>,
{
    if top_k == 0 || top_k > width {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= top_k <= width, got top_k={top_k} width={width}"
        )));
    }
    if vocab == 0 || vocab > 256 {
        return Err(Error::InvalidArgument(format!(
            "vocab size {vocab} unsupported"
        )));
    }
    let mut beams = vec![Beam {
        symbols: Vec::new(),
        log_prob: 0.0,
    }];
    for _ in 0..steps {
        let mut next = Vec::with_capacity(beams.len() * vocab);
        for beam in &beams {
            let lp = step_log_probs(&beam.symbols);
            debug_assert_eq!(lp.len(), vocab);
            for (s, l) in lp.iter().enumerate() {
                let mut symbols = Vec::with_capacity(steps);
                symbols.extend_from_slice(&beam.symbols);
                symbols.push(s as u8);
                next.push(Beam {
                    symbols,
                    log_prob: beam.log_prob + l,
                });
            }
        }
        if next.len() > width {
            next.select_nth_unstable_by(width - 1, beam_order);
            next.truncate(width);
        }
        next.sort_by(beam_order);
        beams = next;
    }
    beams.truncate(top_k);
    Ok(beams)
}

/// A featurized query paired with its target symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainExample {
    pub feats: QueryFeatures,
    pub target: Vec<u8>,
}

impl TrainExample {
    pub fn new(model: &PolicyModel, query: &str, target: &Geohash) -> Self {
        TrainExample {
            feats: model.featurize(query),
            target: target.symbols(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub shuffle: bool,
    pub seed: u64,
}

impl Default for MleConfig {
    fn default() -> Self {
        MleConfig {
            epochs: 40,
            learning_rate: 0.1,
            shuffle: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MleReport {
    /// Mean sequence log-likelihood over the data after each epoch.
    pub epoch_mean_log_likelihood: Vec<f64>,
}

pub fn mean_log_likelihood(model: &PolicyModel, data: &[TrainExample]) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    data.iter()
        .map(|ex| model.sequence_log_prob(&ex.feats, &ex.target))
        .sum::<f64>()
        / data.len() as f64
}

/// Per-example stochastic gradient ascent on the sequence log-likelihood.
pub fn mle_train(
    model: &mut PolicyModel,
    data: &[TrainExample],
    config: &MleConfig,
) -> Result<MleReport> {
    if let Some(bad) = data
        .iter()
        .find(|ex| ex.target.len() != model.sequence_length)
    {
        return Err(Error::InvalidArgument(format!(
            "target length {} does not match model sequence length {}",
            bad.target.len(),
            model.sequence_length
        )));
    }
    if !(config.learning_rate > 0.0) {
        return Err(Error::InvalidArgument(
            "learning rate must be positive".into(),
        ));
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut shuffler = rng::stream(config.seed, "sft-shuffle");
    let mut report = MleReport::default();
    for _ in 0..config.epochs {
        if config.shuffle {
            order.shuffle(&mut shuffler);
        }
        for &i in &order {
            let ex = &data[i];
            let g = model.log_likelihood_gradient(&ex.feats, &ex.target);
            model.apply(&g, config.learning_rate);
        }
        report
            .epoch_mean_log_likelihood
            .push(mean_log_likelihood(model, data));
    }
    Ok(report)
}

#[derive(Serialize, Deserialize)]
struct FeatureRow {
    bucket: u32,
    position: usize,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    feature_hash: String,
    #[serde(rename = "B")]
    buckets: usize,
    sequence_length: usize,
    prev_table: Vec<Vec<Vec<f64>>>,
    feat_table: Vec<FeatureRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config_echo: Option<serde_json::Value>,
}

pub fn save_model(
    model: &PolicyModel,
    path: &Path,
    config_echo: Option<&serde_json::Value>,
) -> Result<()> {
    let prev_table = model
        .prev_table
        .chunks_exact(PREV_STATES * VOCAB)
        .map(|pos| pos.chunks_exact(VOCAB).map(<[f64]>::to_vec).collect())
        .collect();
    let feat_table = model
        .nonzero_feature_rows()
        .map(|(bucket, position, row)| FeatureRow {
            bucket,
            position,
            weights: row.to_vec(),
        })
        .collect();
    let file = ModelFile {
        format_version: FORMAT_VERSION,
        feature_hash: FEATURE_HASH.to_owned(),
        buckets: model.buckets,
        sequence_length: model.sequence_length,
        prev_table,
        feat_table,
        config_echo: config_echo.cloned(),
    };
    let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer(&mut w, &file)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<PolicyModel> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let file: ModelFile = serde_json::from_reader(BufReader::new(f))
        .map_err(|e| Error::ModelFormat(format!("{}: {e}", path.display())))?;
    if file.format_version != FORMAT_VERSION {
        return Err(Error::ModelFormat(format!(
            "unsupported format_version {} (expected {FORMAT_VERSION})",
            file.format_version
        )));
    }
    if file.feature_hash != FEATURE_HASH {
        return Err(Error::ModelFormat(format!(
            "unsupported feature hash {:?}",
            file.feature_hash
        )));
    }
    let mut model = PolicyModel::new(file.buckets, file.sequence_length)
        .map_err(|e| Error::ModelFormat(e.to_string()))?;
    let shape_ok = file.prev_table.len() == file.sequence_length
        && file
            .prev_table
            .iter()
            .all(|pos| pos.len() == PREV_STATES && pos.iter().all(|row| row.len() == VOCAB));
    if !shape_ok {
        return Err(Error::ModelFormat("prev_table has wrong shape".into()));
    }
    for (dst, src) in model
        .prev_table
        .chunks_exact_mut(VOCAB)
        .zip(file.prev_table.iter().flatten())
    {
        dst.copy_from_slice(src);
    }
    for row in &file.feat_table {
        if row.bucket as usize >= file.buckets
            || row.position >= file.sequence_length
            || row.weights.len() != VOCAB
        {
            return Err(Error::ModelFormat(format!(
                "feature row (bucket {}, position {}) out of range",
                row.bucket, row.position
            )));
        }
        let o = model.feat_offset(row.bucket, row.position);
        model.feat_table[o..o + VOCAB].copy_from_slice(&row.weights);
    }
    if model
        .prev_table
        .iter()
        .chain(&model.feat_table)
        .any(|w| !w.is_finite())
    {
        return Err(Error::ModelFormat("non-finite weight".into()));
    }
    Ok(model)
}
