//! Run configuration echoed into every artifact.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::DirectionSet;
use crate::geohash::DEFAULT_LENGTH;
use crate::reward::RewardParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SftSettings {
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for SftSettings {
    fn default() -> Self {
        SftSettings {
            epochs: 40,
            learning_rate: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrpoSettings {
    pub group_size: usize,
    pub clip_eps: f64,
    pub kl_coeff: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub temperature: f64,
}

impl Default for GrpoSettings {
    fn default() -> Self {
        GrpoSettings {
            group_size: 8,
            clip_eps: 0.2,
            kl_coeff: 0.0,
            epochs: 3,
            learning_rate: 0.5,
            batch_size: 16,
            temperature: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSettings {
    pub offset_min_m: f64,
    pub offset_max_m: f64,
    pub directions: DirectionSet,
}

impl Default for DatasetSettings {
    fn default() -> Self {
        DatasetSettings {
            offset_min_m: 30.0,
            offset_max_m: 500.0,
            directions: DirectionSet::Cardinal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub seed: u64,
    pub geohash_length: usize,
    pub reward: RewardParams,
    pub grpo: GrpoSettings,
    pub sft: SftSettings,
    pub dataset: DatasetSettings,
    /// Command-specific options and file paths.
    pub options: BTreeMap<String, serde_json::Value>,
}

impl RunConfig {
    pub fn new(command: impl Into<String>, seed: u64) -> Self {
        RunConfig {
            command: command.into(),
            seed,
            geohash_length: DEFAULT_LENGTH,
            reward: RewardParams::default(),
            grpo: GrpoSettings::default(),
            sft: SftSettings::default(),
            dataset: DatasetSettings::default(),
            options: BTreeMap::new(),
        }
    }

    pub fn with_option(mut self, key: &str, value: impl Serialize) -> Self {
        self.options.insert(
            key.to_owned(),
            serde_json::to_value(value).expect("option values serialize"),
        );
        self
    }

    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}
