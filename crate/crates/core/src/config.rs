//! Ensemble configuration: transform registry selection, codec/scale matrix,
//! statistical feature parameters and the corpus seed.
//!
//! Configs are TOML. The committed `default.cfg` is [`Config::default`]
//! serialized with [`Config::to_toml`].

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::codecs::CodecId;
use crate::features::{FeatureError, StatConfig};
use crate::imageio::TARGET_PIXELS;
use crate::transforms::{default_specs, lookup, TransformError, TransformSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Stats(#[from] FeatureError),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub codecs: Vec<CodecId>,
    pub scales: Vec<f64>,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig { codecs: CodecId::ALL.to_vec(), scales: vec![1.0, 0.4, 0.2, 0.1] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub seed: u64,
    pub target_pixels: usize,
    pub baseline: BaselineConfig,
    pub stats: StatConfig,
    #[serde(rename = "transform", default)]
    pub transforms: Vec<TransformSpec>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 20231,
            target_pixels: TARGET_PIXELS,
            baseline: BaselineConfig::default(),
            stats: StatConfig::default(),
            transforms: default_specs(),
        }
    }
}

/// Canonical text of a scale in feature ids (`1`, `0.4`).
pub fn scale_label(s: f64) -> String {
    format!("{s}")
}

/// A feature column.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureKey {
    Baseline { codec: CodecId, scale: f64 },
    Transform { index: usize, codec: CodecId, scale: f64 },
    Stat { index: usize },
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Config = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.target_pixels < 64 {
            return Err(ConfigError::Invalid("target_pixels too small".into()));
        }
        if self.baseline.codecs.is_empty() || self.baseline.scales.is_empty() {
            return Err(ConfigError::Invalid("baseline needs at least one codec and scale".into()));
        }
        if !self.baseline.scales.contains(&1.0) || !self.baseline.codecs.contains(&CodecId::Gif) {
            return Err(ConfigError::Invalid("baseline must include gif at scale 1".into()));
        }
        if self.baseline.scales.iter().any(|&s| !(s > 0.0 && s <= 1.0)) {
            return Err(ConfigError::Invalid("baseline scales must lie in (0, 1]".into()));
        }
        for t in &self.transforms {
            t.validate()?;
        }
        self.stats.validate()?;
        let ids = self.feature_ids();
        let unique: BTreeSet<&String> = ids.iter().collect();
        if unique.len() != ids.len() {
            return Err(ConfigError::Invalid("duplicate feature ids".into()));
        }
        Ok(())
    }

    /// Feature columns in output order: baselines, transform ratios, stats.
    pub fn feature_keys(&self) -> Vec<FeatureKey> {
        let mut keys = Vec::new();
        for &codec in &self.baseline.codecs {
            for &scale in &self.baseline.scales {
                keys.push(FeatureKey::Baseline { codec, scale });
            }
        }
        for (index, t) in self.transforms.iter().enumerate() {
            for &codec in &t.codecs {
                for &scale in &t.scales {
                    keys.push(FeatureKey::Transform { index, codec, scale });
                }
            }
        }
        for index in 0..self.stats.names().len() {
            keys.push(FeatureKey::Stat { index });
        }
        keys
    }

    pub fn feature_id(&self, key: &FeatureKey) -> String {
        match key {
            FeatureKey::Baseline { codec, scale } => format!("b_{codec}_{}", scale_label(*scale)),
            FeatureKey::Transform { index, codec, scale } => {
                format!("c_{}_{codec}_{}", self.transforms[*index].id, scale_label(*scale))
            }
            FeatureKey::Stat { index } => format!("s_{}", self.stats.names()[*index]),
        }
    }

    pub fn feature_ids(&self) -> Vec<String> {
        self.feature_keys().iter().map(|k| self.feature_id(k)).collect()
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    /// Adds a transform at its registry defaults.
    pub fn with_transform(mut self, id: &str) -> Result<Self, ConfigError> {
        self.transforms.push(lookup(id)?.default_spec());
        self.validate()?;
        Ok(self)
    }
}
