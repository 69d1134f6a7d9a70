//! Population rosters and economy parameters for a single market.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::agents::{LearningParams, Level, ModelMode};
use crate::market::{Money, Quality, QualityNoiseModel, ValueParams, DEFAULT_PRICE_LEVELS, DEFAULT_QUALITY_LEVELS};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    #[error("failed to parse {path}: {message}")]
    Parse { path: String, message: String },
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ConfigError {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }
}

/// Order in which buyers request bids.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheduling {
    #[default]
    RoundRobin,
    UniformRandom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuyerSpec {
    pub id: String,
    pub level: Level,
    #[serde(default)]
    pub value_params: ValueParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SellerSpec {
    pub id: String,
    pub level: Level,
    pub quality: Quality,
    pub cost: Money,
}

/// Everything needed to build one economy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketConfig {
    pub name: String,
    pub price_levels: u32,
    pub quality_levels: u32,
    pub learning: LearningParams,
    pub noise: QualityNoiseModel,
    pub scheduling: Scheduling,
    pub level2_mode: ModelMode,
    pub buyers: Vec<BuyerSpec>,
    pub sellers: Vec<SellerSpec>,
}

impl MarketConfig {
    /// Empty roster with default economy parameters.
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            price_levels: DEFAULT_PRICE_LEVELS,
            quality_levels: DEFAULT_QUALITY_LEVELS,
            learning: LearningParams::default(),
            noise: QualityNoiseModel::default(),
            scheduling: Scheduling::RoundRobin,
            level2_mode: ModelMode::Oracle,
            buyers: Vec::new(),
            sellers: Vec::new(),
        }
    }

    pub fn with_buyers(mut self, count: usize, level: Level) -> Self {
        let start = self.buyers.len();
        self.buyers.extend((start..start + count).map(|i| BuyerSpec {
            id: format!("b{}", i + 1),
            level,
            value_params: ValueParams::default(),
        }));
        self
    }

    /// Adds a seller whose cost equals its quality.
    pub fn with_seller(mut self, level: Level, quality: u32) -> Self {
        let i = self.sellers.len();
        self.sellers.push(SellerSpec {
            id: format!("s{}", i + 1),
            level,
            quality: Quality(quality),
            cost: Money::from(quality),
        });
        self
    }

    pub fn max_price(&self) -> Money {
        Money::from(self.price_levels) - 1
    }

    pub fn seller_costs(&self) -> Vec<Money> {
        self.sellers.iter().map(|s| s.cost).collect()
    }

    pub fn seller_index(&self, id: &str) -> Option<usize> {
        self.sellers.iter().position(|s| s.id == id)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let name = &self.name;
        if self.price_levels == 0 {
            return Err(ConfigError::invalid(format!("{name}.price_levels"), "must be positive"));
        }
        if self.quality_levels == 0 {
            return Err(ConfigError::invalid(format!("{name}.quality_levels"), "must be positive"));
        }
        let l = &self.learning;
        for (field, v) in [("epsilon_min", l.epsilon_min), ("alpha_min", l.alpha_min)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ConfigError::invalid(format!("{name}.{field}"), format!("{v} is not in [0, 1]")));
            }
        }
        if !(l.gamma > 0.0 && l.gamma < 1.0) {
            return Err(ConfigError::invalid(format!("{name}.gamma"), format!("{} is not in (0, 1)", l.gamma)));
        }
        if l.window == 0 {
            return Err(ConfigError::invalid(format!("{name}.window"), "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.noise.step_prob) {
            return Err(ConfigError::invalid(
                format!("{name}.noise.step_prob"),
                format!("{} is not a probability", self.noise.step_prob),
            ));
        }
        if self.buyers.is_empty() {
            return Err(ConfigError::invalid(format!("{name}.buyers"), "at least one buyer is required"));
        }
        if self.sellers.is_empty() {
            return Err(ConfigError::invalid(format!("{name}.sellers"), "at least one seller is required"));
        }
        let mut seen = HashSet::new();
        for id in self.buyers.iter().map(|b| &b.id).chain(self.sellers.iter().map(|s| &s.id)) {
            if id.is_empty() || id.contains([',', '\t', '\n', '#', '"']) {
                return Err(ConfigError::invalid(format!("{name}.agent"), format!("invalid agent id {id:?}")));
            }
            if !seen.insert(id) {
                return Err(ConfigError::invalid(format!("{name}.agent"), format!("duplicate agent id {id:?}")));
            }
        }
        for b in &self.buyers {
            if b.level == Level::Two {
                return Err(ConfigError::invalid(
                    format!("{name}.{}.level", b.id),
                    "buyers are level 0 or 1",
                ));
            }
        }
        for s in &self.sellers {
            if s.quality.0 >= self.quality_levels {
                return Err(ConfigError::invalid(
                    format!("{name}.{}.quality", s.id),
                    format!("{} is outside 0..{}", s.quality.0, self.quality_levels),
                ));
            }
            if s.cost > self.max_price() {
                return Err(ConfigError::invalid(
                    format!("{name}.{}.cost", s.id),
                    format!("{} exceeds the maximum price {}", s.cost, self.max_price()),
                ));
            }
        }
        let level2 = self.sellers.iter().filter(|s| s.level == Level::Two).count();
        if self.level2_mode == ModelMode::Oracle && level2 > 1 {
            return Err(ConfigError::invalid(
                format!("{name}.level2_mode"),
                "oracle mode supports at most one level 2 seller",
            ));
        }
        // Level 1 win weights are products of window counts over the rivals.
        let uses_level1_math = self.sellers.iter().any(|s| s.level != Level::Zero);
        let bound = (l.window as f64).powi(self.sellers.len() as i32 - 1) * f64::from(self.price_levels);
        if uses_level1_math && bound > 1e36 {
            return Err(ConfigError::invalid(
                format!("{name}.window"),
                "window and seller count too large for exact level 1 arithmetic",
            ));
        }
        Ok(())
    }

    /// Short digest identifying this configuration in transcripts.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> MarketConfig {
        MarketConfig::new("t")
            .with_buyers(2, Level::Zero)
            .with_seller(Level::Zero, 8)
            .with_seller(Level::One, 2)
    }

    #[test]
    fn valid_config_passes() {
        small().validate().unwrap();
    }

    #[test]
    fn cost_above_max_price_is_rejected() {
        let mut c = small();
        c.sellers[0].cost = 25;
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("s1.cost"), "{err}");
    }

    #[test]
    fn level2_buyers_and_duplicate_ids_are_rejected() {
        let mut c = small();
        c.buyers[0].level = Level::Two;
        assert!(c.validate().is_err());

        let mut c = small();
        c.sellers[1].id = "b1".into();
        assert!(c.validate().unwrap_err().to_string().contains("duplicate"));
    }

    #[test]
    fn two_oracle_level2_sellers_are_rejected() {
        let c = small().with_seller(Level::Two, 3).with_seller(Level::Two, 3);
        assert!(c.validate().is_err());
        let mut learned = c.clone();
        learned.level2_mode = ModelMode::Learned;
        learned.validate().unwrap();
    }

    #[test]
    fn hash_tracks_content() {
        let a = small();
        let mut b = small();
        assert_eq!(a.hash(), b.hash());
        b.sellers[0].quality = Quality(7);
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
    }
}
