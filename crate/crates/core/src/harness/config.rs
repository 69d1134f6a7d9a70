//! Experiment configuration files.
//!
//! The on-disk format is TOML with one flat entry per agent:
//!
//! ```toml
//! name = "example"
//! runs_per_population = 100        # default 100
//! auctions_per_run = 10000         # default 10000
//! base_seed = 1                    # default 0
//! epsilon_min = 0.05               # defaults as shown
//! alpha_min = 0.1
//! gamma = 0.99
//! window = 20
//! price_levels = 20
//! quality_levels = 20
//! scheduling = "round_robin"       # or "uniform_random"
//! level2_mode = "oracle"           # or "learned"
//! episode_min_len = 50
//!
//! [noise]                          # default: symmetric_step, 0.5
//! kind = "symmetric_step"          # or "none"
//! step_prob = 0.5
//!
//! [[population]]
//! name = "p1"
//! group = "two-peak"               # optional regression group label
//!
//! [[population.agent]]
//! id = "b1"
//! role = "buyer"
//! level = 0                        # buyers: 0 or 1
//! quality_weight = 3               # optional, default 3
//! price_weight = -1                # optional, default -1
//!
//! [[population.agent]]
//! id = "s1"
//! role = "seller"
//! level = 1                        # sellers: 0, 1 or 2
//! quality = 8
//! cost = 8                         # optional, defaults to quality
//! ```
//!
//! Unknown keys are rejected. Agents keep the order in which they are
//! listed; that order is the roster order used in transcripts.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agents::{LearningParams, Level, ModelMode};
use crate::config::{BuyerSpec, ConfigError, MarketConfig, Scheduling, SellerSpec};
use crate::market::{
    Money, Quality, QualityNoiseModel, ValueParams, DEFAULT_PRICE_LEVELS, DEFAULT_QUALITY_LEVELS,
};
use crate::metrics::DEFAULT_EPISODE_MIN_LEN;

pub const DEFAULT_RUNS: usize = 100;
pub const DEFAULT_AUCTIONS: u64 = 10_000;

/// One market of a population series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub market: MarketConfig,
    pub group: Option<String>,
}

impl Population {
    pub fn name(&self) -> &str {
        &self.market.name
    }
}

/// A population series with its replication plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub populations: Vec<Population>,
    pub runs_per_population: usize,
    pub auctions_per_run: u64,
    pub base_seed: u64,
    pub episode_min_len: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.populations.is_empty() {
            return Err(ConfigError::invalid("population", "at least one population is required"));
        }
        let mut names = std::collections::HashSet::new();
        for p in &self.populations {
            if !names.insert(p.name()) {
                return Err(ConfigError::invalid(
                    "population.name",
                    format!("duplicate population {:?}", p.name()),
                ));
            }
            if p.name().is_empty() || p.name().contains(['/', '\\', ',', '\n', '"']) {
                return Err(ConfigError::invalid(
                    "population.name",
                    format!("invalid population name {:?}", p.name()),
                ));
            }
            p.market.validate()?;
        }
        Ok(())
    }

    /// Serializes to the documented file format.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(&ExperimentFile::from(self)).expect("experiment config serializes")
    }
}

pub fn parse_config(text: &str, origin: &str) -> Result<ExperimentConfig, ConfigError> {
    let file: ExperimentFile = toml::from_str(text).map_err(|e| ConfigError::Parse {
        path: origin.to_string(),
        message: e.to_string(),
    })?;
    let cfg = file.into_config()?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text, &path.display().to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Role {
    Buyer,
    Seller,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentEntry {
    id: String,
    role: Role,
    level: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    quality: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cost: Option<Money>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    quality_weight: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    price_weight: Option<i64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PopulationEntry {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    group: Option<String>,
    #[serde(rename = "agent")]
    agents: Vec<AgentEntry>,
}

fn default_runs() -> usize {
    DEFAULT_RUNS
}
fn default_auctions() -> u64 {
    DEFAULT_AUCTIONS
}
fn default_epsilon_min() -> f64 {
    LearningParams::default().epsilon_min
}
fn default_alpha_min() -> f64 {
    LearningParams::default().alpha_min
}
fn default_gamma() -> f64 {
    LearningParams::default().gamma
}
fn default_window() -> usize {
    LearningParams::default().window
}
fn default_price_levels() -> u32 {
    DEFAULT_PRICE_LEVELS
}
fn default_quality_levels() -> u32 {
    DEFAULT_QUALITY_LEVELS
}
fn default_level2_mode() -> ModelMode {
    ModelMode::Oracle
}
fn default_episode_min_len() -> usize {
    DEFAULT_EPISODE_MIN_LEN
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentFile {
    name: String,
    #[serde(default = "default_runs")]
    runs_per_population: usize,
    #[serde(default = "default_auctions")]
    auctions_per_run: u64,
    #[serde(default)]
    base_seed: u64,
    #[serde(default = "default_epsilon_min")]
    epsilon_min: f64,
    #[serde(default = "default_alpha_min")]
    alpha_min: f64,
    #[serde(default = "default_gamma")]
    gamma: f64,
    #[serde(default = "default_window")]
    window: usize,
    #[serde(default = "default_price_levels")]
    price_levels: u32,
    #[serde(default = "default_quality_levels")]
    quality_levels: u32,
    #[serde(default)]
    scheduling: Scheduling,
    #[serde(default = "default_level2_mode")]
    level2_mode: ModelMode,
    #[serde(default = "default_episode_min_len")]
    episode_min_len: usize,
    #[serde(default)]
    noise: QualityNoiseModel,
    #[serde(rename = "population")]
    populations: Vec<PopulationEntry>,
}

impl ExperimentFile {
    fn into_config(self) -> Result<ExperimentConfig, ConfigError> {
        let learning = LearningParams {
            epsilon_min: self.epsilon_min,
            alpha_min: self.alpha_min,
            gamma: self.gamma,
            window: self.window,
        };
        let mut populations = Vec::with_capacity(self.populations.len());
        for pop in self.populations {
            let mut market = MarketConfig::new(pop.name.clone());
            market.price_levels = self.price_levels;
            market.quality_levels = self.quality_levels;
            market.learning = learning;
            market.noise = self.noise;
            market.scheduling = self.scheduling;
            market.level2_mode = self.level2_mode;
            for a in pop.agents {
                let field = |f: &str| format!("{}.{}.{}", pop.name, a.id, f);
                let level = Level::try_from(a.level).map_err(|m| ConfigError::invalid(field("level"), m))?;
                match a.role {
                    Role::Buyer => {
                        if a.quality.is_some() || a.cost.is_some() {
                            return Err(ConfigError::invalid(field("quality"), "buyers have no quality or cost"));
                        }
                        let defaults = ValueParams::default();
                        market.buyers.push(BuyerSpec {
                            id: a.id,
                            level,
                            value_params: ValueParams {
                                quality_weight: a.quality_weight.unwrap_or(defaults.quality_weight),
                                price_weight: a.price_weight.unwrap_or(defaults.price_weight),
                            },
                        });
                    }
                    Role::Seller => {
                        if a.quality_weight.is_some() || a.price_weight.is_some() {
                            return Err(ConfigError::invalid(field("quality_weight"), "sellers have no value function"));
                        }
                        let quality = a
                            .quality
                            .ok_or_else(|| ConfigError::invalid(field("quality"), "sellers need a quality"))?;
                        market.sellers.push(SellerSpec {
                            id: a.id,
                            level,
                            quality: Quality(quality),
                            cost: a.cost.unwrap_or(Money::from(quality)),
                        });
                    }
                }
            }
            populations.push(Population {
                market,
                group: pop.group,
            });
        }
        Ok(ExperimentConfig {
            name: self.name,
            populations,
            runs_per_population: self.runs_per_population,
            auctions_per_run: self.auctions_per_run,
            base_seed: self.base_seed,
            episode_min_len: self.episode_min_len,
        })
    }
}

impl From<&ExperimentConfig> for ExperimentFile {
    fn from(cfg: &ExperimentConfig) -> Self {
        let first = cfg
            .populations
            .first()
            .map(|p| p.market.clone())
            .unwrap_or_else(|| MarketConfig::new(""));
        ExperimentFile {
            name: cfg.name.clone(),
            runs_per_population: cfg.runs_per_population,
            auctions_per_run: cfg.auctions_per_run,
            base_seed: cfg.base_seed,
            epsilon_min: first.learning.epsilon_min,
            alpha_min: first.learning.alpha_min,
            gamma: first.learning.gamma,
            window: first.learning.window,
            price_levels: first.price_levels,
            quality_levels: first.quality_levels,
            scheduling: first.scheduling,
            level2_mode: first.level2_mode,
            episode_min_len: cfg.episode_min_len,
            noise: first.noise,
            populations: cfg
                .populations
                .iter()
                .map(|p| PopulationEntry {
                    name: p.market.name.clone(),
                    group: p.group.clone(),
                    agents: p
                        .market
                        .buyers
                        .iter()
                        .map(|b| AgentEntry {
                            id: b.id.clone(),
                            role: Role::Buyer,
                            level: b.level.into(),
                            quality: None,
                            cost: None,
                            quality_weight: Some(b.value_params.quality_weight),
                            price_weight: Some(b.value_params.price_weight),
                        })
                        .chain(p.market.sellers.iter().map(|s| AgentEntry {
                            id: s.id.clone(),
                            role: Role::Seller,
                            level: s.level.into(),
                            quality: Some(s.quality.0),
                            cost: Some(s.cost),
                            quality_weight: None,
                            price_weight: None,
                        }))
                        .collect(),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
name = "small"
runs_per_population = 3
auctions_per_run = 50

[[population]]
name = "p1"

[[population.agent]]
id = "b1"
role = "buyer"
level = 0

[[population.agent]]
id = "s1"
role = "seller"
level = 1
quality = 8

[[population.agent]]
id = "s2"
role = "seller"
level = 0
quality = 2
cost = 3
"#;

    #[test]
    fn parses_with_defaults() {
        let cfg = parse_config(SMALL, "small.toml").unwrap();
        assert_eq!(cfg.runs_per_population, 3);
        assert_eq!(cfg.base_seed, 0);
        let m = &cfg.populations[0].market;
        assert_eq!(m.learning, LearningParams::default());
        assert_eq!(m.noise, QualityNoiseModel::default());
        assert_eq!(m.sellers[0].cost, 8);
        assert_eq!(m.sellers[1].cost, 3);
        assert_eq!(m.buyers[0].value_params, ValueParams::default());
        assert_eq!(m.level2_mode, ModelMode::Oracle);
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = SMALL.replace("runs_per_population = 3", "runs_per_populaton = 3");
        let err = parse_config(&text, "x.toml").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { .. }), "{err}");
        let text = SMALL.replace("quality = 8", "quality = 8\ncolour = 2");
        assert!(parse_config(&text, "x.toml").is_err());
    }

    #[test]
    fn rejects_cost_above_max_price() {
        let text = SMALL.replace("cost = 3", "cost = 25");
        let err = parse_config(&text, "x.toml").unwrap_err().to_string();
        assert!(err.contains("p1.s2.cost"), "{err}");
    }

    #[test]
    fn rejects_bad_levels_and_missing_quality() {
        let text = SMALL.replacen("level = 0", "level = 3", 1);
        assert!(parse_config(&text, "x.toml").unwrap_err().to_string().contains("b1.level"));
        let text = SMALL.replace("quality = 8\n", "");
        assert!(parse_config(&text, "x.toml").unwrap_err().to_string().contains("s1.quality"));
    }

    #[test]
    fn toml_round_trip() {
        let cfg = parse_config(SMALL, "small.toml").unwrap();
        let again = parse_config(&cfg.to_toml(), "dump").unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn load_reports_missing_files() {
        let err = load_config("/nonexistent/infomarket.toml").unwrap_err();
        assert!(matches!(err, ConfigError::Io { .. }));
    }
}
