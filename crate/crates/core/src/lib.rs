//! Simulation of a repeated posted-price information market in which
//! buyers and sellers learn, and in which agents may additionally model
//! each other (levels 0, 1 and 2).
//!
//! * [`market`]: prices, qualities, value and profit, perception noise
//! * [`learning`]: annealing, reward tables, windowed densities
//! * [`agents`]: the buyer and seller strategies
//! * [`auction`]: the auction loop and run transcripts
//! * [`metrics`]: per-run statistics
//! * [`harness`]: experiment files, presets, replication and output

pub mod agents;
pub mod auction;
pub mod config;
pub mod harness;
pub mod learning;
pub mod market;
pub mod metrics;

pub use agents::{Bid, BuyerId, LearningParams, Level, ModelMode, SellerId};
pub use auction::{run_simulation, AuctionError, AuctionRecord, Market, RunTranscript, SimulationOutcome};
pub use config::{ConfigError, MarketConfig, Scheduling};
pub use market::{Money, Price, Quality, QualityNoiseModel, ValueParams};
pub use metrics::MetricsReport;
