//! Measurements over run transcripts: price distribution, mean price,
//! volatility, per-agent outcomes, stable-price episodes and the
//! volatility / win-rate regression.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::auction::{AuctionRecord, RunTranscript};
use crate::config::MarketConfig;
use crate::market::{Money, Price};

/// Default minimum length of a stable-price episode.
pub const DEFAULT_EPISODE_MIN_LEN: usize = 50;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("metric is undefined on an empty transcript")]
    Empty,
    #[error("regression needs at least two points with distinct volatility")]
    DegenerateFit,
}

/// Number of price changes between consecutive auctions divided by the
/// number of auctions.
pub fn volatility(prices: &[Price]) -> Result<f64, MetricsError> {
    if prices.is_empty() {
        return Err(MetricsError::Empty);
    }
    let changes = prices.windows(2).filter(|w| w[0] != w[1]).count();
    Ok(changes as f64 / prices.len() as f64)
}

/// Fraction of auctions transacted at each price, indexed by price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceDistribution {
    pub mass: Vec<f64>,
}

impl PriceDistribution {
    pub fn mode(&self) -> Price {
        let mut best = 0;
        for (p, &m) in self.mass.iter().enumerate() {
            if m > self.mass[best] {
                best = p;
            }
        }
        Price(best as u32)
    }

    pub fn mean(&self) -> f64 {
        self.mass.iter().enumerate().map(|(p, m)| p as f64 * m).sum()
    }
}

pub fn price_distribution(prices: &[Price], price_levels: u32) -> Result<PriceDistribution, MetricsError> {
    if prices.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut counts = vec![0u64; price_levels as usize];
    for p in prices {
        counts[p.0 as usize] += 1;
    }
    let n = prices.len() as f64;
    Ok(PriceDistribution {
        mass: counts.into_iter().map(|c| c as f64 / n).collect(),
    })
}

pub fn mean_price(prices: &[Price]) -> Result<f64, MetricsError> {
    if prices.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(prices.iter().map(|p| f64::from(p.0)).sum::<f64>() / prices.len() as f64)
}

/// Per-agent totals over a transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentOutcomes {
    pub wins: Vec<u64>,
    pub win_rate: Vec<f64>,
    pub seller_profit: Vec<Money>,
    pub buyer_value: Vec<Money>,
}

pub fn win_rates_and_profits(records: &[AuctionRecord], config: &MarketConfig) -> Result<AgentOutcomes, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut wins = vec![0u64; config.sellers.len()];
    let mut seller_profit = vec![0; config.sellers.len()];
    let mut buyer_value = vec![0; config.buyers.len()];
    for r in records {
        wins[r.winner.0] += 1;
        seller_profit[r.winner.0] += r.price_paid.money() - config.sellers[r.winner.0].cost;
        buyer_value[r.buyer.0] += r.buyer_value;
    }
    let n = records.len() as f64;
    Ok(AgentOutcomes {
        win_rate: wins.iter().map(|&w| w as f64 / n).collect(),
        wins,
        seller_profit,
        buyer_value,
    })
}

/// A maximal run of consecutive auctions at one price.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Episode {
    pub start: usize,
    pub length: usize,
    pub price: Price,
}

/// Maximal constant-price runs of at least `min_len` auctions, in order.
pub fn equilibrium_episodes(prices: &[Price], min_len: usize) -> Vec<Episode> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=prices.len() {
        if i == prices.len() || prices[i] != prices[start] {
            let length = i - start;
            if length >= min_len.max(1) {
                out.push(Episode {
                    start,
                    length,
                    price: prices[start],
                });
            }
            start = i;
        }
    }
    out
}

/// Whether `price` is an equilibrium price for the final bids of a run:
/// every seller whose cost is below it is bidding exactly it.
pub fn is_equilibrium_price(price: Price, record: &AuctionRecord, config: &MarketConfig) -> bool {
    record
        .bids
        .iter()
        .filter(|b| config.sellers[b.seller.0].cost < price.money())
        .all(|b| b.price == price)
}

/// Ordinary least-squares line with Pearson correlation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    pub r: f64,
}

/// Fits `win_rate = slope * volatility + intercept` over `points`.
pub fn fit_volatility_winrate(points: &[(f64, f64)]) -> Result<RegressionFit, MetricsError> {
    if points.len() < 2 {
        return Err(MetricsError::DegenerateFit);
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= f64::EPSILON * n {
        return Err(MetricsError::DegenerateFit);
    }
    let slope = sxy / sxx;
    let r = if syy == 0.0 { 0.0 } else { (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0) };
    Ok(RegressionFit {
        slope,
        intercept: my - slope * mx,
        r,
    })
}

/// All per-run measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub auctions: usize,
    pub distribution: PriceDistribution,
    pub mean_price: f64,
    pub volatility: f64,
    pub outcomes: AgentOutcomes,
    pub equilibrium_episodes: Vec<Episode>,
    /// Whether the last transacted price is an equilibrium price for the
    /// last round of bids.
    pub final_price_is_equilibrium: bool,
}

impl MetricsReport {
    pub fn compute(transcript: &RunTranscript, config: &MarketConfig, min_episode: usize) -> Result<Self, MetricsError> {
        let prices = transcript.prices();
        let last = transcript.records.last().ok_or(MetricsError::Empty)?;
        Ok(Self {
            auctions: prices.len(),
            distribution: price_distribution(&prices, config.price_levels)?,
            mean_price: mean_price(&prices)?,
            volatility: volatility(&prices)?,
            outcomes: win_rates_and_profits(&transcript.records, config)?,
            equilibrium_episodes: equilibrium_episodes(&prices, min_episode),
            final_price_is_equilibrium: is_equilibrium_price(last.price_paid, last, config),
        })
    }
}
