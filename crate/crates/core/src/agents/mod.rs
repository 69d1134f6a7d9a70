//! Buyer and seller policies at modeling levels 0, 1 and 2.
//!
//! * Level 0 agents learn prices directly from their own rewards.
//! * Level 1 agents keep empirical densities of what others did and
//!   best-respond to them.
//! * Level 2 sellers simulate the level 1 decision rules of the others
//!   (see [`PeerModels`]) and pick the most profitable winning bid.
//!
//! Every policy explores with its annealed probability `eps`; sellers never
//! bid below cost, exploration included.

mod one;
mod two;
mod zero;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::auction::AuctionRecord;
use crate::market::{Money, Price, Quality};

pub use one::{Buyer1State, Seller1State};
pub use two::{LearnedPeers, ModelMode, OracleView, PeerModels, Seller2Plan, Seller2State};
pub use zero::{Buyer0State, Seller0State};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SellerId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BuyerId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bid {
    pub seller: SellerId,
    pub price: Price,
}

impl Bid {
    pub fn new(seller: usize, price: u32) -> Self {
        Self {
            seller: SellerId(seller),
            price: Price(price),
        }
    }
}

/// Modeling depth of an agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Level {
    Zero,
    One,
    Two,
}

impl TryFrom<u8> for Level {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            0 => Ok(Level::Zero),
            1 => Ok(Level::One),
            2 => Ok(Level::Two),
            other => Err(format!("modeling level must be 0, 1 or 2, got {other}")),
        }
    }
}

impl From<Level> for u8 {
    fn from(l: Level) -> u8 {
        match l {
            Level::Zero => 0,
            Level::One => 1,
            Level::Two => 2,
        }
    }
}

/// Annealing and window parameters shared by every agent of a market.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningParams {
    pub epsilon_min: f64,
    pub alpha_min: f64,
    pub gamma: f64,
    pub window: usize,
}

impl Default for LearningParams {
    fn default() -> Self {
        Self {
            epsilon_min: 0.05,
            alpha_min: 0.1,
            gamma: 0.99,
            window: crate::learning::DEFAULT_WINDOW,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AgentError {
    #[error("buyer received no bids")]
    NoBids,
}

pub(crate) fn explores<R: Rng + ?Sized>(eps: f64, rng: &mut R) -> bool {
    rng.gen::<f64>() < eps
}

/// Lowest price a seller with `cost` may bid.
pub(crate) fn lowest_admissible(cost: Money) -> u32 {
    cost.max(0) as u32
}

pub(crate) fn admissible(cost: Money, price_levels: u32) -> std::ops::Range<u32> {
    lowest_admissible(cost)..price_levels
}

pub(crate) fn random_admissible<R: Rng + ?Sized>(cost: Money, price_levels: u32, rng: &mut R) -> Price {
    Price(rng.gen_range(admissible(cost, price_levels)))
}

pub(crate) fn pick_uniform<R: Rng + ?Sized>(set: &[SellerId], rng: &mut R) -> SellerId {
    *set.choose(rng).expect("choice set is never empty for nonempty bids")
}

/// Buyer of either level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BuyerAgent {
    Zero(Buyer0State),
    One(Buyer1State),
}

impl BuyerAgent {
    pub fn level(&self) -> Level {
        match self {
            BuyerAgent::Zero(_) => Level::Zero,
            BuyerAgent::One(_) => Level::One,
        }
    }

    pub fn epsilon(&self) -> f64 {
        match self {
            BuyerAgent::Zero(b) => b.eps.value(),
            BuyerAgent::One(b) => b.eps.value(),
        }
    }

    pub fn select<R: Rng + ?Sized>(&self, bids: &[Bid], rng: &mut R) -> Result<SellerId, AgentError> {
        match self {
            BuyerAgent::Zero(b) => b.select(bids, rng),
            BuyerAgent::One(b) => b.select(bids, rng),
        }
    }

    /// Sellers the buyer would pick among with exploration switched off.
    pub fn preferred(&self, bids: &[Bid]) -> Vec<SellerId> {
        match self {
            BuyerAgent::Zero(b) => b.preferred(bids),
            BuyerAgent::One(b) => b.preferred(bids),
        }
    }

    pub fn learn(&mut self, winner: SellerId, price: Price, perceived: Quality) {
        match self {
            BuyerAgent::Zero(b) => b.learn(price, perceived),
            BuyerAgent::One(b) => b.learn(winner, perceived),
        }
    }
}

/// Seller of any level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SellerAgent {
    Zero(Seller0State),
    One(Seller1State),
    Two(Seller2State),
}

impl SellerAgent {
    pub fn level(&self) -> Level {
        match self {
            SellerAgent::Zero(_) => Level::Zero,
            SellerAgent::One(_) => Level::One,
            SellerAgent::Two(_) => Level::Two,
        }
    }

    pub fn cost(&self) -> Money {
        match self {
            SellerAgent::Zero(s) => s.cost,
            SellerAgent::One(s) => s.cost,
            SellerAgent::Two(s) => s.cost,
        }
    }

    pub fn epsilon(&self) -> f64 {
        match self {
            SellerAgent::Zero(s) => s.eps.value(),
            SellerAgent::One(s) => s.eps.value(),
            SellerAgent::Two(s) => s.eps.value(),
        }
    }

    /// Applies everything a seller learns from one broadcast auction.
    ///
    /// Level 0 sellers reinforce their own bid with the realized profit;
    /// level 1 and 2 sellers update their models of the others.
    pub fn absorb(&mut self, me: SellerId, record: &AuctionRecord) {
        match self {
            SellerAgent::Zero(s) => {
                let own = record.bid_of(me).expect("every seller bids in every auction");
                s.learn(own, record.winner == me);
            }
            SellerAgent::One(s) => s.observe(record),
            SellerAgent::Two(s) => s.observe(record),
        }
    }
}
