//! The request / bid / select / deliver protocol and the broadcast that
//! follows each auction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{
    AgentError, Bid, BuyerAgent, BuyerId, Buyer0State, Buyer1State, LearnedPeers, Level, ModelMode, OracleView,
    PeerModels, Seller0State, Seller1State, Seller2Plan, Seller2State, SellerAgent, SellerId,
};
use crate::config::{ConfigError, MarketConfig, Scheduling};
use crate::market::{perceive_quality, value, Money, Price, Quality, ValueParams};

/// Everything that happened in one auction, as broadcast to all agents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuctionRecord {
    pub index: u64,
    pub buyer: BuyerId,
    /// One bid per seller, in roster order.
    pub bids: Vec<Bid>,
    pub winner: SellerId,
    pub price_paid: Price,
    pub true_quality: Quality,
    pub perceived_quality: Quality,
    pub winner_profit: Money,
    pub buyer_value: Money,
}

impl AuctionRecord {
    pub fn bid_of(&self, seller: SellerId) -> Option<Price> {
        self.bids.iter().find(|b| b.seller == seller).map(|b| b.price)
    }
}

/// Ordered auctions of one run plus what is needed to replay them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunTranscript {
    pub config_hash: String,
    pub seed: u64,
    pub records: Vec<AuctionRecord>,
}

impl RunTranscript {
    pub fn prices(&self) -> Vec<Price> {
        self.records.iter().map(|r| r.price_paid).collect()
    }
}

#[derive(Debug, Error)]
pub enum AuctionError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("unknown buyer {0}")]
    UnknownBuyer(usize),
    #[error(transparent)]
    Agent(#[from] AgentError),
}

/// A live economy: the roster plus every agent's learned state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Market {
    config: MarketConfig,
    pub buyers: Vec<BuyerAgent>,
    pub sellers: Vec<SellerAgent>,
    next_index: u64,
}

impl Market {
    pub fn new(config: MarketConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let params = config.learning;
        let levels = config.price_levels;
        let seller_costs = config.seller_costs();
        let buyer_values: Vec<ValueParams> = config.buyers.iter().map(|b| b.value_params).collect();
        let buyers = config
            .buyers
            .iter()
            .map(|b| match b.level {
                Level::Zero => BuyerAgent::Zero(Buyer0State::new(levels, b.value_params, &params)),
                _ => BuyerAgent::One(Buyer1State::new(
                    config.sellers.len(),
                    config.quality_levels,
                    b.value_params,
                    &params,
                )),
            })
            .collect();
        let sellers = config
            .sellers
            .iter()
            .enumerate()
            .map(|(i, s)| match s.level {
                Level::Zero => SellerAgent::Zero(Seller0State::new(levels, s.cost, &params)),
                Level::One => SellerAgent::One(Seller1State::new(
                    SellerId(i),
                    config.buyers.len(),
                    config.sellers.len(),
                    levels,
                    s.cost,
                    &params,
                )),
                Level::Two => SellerAgent::Two(match config.level2_mode {
                    ModelMode::Oracle => Seller2State::oracle(SellerId(i), s.cost, levels, &params),
                    ModelMode::Learned => {
                        let peers = LearnedPeers::new(
                            SellerId(i),
                            &seller_costs,
                            &buyer_values,
                            levels,
                            config.quality_levels,
                            &params,
                        );
                        Seller2State::learned(SellerId(i), s.cost, levels, peers, &params)
                    }
                }),
            })
            .collect();
        Ok(Self {
            config,
            buyers,
            sellers,
            next_index: 0,
        })
    }

    pub fn config(&self) -> &MarketConfig {
        &self.config
    }

    /// Index the next auction will carry.
    pub fn auctions_run(&self) -> u64 {
        self.next_index
    }

    fn participants(&self) -> Vec<SellerId> {
        (0..self.sellers.len()).map(SellerId).collect()
    }

    /// Which buyer requests bids in the next auction.
    pub fn next_buyer<R: Rng + ?Sized>(&self, rng: &mut R) -> BuyerId {
        match self.config.scheduling {
            Scheduling::RoundRobin => BuyerId((self.next_index % self.buyers.len() as u64) as usize),
            Scheduling::UniformRandom => BuyerId(rng.gen_range(0..self.buyers.len())),
        }
    }

    /// Greedy level 2 reasoning of `seller` for an auction requested by
    /// `buyer`, against its current models. `None` for other levels or when
    /// a rival cannot be predicted yet.
    pub fn level2_plan(&self, seller: SellerId, buyer: BuyerId) -> Option<Seller2Plan> {
        let SellerAgent::Two(s) = &self.sellers[seller.0] else {
            return None;
        };
        let oracle = OracleView {
            buyers: &self.buyers,
            sellers: &self.sellers,
        };
        let models: &dyn PeerModels = match &s.learned {
            Some(peers) => peers,
            None => &oracle,
        };
        s.plan(models, buyer, &self.participants())
    }

    fn collect_bids<R: Rng + ?Sized>(&self, buyer: BuyerId, rng: &mut R) -> Vec<Bid> {
        let participants = self.participants();
        let oracle = OracleView {
            buyers: &self.buyers,
            sellers: &self.sellers,
        };
        self.sellers
            .iter()
            .enumerate()
            .map(|(i, seller)| {
                let me = SellerId(i);
                let price = match seller {
                    SellerAgent::Zero(s) => s.bid(rng),
                    SellerAgent::One(s) => {
                        let rivals: Vec<SellerId> = participants.iter().copied().filter(|r| *r != me).collect();
                        s.bid(buyer, &rivals, rng)
                    }
                    SellerAgent::Two(s) => {
                        let models: &dyn PeerModels = match &s.learned {
                            Some(peers) => peers,
                            None => &oracle,
                        };
                        s.bid(models, buyer, &participants, rng)
                    }
                };
                Bid { seller: me, price }
            })
            .collect()
    }

    /// Runs one auction for `buyer` and lets every agent learn from it.
    pub fn run_auction<R: Rng + ?Sized>(&mut self, buyer: BuyerId, rng: &mut R) -> Result<AuctionRecord, AuctionError> {
        if buyer.0 >= self.buyers.len() {
            return Err(AuctionError::UnknownBuyer(buyer.0));
        }
        let bids = self.collect_bids(buyer, rng);
        let winner = self.buyers[buyer.0].select(&bids, rng)?;
        let price_paid = bids[winner.0].price;
        let spec = &self.config.sellers[winner.0];
        let true_quality = spec.quality;
        let perceived_quality = perceive_quality(true_quality, self.config.noise, self.config.quality_levels, rng);
        let record = AuctionRecord {
            index: self.next_index,
            buyer,
            bids,
            winner,
            price_paid,
            true_quality,
            perceived_quality,
            winner_profit: price_paid.money() - spec.cost,
            buyer_value: value(self.config.buyers[buyer.0].value_params, price_paid, perceived_quality),
        };
        self.next_index += 1;

        self.buyers[buyer.0].learn(winner, price_paid, perceived_quality);
        for (i, seller) in self.sellers.iter_mut().enumerate() {
            seller.absorb(SellerId(i), &record);
        }
        Ok(record)
    }

    /// Schedules the next buyer and runs its auction.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<AuctionRecord, AuctionError> {
        let buyer = self.next_buyer(rng);
        self.run_auction(buyer, rng)
    }
}

/// Transcript and final agent states of a run.
#[derive(Debug, Clone)]
pub struct SimulationOutcome {
    pub transcript: RunTranscript,
    pub market: Market,
}

/// Runs `auctions` auctions of a fresh market seeded with `seed`.
pub fn run_simulation(config: &MarketConfig, seed: u64, auctions: u64) -> Result<SimulationOutcome, AuctionError> {
    let mut market = Market::new(config.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records = (0..auctions)
        .map(|_| market.step(&mut rng))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SimulationOutcome {
        transcript: RunTranscript {
            config_hash: config.hash(),
            seed,
            records,
        },
        market,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learning::AnnealSchedule;
    use crate::market::QualityNoiseModel;

    fn greedy(market: &mut Market) {
        for b in &mut market.buyers {
            match b {
                BuyerAgent::Zero(b) => b.eps = AnnealSchedule::constant(0.0),
                BuyerAgent::One(b) => b.eps = AnnealSchedule::constant(0.0),
            }
        }
        for s in &mut market.sellers {
            match s {
                SellerAgent::Zero(s) => s.eps = AnnealSchedule::constant(0.0),
                SellerAgent::One(s) => s.eps = AnnealSchedule::constant(0.0),
                SellerAgent::Two(s) => s.eps = AnnealSchedule::constant(0.0),
            }
        }
    }

    #[test]
    fn single_greedy_pair_trades_at_cost() {
        let config = MarketConfig::new("pair")
            .with_buyers(1, Level::Zero)
            .with_seller(Level::Zero, 8);
        let mut market = Market::new(config).unwrap();
        greedy(&mut market);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = market.run_auction(BuyerId(0), &mut rng).unwrap();
        assert_eq!(r.bids, vec![Bid::new(0, 8)]);
        assert_eq!(r.winner, SellerId(0));
        assert_eq!(r.price_paid, Price(8));
        assert_eq!(r.winner_profit, 0);
    }

    #[test]
    fn replay_is_deterministic() {
        let config = MarketConfig::new("det")
            .with_buyers(2, Level::One)
            .with_seller(Level::Zero, 4)
            .with_seller(Level::One, 4)
            .with_seller(Level::Two, 5);
        let a = run_simulation(&config, 42, 300).unwrap();
        let b = run_simulation(&config, 42, 300).unwrap();
        assert_eq!(a.transcript, b.transcript);
        assert_eq!(a.market, b.market);
        let c = run_simulation(&config, 43, 300).unwrap();
        assert_ne!(a.transcript.records, c.transcript.records);
    }

    #[test]
    fn greedy_buyer_follows_its_trained_table() {
        // Pre-train a 0-level buyer so that price 7 is uniquely best, then
        // let three greedy sellers bid 5, 7 and 9.
        let config = MarketConfig::new("three")
            .with_buyers(1, Level::Zero)
            .with_seller(Level::Zero, 5)
            .with_seller(Level::Zero, 7)
            .with_seller(Level::Zero, 9);
        let mut market = Market::new(config).unwrap();
        greedy(&mut market);
        if let BuyerAgent::Zero(b) = &mut market.buyers[0] {
            for (p, q) in [(5, 2), (7, 8), (9, 8)] {
                b.learn(Price(p), Quality(q));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = market.run_auction(BuyerId(0), &mut rng).unwrap();
        assert_eq!(r.bids.iter().map(|b| b.price.0).collect::<Vec<_>>(), vec![5, 7, 9]);
        assert_eq!(r.winner, SellerId(1));
    }

    #[test]
    fn zero_auctions_give_an_empty_transcript() {
        let config = MarketConfig::new("z").with_buyers(1, Level::Zero).with_seller(Level::Zero, 3);
        let out = run_simulation(&config, 1, 0).unwrap();
        assert!(out.transcript.records.is_empty());
        assert_eq!(out.transcript.config_hash, config.hash());
    }

    #[test]
    fn records_satisfy_protocol_invariants() {
        let mut config = MarketConfig::new("inv")
            .with_buyers(3, Level::Zero)
            .with_seller(Level::Zero, 2)
            .with_seller(Level::One, 5)
            .with_seller(Level::One, 8);
        config.noise = QualityNoiseModel::default();
        let out = run_simulation(&config, 9, 2000).unwrap();
        for (i, r) in out.transcript.records.iter().enumerate() {
            assert_eq!(r.index, i as u64);
            assert_eq!(r.buyer, BuyerId(i % 3));
            assert_eq!(r.bids.len(), 3);
            assert_eq!(r.bid_of(r.winner), Some(r.price_paid));
            assert_eq!(r.winner_profit, r.price_paid.money() - config.sellers[r.winner.0].cost);
            for b in &r.bids {
                assert!(b.price.money() >= config.sellers[b.seller.0].cost);
            }
        }
    }

    #[test]
    fn level1_windows_hold_the_latest_broadcast_bids() {
        let mut config = MarketConfig::new("bcast")
            .with_buyers(2, Level::Zero)
            .with_seller(Level::One, 2)
            .with_seller(Level::Zero, 3)
            .with_seller(Level::One, 4);
        config.learning.window = 5;
        let out = run_simulation(&config, 5, 37).unwrap();
        let SellerAgent::One(s) = &out.market.sellers[0] else { unreachable!() };
        for rival in [1usize, 2] {
            let expected: Vec<u32> = out.transcript.records[32..]
                .iter()
                .map(|r| r.bids[rival].price.0)
                .collect();
            let window: Vec<u32> = s.n_models[rival].as_ref().unwrap().window().collect();
            assert_eq!(window, expected);
        }
    }
}
