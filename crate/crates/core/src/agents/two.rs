use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    admissible, explores, lowest_admissible, random_admissible, Bid, BuyerAgent, BuyerId, Buyer1State,
    LearningParams, SellerAgent, SellerId, Seller1State,
};
use crate::auction::AuctionRecord;
use crate::learning::AnnealSchedule;
use crate::market::{Money, Price, ValueParams};

/// Where a level 2 seller gets its models of the other agents from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelMode {
    /// Read the true states of the other agents.
    Oracle,
    /// Maintain level 1 replicas of everyone from broadcasts.
    Learned,
}

/// Intentional models of the other agents, as seen by a level 2 seller.
pub trait PeerModels {
    /// Greedy bid `rival` would make to `buyer` when `participants` all bid.
    /// `None` when the rival's decision cannot be predicted yet.
    fn predict_bid(&self, rival: SellerId, buyer: BuyerId, participants: &[SellerId]) -> Option<Price>;

    /// Sellers `buyer` would choose among, exploration off.
    fn choice_set(&self, buyer: BuyerId, bids: &[Bid]) -> Vec<SellerId>;
}

/// Read-through view of the true agent states.
pub struct OracleView<'a> {
    pub buyers: &'a [BuyerAgent],
    pub sellers: &'a [SellerAgent],
}

fn others(participants: &[SellerId], me: SellerId) -> Vec<SellerId> {
    participants.iter().copied().filter(|s| *s != me).collect()
}

impl PeerModels for OracleView<'_> {
    fn predict_bid(&self, rival: SellerId, buyer: BuyerId, participants: &[SellerId]) -> Option<Price> {
        match &self.sellers[rival.0] {
            SellerAgent::Zero(s) => Some(s.exploit_bid()),
            SellerAgent::One(s) => s.exploit_bid(buyer, &others(participants, rival)),
            // Config validation allows a single oracle-mode level 2 seller.
            SellerAgent::Two(_) => None,
        }
    }

    fn choice_set(&self, buyer: BuyerId, bids: &[Bid]) -> Vec<SellerId> {
        self.buyers[buyer.0].preferred(bids)
    }
}

/// Level 1 replicas of every rival and every buyer, fed from broadcasts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnedPeers {
    pub rivals: Vec<Option<Seller1State>>,
    pub buyers: Vec<Buyer1State>,
}

impl LearnedPeers {
    /// Replicas use the configured costs of the sellers and value functions
    /// of the buyers.
    pub fn new(
        me: SellerId,
        seller_costs: &[Money],
        buyer_values: &[ValueParams],
        price_levels: u32,
        quality_levels: u32,
        params: &LearningParams,
    ) -> Self {
        let sellers = seller_costs.len();
        let buyers = buyer_values.len();
        Self {
            rivals: seller_costs
                .iter()
                .enumerate()
                .map(|(i, &cost)| {
                    (i != me.0).then(|| Seller1State::new(SellerId(i), buyers, sellers, price_levels, cost, params))
                })
                .collect(),
            buyers: buyer_values
                .iter()
                .map(|&v| Buyer1State::new(sellers, quality_levels, v, params))
                .collect(),
        }
    }

    /// The buyer's own perceived quality is private, so the replica records
    /// the winner's true quality instead.
    pub fn observe(&mut self, record: &AuctionRecord) {
        for rival in self.rivals.iter_mut().flatten() {
            rival.update_models(record);
        }
        self.buyers[record.buyer.0].record_purchase(record.winner, record.true_quality);
    }
}

impl PeerModels for LearnedPeers {
    fn predict_bid(&self, rival: SellerId, buyer: BuyerId, participants: &[SellerId]) -> Option<Price> {
        self.rivals[rival.0]
            .as_ref()?
            .exploit_bid(buyer, &others(participants, rival))
    }

    fn choice_set(&self, buyer: BuyerId, bids: &[Bid]) -> Vec<SellerId> {
        self.buyers[buyer.0].preferred(bids)
    }
}

/// Outcome of the level 2 reasoning for one auction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seller2Plan {
    /// Predicted bids of the rivals.
    pub predicted: Vec<Bid>,
    /// Admissible prices at which the modeled buyer picks this seller alone.
    pub winning_prices: Vec<Price>,
    /// Most profitable winning price, or the lowest admissible one when no
    /// price wins.
    pub price: Price,
}

/// Level 2 seller: predicts rival bids with their level 1 rule, then bids
/// the highest price the modeled buyer would still pick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seller2State {
    pub id: SellerId,
    pub cost: Money,
    pub eps: AnnealSchedule,
    pub mode: ModelMode,
    pub price_levels: u32,
    /// Present in learned mode only.
    pub learned: Option<LearnedPeers>,
}

impl Seller2State {
    pub fn oracle(id: SellerId, cost: Money, price_levels: u32, params: &LearningParams) -> Self {
        Self {
            id,
            cost,
            eps: AnnealSchedule::new(params.epsilon_min, params.gamma),
            mode: ModelMode::Oracle,
            price_levels,
            learned: None,
        }
    }

    pub fn learned(id: SellerId, cost: Money, price_levels: u32, peers: LearnedPeers, params: &LearningParams) -> Self {
        Self {
            id,
            cost,
            eps: AnnealSchedule::new(params.epsilon_min, params.gamma),
            mode: ModelMode::Learned,
            price_levels,
            learned: Some(peers),
        }
    }

    /// Greedy reasoning against `models`; `None` if a rival cannot be
    /// predicted yet.
    pub fn plan(&self, models: &dyn PeerModels, buyer: BuyerId, participants: &[SellerId]) -> Option<Seller2Plan> {
        let mut bids = Vec::with_capacity(participants.len());
        for &rival in participants.iter().filter(|s| **s != self.id) {
            bids.push(Bid {
                seller: rival,
                price: models.predict_bid(rival, buyer, participants)?,
            });
        }
        let predicted = bids.clone();
        bids.push(Bid {
            seller: self.id,
            price: Price(0),
        });
        let mine = bids.len() - 1;
        let winning_prices: Vec<Price> = admissible(self.cost, self.price_levels)
            .map(Price)
            .filter(|&p| {
                bids[mine].price = p;
                models.choice_set(buyer, &bids) == [self.id]
            })
            .collect();
        let price = winning_prices
            .iter()
            .copied()
            .max()
            .unwrap_or(Price(lowest_admissible(self.cost)));
        Some(Seller2Plan {
            predicted,
            winning_prices,
            price,
        })
    }

    pub fn bid<R: Rng + ?Sized>(
        &self,
        models: &dyn PeerModels,
        buyer: BuyerId,
        participants: &[SellerId],
        rng: &mut R,
    ) -> Price {
        let exploring = explores(self.eps.value(), rng);
        match self.plan(models, buyer, participants) {
            Some(plan) if !exploring => plan.price,
            _ => random_admissible(self.cost, self.price_levels, rng),
        }
    }

    pub fn observe(&mut self, record: &AuctionRecord) {
        if let Some(peers) = self.learned.as_mut() {
            peers.observe(record);
        }
        self.eps.step();
    }
}
