use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{admissible, explores, pick_uniform, random_admissible, AgentError, Bid, LearningParams, SellerId};
use crate::learning::{AnnealSchedule, RewardTable};
use crate::market::{profit, value, Money, Price, Quality, ValueParams};

/// Level 0 buyer: learns the value `f(p)` of buying at each price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Buyer0State {
    pub f: RewardTable,
    pub eps: AnnealSchedule,
    pub alpha: AnnealSchedule,
    pub value_params: ValueParams,
}

impl Buyer0State {
    pub fn new(price_levels: u32, value_params: ValueParams, params: &LearningParams) -> Self {
        Self {
            f: RewardTable::new(price_levels as usize),
            eps: AnnealSchedule::new(params.epsilon_min, params.gamma),
            alpha: AnnealSchedule::new(params.alpha_min, params.gamma),
            value_params,
        }
    }

    /// Sellers whose bid maximizes `f`.
    pub fn preferred(&self, bids: &[Bid]) -> Vec<SellerId> {
        let best = bids
            .iter()
            .map(|b| self.f.get(b.price.0 as usize))
            .fold(f64::NEG_INFINITY, f64::max);
        bids.iter()
            .filter(|b| self.f.get(b.price.0 as usize) == best)
            .map(|b| b.seller)
            .collect()
    }

    pub fn select<R: Rng + ?Sized>(&self, bids: &[Bid], rng: &mut R) -> Result<SellerId, AgentError> {
        if bids.is_empty() {
            return Err(AgentError::NoBids);
        }
        if explores(self.eps.value(), rng) {
            let all: Vec<SellerId> = bids.iter().map(|b| b.seller).collect();
            return Ok(pick_uniform(&all, rng));
        }
        Ok(pick_uniform(&self.preferred(bids), rng))
    }

    pub fn learn(&mut self, price: Price, perceived: Quality) {
        let reward = value(self.value_params, price, perceived) as f64;
        self.f.update(price.0 as usize, reward, self.alpha.value());
        self.eps.step();
        self.alpha.step();
    }
}

/// Level 0 seller: learns the expected profit `h(p)` of bidding each price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seller0State {
    pub h: RewardTable,
    pub cost: Money,
    pub eps: AnnealSchedule,
    pub alpha: AnnealSchedule,
}

impl Seller0State {
    pub fn new(price_levels: u32, cost: Money, params: &LearningParams) -> Self {
        Self {
            h: RewardTable::new(price_levels as usize),
            cost,
            eps: AnnealSchedule::new(params.epsilon_min, params.gamma),
            alpha: AnnealSchedule::new(params.alpha_min, params.gamma),
        }
    }

    fn price_levels(&self) -> u32 {
        self.h.len() as u32
    }

    /// Admissible price with the highest `h`, lowest price on ties.
    pub fn exploit_bid(&self) -> Price {
        let mut best = None::<(u32, f64)>;
        for p in admissible(self.cost, self.price_levels()) {
            let v = self.h.get(p as usize);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((p, v));
            }
        }
        Price(best.expect("cost validated against the price range").0)
    }

    pub fn bid<R: Rng + ?Sized>(&self, rng: &mut R) -> Price {
        if explores(self.eps.value(), rng) {
            random_admissible(self.cost, self.price_levels(), rng)
        } else {
            self.exploit_bid()
        }
    }

    pub fn learn(&mut self, bid: Price, won: bool) {
        let reward = profit(bid, self.cost, won) as f64;
        self.h.update(bid.0 as usize, reward, self.alpha.value());
        self.eps.step();
        self.alpha.step();
    }
}
