use std::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    admissible, explores, pick_uniform, random_admissible, AgentError, Bid, BuyerId, LearningParams, SellerId,
};
use crate::auction::AuctionRecord;
use crate::learning::{AnnealSchedule, EmpiricalDensity};
use crate::market::{value, Money, Price, Quality, ValueParams};

/// Exact fraction with positive denominator, used to compare expected values
/// without floating point ties going astray.
#[derive(Debug, Clone, Copy)]
struct Frac {
    num: i128,
    den: i128,
}

impl Frac {
    fn cmp(self, other: Frac) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

/// Level 1 buyer: keeps a quality density per seller and buys from the
/// seller with the highest expected value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Buyer1State {
    pub q_models: Vec<EmpiricalDensity>,
    pub value_params: ValueParams,
    pub eps: AnnealSchedule,
}

impl Buyer1State {
    pub fn new(sellers: usize, quality_levels: u32, value_params: ValueParams, params: &LearningParams) -> Self {
        Self {
            q_models: vec![EmpiricalDensity::new(quality_levels as usize, params.window); sellers],
            value_params,
            eps: AnnealSchedule::new(params.epsilon_min, params.gamma),
        }
    }

    fn quality_levels(&self) -> usize {
        self.q_models.first().map_or(0, EmpiricalDensity::support)
    }

    /// `E[V(p, x)]` for `x` drawn from the seller's quality density.
    pub fn expected_value(&self, seller: SellerId, price: Price) -> Option<f64> {
        let vp = self.value_params;
        self.q_models[seller.0].expectation(|x| value(vp, price, Quality(x)) as f64)
    }

    fn exact_score(&self, bid: &Bid, scale: i128) -> Option<Frac> {
        let d = &self.q_models[bid.seller.0];
        if d.is_empty() {
            return None;
        }
        let num: i128 = d
            .counts()
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(x, &c)| i128::from(c) * i128::from(value(self.value_params, bid.price, Quality(x as u32))))
            .sum();
        Some(Frac {
            num,
            den: d.len() as i128 * scale,
        })
    }

    fn choice_set(&self, bids: &[Bid], scale: i128) -> Vec<SellerId> {
        let unmodeled: Vec<SellerId> = bids
            .iter()
            .filter(|b| self.q_models[b.seller.0].is_empty())
            .map(|b| b.seller)
            .collect();
        if !unmodeled.is_empty() {
            return unmodeled;
        }
        let scored: Vec<(SellerId, Frac)> = bids
            .iter()
            .map(|b| (b.seller, self.exact_score(b, scale).expect("all bidders modeled")))
            .collect();
        let Some(best) = scored.iter().map(|&(_, f)| f).max_by(|a, b| a.cmp(*b)) else {
            return Vec::new();
        };
        scored
            .into_iter()
            .filter(|(_, f)| f.cmp(best) == Ordering::Equal)
            .map(|(s, _)| s)
            .collect()
    }

    /// Sellers the buyer picks among when not exploring.
    ///
    /// Bidders without a quality model take precedence so that every seller
    /// eventually gets sampled; otherwise it is the argmax set of expected value.
    pub fn preferred(&self, bids: &[Bid]) -> Vec<SellerId> {
        self.choice_set(bids, 1)
    }

    /// Same as [`preferred`](Self::preferred) with every expectation divided
    /// by `|Q|`.
    pub fn preferred_with_prefactor(&self, bids: &[Bid]) -> Vec<SellerId> {
        self.choice_set(bids, self.quality_levels().max(1) as i128)
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

    /// Records a purchase without touching the exploration schedule.
    pub fn record_purchase(&mut self, winner: SellerId, perceived: Quality) {
        self.q_models[winner.0].observe(perceived.0);
    }

    pub fn learn(&mut self, winner: SellerId, perceived: Quality) {
        self.record_purchase(winner, perceived);
        self.eps.step();
    }
}

/// Level 1 seller: models which prices each buyer accepts (`m`) and what
/// each rival bids (`n`), and bids to maximize expected profit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seller1State {
    pub id: SellerId,
    pub cost: Money,
    pub eps: AnnealSchedule,
    pub m_models: Vec<EmpiricalDensity>,
    /// Indexed by seller; `None` at the seller's own slot.
    pub n_models: Vec<Option<EmpiricalDensity>>,
}

impl Seller1State {
    pub fn new(
        id: SellerId,
        buyers: usize,
        sellers: usize,
        price_levels: u32,
        cost: Money,
        params: &LearningParams,
    ) -> Self {
        let density = EmpiricalDensity::new(price_levels as usize, params.window);
        Self {
            id,
            cost,
            eps: AnnealSchedule::new(params.epsilon_min, params.gamma),
            m_models: vec![density.clone(); buyers],
            n_models: (0..sellers).map(|s| (s != id.0).then(|| density.clone())).collect(),
        }
    }

    fn price_levels(&self) -> u32 {
        self.m_models.first().map_or(0, |d| d.support() as u32)
    }

    /// Unnormalized win probability of each price against `rivals` when
    /// selling to `buyer`.
    ///
    /// Entry `p` is `prod_r sum_{p'} count_r(p') [m(p') <= m(p)]`; dividing by
    /// `prod_r |window_r|` gives the probability. `None` while any needed
    /// model is still empty.
    pub fn win_weights(&self, buyer: BuyerId, rivals: &[SellerId]) -> Option<Vec<u128>> {
        let m = &self.m_models[buyer.0];
        if m.is_empty() {
            return None;
        }
        let mut n = Vec::with_capacity(rivals.len());
        for r in rivals.iter().filter(|r| **r != self.id) {
            let d = self.n_models[r.0].as_ref()?;
            if d.is_empty() {
                return None;
            }
            n.push(d);
        }
        let m_counts = m.counts();
        Some(
            (0..self.price_levels() as usize)
                .map(|p| {
                    n.iter()
                        .map(|d| {
                            d.counts()
                                .iter()
                                .zip(m_counts)
                                .filter(|(_, &mc)| mc <= m_counts[p])
                                .map(|(&c, _)| u128::from(c))
                                .sum::<u128>()
                        })
                        .product()
                })
                .collect(),
        )
    }

    /// Greedy bid; ties go to the lowest price. `None` when a model is empty.
    pub fn exploit_bid(&self, buyer: BuyerId, rivals: &[SellerId]) -> Option<Price> {
        let weights = self.win_weights(buyer, rivals)?;
        let mut best = None::<(u32, u128)>;
        for p in admissible(self.cost, self.price_levels()) {
            let score = (i64::from(p) - self.cost) as u128 * weights[p as usize];
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((p, score));
            }
        }
        best.map(|(p, _)| Price(p))
    }

    pub fn bid<R: Rng + ?Sized>(&self, buyer: BuyerId, rivals: &[SellerId], rng: &mut R) -> Price {
        let exploring = explores(self.eps.value(), rng);
        match self.exploit_bid(buyer, rivals) {
            Some(p) if !exploring => p,
            _ => random_admissible(self.cost, self.price_levels(), rng),
        }
    }

    /// Folds one broadcast into the `m` and `n` models.
    pub fn update_models(&mut self, record: &AuctionRecord) {
        self.m_models[record.buyer.0].observe(record.price_paid.0);
        for bid in record.bids.iter().filter(|b| b.seller != self.id) {
            if let Some(d) = self.n_models[bid.seller.0].as_mut() {
                d.observe(bid.price.0);
            }
        }
    }

    pub fn observe(&mut self, record: &AuctionRecord) {
        self.update_models(record);
        self.eps.step();
    }
}
