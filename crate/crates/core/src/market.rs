//! Primitive values of the economy: prices, qualities, buyer valuation,
//! seller profit and the buyer-side quality perception model.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Money is measured in the same integer units as prices.
pub type Money = i64;

/// Default number of price levels, `P = {0, ..., 19}`.
pub const DEFAULT_PRICE_LEVELS: u32 = 20;
/// Default number of quality levels, `Q = {0, ..., 19}`.
pub const DEFAULT_QUALITY_LEVELS: u32 = 20;

/// Index into the finite, ordered price set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Price(pub u32);

/// Index into the finite, ordered quality set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Quality(pub u32);

impl Price {
    pub fn money(self) -> Money {
        Money::from(self.0)
    }
}

impl Quality {
    pub fn money(self) -> Money {
        Money::from(self.0)
    }
}

/// Linear buyer valuation `V(p, q) = quality_weight * q + price_weight * p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValueParams {
    pub quality_weight: i64,
    pub price_weight: i64,
}

impl Default for ValueParams {
    fn default() -> Self {
        Self {
            quality_weight: 3,
            price_weight: -1,
        }
    }
}

/// Value a buyer obtains from buying quality `q` at price `p`.
pub fn value(params: ValueParams, p: Price, q: Quality) -> Money {
    params.quality_weight * q.money() + params.price_weight * p.money()
}

/// Seller profit for a bid at `p`: `p - cost` if the bid was chosen, else 0.
pub fn profit(p: Price, cost: Money, won: bool) -> Money {
    if won {
        p.money() - cost
    } else {
        0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    None,
    SymmetricStep,
}

/// How a buyer's perceived quality deviates from the true quality of a good.
///
/// `SymmetricStep` moves the quality by one level with probability
/// `step_prob`, up or down with equal odds, then clamps to `Q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QualityNoiseModel {
    pub kind: NoiseKind,
    #[serde(default = "default_step_prob")]
    pub step_prob: f64,
}

fn default_step_prob() -> f64 {
    0.5
}

impl QualityNoiseModel {
    pub const NONE: Self = Self {
        kind: NoiseKind::None,
        step_prob: 0.0,
    };

    pub fn symmetric_step(step_prob: f64) -> Self {
        Self {
            kind: NoiseKind::SymmetricStep,
            step_prob,
        }
    }
}

impl Default for QualityNoiseModel {
    fn default() -> Self {
        Self::symmetric_step(default_step_prob())
    }
}

/// Draws the quality a buyer ascribes to a good of quality `true_q`.
///
/// `quality_levels` is `|Q|`; the result always lies in `0..quality_levels`.
/// The noiseless model consumes no randomness.
pub fn perceive_quality<R: Rng + ?Sized>(
    true_q: Quality,
    noise: QualityNoiseModel,
    quality_levels: u32,
    rng: &mut R,
) -> Quality {
    match noise.kind {
        NoiseKind::None => true_q,
        NoiseKind::SymmetricStep => {
            let u: f64 = rng.gen();
            let top = quality_levels.saturating_sub(1);
            if u < noise.step_prob / 2.0 {
                Quality(true_q.0.saturating_sub(1))
            } else if u < noise.step_prob {
                Quality((true_q.0 + 1).min(top))
            } else {
                true_q
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const V: ValueParams = ValueParams {
        quality_weight: 3,
        price_weight: -1,
    };

    #[test]
    fn value_examples() {
        assert_eq!(value(V, Price(9), Quality(8)), 15);
        assert_eq!(value(V, Price(0), Quality(0)), 0);
        assert_eq!(value(V, Price(12), Quality(4)), 0);
    }

    #[test]
    fn value_is_linear_in_quality() {
        for p in 0..20 {
            for q1 in 0..20 {
                for q2 in 0..20 {
                    let d = value(V, Price(p), Quality(q1)) - value(V, Price(p), Quality(q2));
                    assert_eq!(d, 3 * (i64::from(q1) - i64::from(q2)));
                }
            }
        }
    }

    #[test]
    fn profit_examples() {
        assert_eq!(profit(Price(12), 8, true), 4);
        assert_eq!(profit(Price(12), 8, false), 0);
        assert_eq!(profit(Price(8), 8, true), 0);
    }

    #[test]
    fn noiseless_perception_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for q in 0..20 {
            assert_eq!(
                perceive_quality(Quality(q), QualityNoiseModel::NONE, 20, &mut rng),
                Quality(q)
            );
        }
    }

    #[test]
    fn symmetric_step_stays_within_one_level_and_is_unbiased() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let noise = QualityNoiseModel::symmetric_step(0.5);
        let n = 100_000;
        let mut counts = [0u32; 3];
        let mut sum = 0.0;
        for _ in 0..n {
            let q = perceive_quality(Quality(8), noise, 20, &mut rng);
            assert!((7..=9).contains(&q.0));
            counts[(q.0 - 7) as usize] += 1;
            sum += f64::from(q.0);
        }
        let mean = sum / f64::from(n);
        // Variance of a single draw is step_prob = 0.5.
        let three_se = 3.0 * (0.5f64 / f64::from(n)).sqrt();
        assert!((mean - 8.0).abs() < 0.02 && (mean - 8.0).abs() < three_se);
        assert!(counts.iter().all(|&c| c > 0));
    }

    #[test]
    fn symmetric_step_clamps_at_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise = QualityNoiseModel::symmetric_step(0.5);
        for _ in 0..1000 {
            assert!(perceive_quality(Quality(0), noise, 20, &mut rng).0 <= 1);
            assert!(perceive_quality(Quality(19), noise, 20, &mut rng).0 >= 18);
            assert!(perceive_quality(Quality(19), noise, 20, &mut rng).0 <= 19);
        }
    }
}
