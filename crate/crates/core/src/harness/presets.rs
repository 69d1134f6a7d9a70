//! Built-in population series.
//!
//! Every preset uses 5 buyers and sellers whose cost equals their quality.

use crate::agents::Level;
use crate::config::MarketConfig;

use super::config::{ExperimentConfig, Population, DEFAULT_AUCTIONS, DEFAULT_RUNS};

const BUYERS: usize = 5;

pub const PRESET_NAMES: [&str; 5] = [
    "p-series-0level",
    "one-1level-seller",
    "one-level-buyers",
    "crowding-1level",
    "two-level-seller",
];

/// Short description of each preset, in [`PRESET_NAMES`] order.
pub const PRESET_DESCRIPTIONS: [&str; 5] = [
    "0-level buyers and sellers; qualities drift from all 8 to 1..8",
    "0-level buyers, seven 0-level sellers and one 1-level quality-2 seller (last)",
    "1-level buyers, 0-level sellers and one 1-level quality-8 seller (last)",
    "0-level buyers; quality-2 sellers switch to level 1 one at a time",
    "1-level buyers, 1-level rivals and one oracle 2-level seller (first)",
];

fn population(name: String, buyer_level: Level, sellers: &[(Level, u32)], group: Option<&str>) -> Population {
    let mut market = MarketConfig::new(name).with_buyers(BUYERS, buyer_level);
    for &(level, quality) in sellers {
        market = market.with_seller(level, quality);
    }
    Population {
        market,
        group: group.map(str::to_string),
    }
}

fn experiment(name: &str, populations: Vec<Population>) -> ExperimentConfig {
    ExperimentConfig {
        name: name.to_string(),
        populations,
        runs_per_population: DEFAULT_RUNS,
        auctions_per_run: DEFAULT_AUCTIONS,
        base_seed: 0,
        episode_min_len: crate::metrics::DEFAULT_EPISODE_MIN_LEN,
    }
}

/// Qualities of population `k` (1-based) of the 0-level series:
/// `{8,...,8}`, `{8,8,8,8,8,8,7,8}`, ..., `{1,2,3,4,5,6,7,8}`.
pub fn p_series_qualities(k: usize) -> Vec<u32> {
    (0..8u32)
        .map(|i| if i < 7 && i as usize >= 8 - k { i + 1 } else { 8 })
        .collect()
}

/// Qualities of population `k` (1-based) of the one-1-level-seller series:
/// `{2,...,2}`, `{2,3,2,...,2}`, ..., `{2,3,4,5,6,7,8,2}`.
pub fn one_level_seller_qualities(k: usize) -> Vec<u32> {
    (0..8u32)
        .map(|i| if i >= 1 && (i as usize) < k { i + 2 } else { 2 })
        .collect()
}

/// Qualities of population `k` (1-based) of the 1-level-buyer series:
/// `{8,...,8}`, `{8,2,8,...,8}`, ..., `{8,2,3,4,5,6,7,8}`.
pub fn level_one_buyer_qualities(k: usize) -> Vec<u32> {
    (0..8u32)
        .map(|i| if i >= 1 && (i as usize) < k { i + 1 } else { 8 })
        .collect()
}

pub const CROWDING_QUALITIES: [u32; 7] = [2, 2, 2, 2, 2, 3, 4];

/// Conversion order: four of the five quality-2 sellers, then the quality-3
/// seller, then the quality-4 seller.
const CROWDING_ORDER: [usize; 6] = [0, 1, 2, 3, 5, 6];

/// Seller levels of crowding population `k` (`0..=6`): the first `k`
/// sellers of the conversion order are level 1.
pub fn crowding_levels(k: usize) -> Vec<Level> {
    let converted = &CROWDING_ORDER[..k.min(CROWDING_ORDER.len())];
    (0..CROWDING_QUALITIES.len())
        .map(|i| if converted.contains(&i) { Level::One } else { Level::Zero })
        .collect()
}

pub fn p_series_0level() -> ExperimentConfig {
    experiment(
        "p-series-0level",
        (1..=8)
            .map(|k| {
                let sellers: Vec<_> = p_series_qualities(k).into_iter().map(|q| (Level::Zero, q)).collect();
                population(format!("p{k}"), Level::Zero, &sellers, None)
            })
            .collect(),
    )
}

pub fn one_1level_seller() -> ExperimentConfig {
    experiment(
        "one-1level-seller",
        (1..=7)
            .map(|k| {
                let sellers: Vec<_> = one_level_seller_qualities(k)
                    .into_iter()
                    .enumerate()
                    .map(|(i, q)| (if i == 7 { Level::One } else { Level::Zero }, q))
                    .collect();
                let group = if k <= 5 { "two-peak" } else { "one-peak" };
                population(format!("p{k}"), Level::Zero, &sellers, Some(group))
            })
            .collect(),
    )
}

pub fn one_level_buyers() -> ExperimentConfig {
    experiment(
        "one-level-buyers",
        (1..=7)
            .map(|k| {
                let sellers: Vec<_> = level_one_buyer_qualities(k)
                    .into_iter()
                    .enumerate()
                    .map(|(i, q)| (if i == 7 { Level::One } else { Level::Zero }, q))
                    .collect();
                population(format!("p{k}"), Level::One, &sellers, None)
            })
            .collect(),
    )
}

pub fn crowding_1level() -> ExperimentConfig {
    experiment(
        "crowding-1level",
        (0..=6)
            .map(|k| {
                let sellers: Vec<_> = crowding_levels(k).into_iter().zip(CROWDING_QUALITIES).collect();
                population(format!("l{k}"), Level::Zero, &sellers, None)
            })
            .collect(),
    )
}

pub fn two_level_seller() -> ExperimentConfig {
    let rival_sets: [(&str, [u32; 7]); 3] = [
        ("equal", [8; 7]),
        ("one-plus1", [9, 8, 8, 8, 8, 8, 8]),
        ("one-plus2", [10, 8, 8, 8, 8, 8, 8]),
    ];
    experiment(
        "two-level-seller",
        rival_sets
            .iter()
            .map(|(name, rivals)| {
                let sellers: Vec<_> = std::iter::once((Level::Two, 8))
                    .chain(rivals.iter().map(|&q| (Level::One, q)))
                    .collect();
                population(name.to_string(), Level::One, &sellers, None)
            })
            .collect(),
    )
}

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    Some(match name {
        "p-series-0level" => p_series_0level(),
        "one-1level-seller" => one_1level_seller(),
        "one-level-buyers" => one_level_buyers(),
        "crowding-1level" => crowding_1level(),
        "two-level-seller" => two_level_seller(),
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_series_endpoints() {
        assert_eq!(p_series_qualities(1), vec![8; 8]);
        assert_eq!(p_series_qualities(2), vec![8, 8, 8, 8, 8, 8, 7, 8]);
        assert_eq!(p_series_qualities(3), vec![8, 8, 8, 8, 8, 6, 7, 8]);
        assert_eq!(p_series_qualities(8), vec![1, 2, 3, 4, 5, 6, 7, 8]);
        let cfg = p_series_0level();
        assert_eq!(cfg.populations.len(), 8);
        cfg.validate().unwrap();
    }

    #[test]
    fn one_level_seller_series() {
        assert_eq!(one_level_seller_qualities(1), vec![2; 8]);
        assert_eq!(one_level_seller_qualities(2), vec![2, 3, 2, 2, 2, 2, 2, 2]);
        assert_eq!(one_level_seller_qualities(7), vec![2, 3, 4, 5, 6, 7, 8, 2]);
        let cfg = one_1level_seller();
        assert_eq!(cfg.populations.len(), 7);
        for p in &cfg.populations {
            let last = p.market.sellers.last().unwrap();
            assert_eq!(last.level, Level::One);
            assert_eq!(last.quality.0, 2);
            assert!(p.market.sellers[..7].iter().all(|s| s.level == Level::Zero));
        }
    }

    #[test]
    fn one_level_buyer_series() {
        assert_eq!(level_one_buyer_qualities(1), vec![8; 8]);
        assert_eq!(level_one_buyer_qualities(7), vec![8, 2, 3, 4, 5, 6, 7, 8]);
        let cfg = one_level_buyers();
        assert!(cfg.populations.iter().all(|p| p.market.buyers.iter().all(|b| b.level == Level::One)));
    }

    #[test]
    fn crowding_series_converts_in_order() {
        let count = |k| crowding_levels(k).iter().filter(|l| **l == Level::One).count();
        for k in 0..=6 {
            assert_eq!(count(k), k);
        }
        assert_eq!(crowding_levels(4)[4], Level::Zero);
        assert_eq!(crowding_levels(6)[4], Level::Zero);
        assert_eq!(crowding_levels(5)[5], Level::One);
    }

    #[test]
    fn all_presets_validate() {
        for name in PRESET_NAMES {
            let cfg = preset(name).unwrap();
            cfg.validate().unwrap();
            assert_eq!(cfg.runs_per_population, 100);
            assert_eq!(cfg.auctions_per_run, 10_000);
            assert!(cfg.populations.iter().all(|p| p.market.buyers.len() == 5));
        }
        assert!(preset("nope").is_none());
    }
}
