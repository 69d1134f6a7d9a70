//! Learning primitives shared by all agent levels: annealed schedules,
//! exponential-average reward tables and sliding-window densities.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

/// Default sliding-window capacity for empirical densities.
pub const DEFAULT_WINDOW: usize = 20;

/// A rate that decays geometrically towards a fixed floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub current: f64,
    pub floor: f64,
    pub gamma: f64,
}

impl AnnealSchedule {
    /// Schedule starting at 1.
    pub fn new(floor: f64, gamma: f64) -> Self {
        Self {
            current: 1.0,
            floor,
            gamma,
        }
    }

    /// Schedule held at a constant value.
    pub fn constant(value: f64) -> Self {
        Self {
            current: value,
            floor: value,
            gamma: 1.0,
        }
    }

    pub fn value(&self) -> f64 {
        self.current
    }

    /// `current <- gamma * current` while that stays above the floor,
    /// otherwise `current <- floor`.
    pub fn step(&mut self) {
        let next = self.gamma * self.current;
        self.current = if next > self.floor { next } else { self.floor };
    }
}

/// Expected reward per action (price), updated by exponential averaging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardTable {
    entries: Vec<f64>,
}

impl RewardTable {
    /// Table over `actions` actions, all estimates zero.
    pub fn new(actions: usize) -> Self {
        Self {
            entries: vec![0.0; actions],
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, action: usize) -> f64 {
        self.entries[action]
    }

    pub fn set(&mut self, action: usize, estimate: f64) {
        self.entries[action] = estimate;
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// `entry <- (1 - alpha) * entry + alpha * reward` for `action` only.
    pub fn update(&mut self, action: usize, reward: f64, alpha: f64) {
        let e = &mut self.entries[action];
        *e = (1.0 - alpha) * *e + alpha * reward;
    }
}

/// Frequency distribution over the last `capacity` observations drawn
/// from the finite support `0..support`.
///
/// Queries on an empty window return `None`: there is no model yet, which
/// is different from an observed probability of zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmpiricalDensity {
    window: VecDeque<u32>,
    counts: Vec<u32>,
    capacity: usize,
}

impl EmpiricalDensity {
    pub fn new(support: usize, capacity: usize) -> Self {
        assert!(capacity > 0, "density window must hold at least one observation");
        Self {
            window: VecDeque::with_capacity(capacity),
            counts: vec![0; support],
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn support(&self) -> usize {
        self.counts.len()
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    /// Retained observations, oldest first.
    pub fn window(&self) -> impl ExactSizeIterator<Item = u32> + '_ {
        self.window.iter().copied()
    }

    /// Appends `x`, evicting the oldest observation when full.
    pub fn observe(&mut self, x: u32) {
        if self.window.len() == self.capacity {
            if let Some(old) = self.window.pop_front() {
                self.counts[old as usize] -= 1;
            }
        }
        self.window.push_back(x);
        self.counts[x as usize] += 1;
    }

    /// Number of retained observations equal to `x`.
    pub fn count(&self, x: u32) -> u32 {
        self.counts.get(x as usize).copied().unwrap_or(0)
    }

    /// Per-value counts over the whole support.
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn prob(&self, x: u32) -> Option<f64> {
        if self.is_empty() {
            return None;
        }
        Some(f64::from(self.count(x)) / self.len() as f64)
    }

    /// `sum_x prob(x) * f(x)` over the support.
    pub fn expectation(&self, f: impl Fn(u32) -> f64) -> Option<f64> {
        if self.is_empty() {
            return None;
        }
        let n = self.len() as f64;
        Some(
            self.counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(x, &c)| f64::from(c) / n * f(x as u32))
                .sum(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn anneal_examples() {
        let mut s = AnnealSchedule::new(0.05, 0.99);
        s.step();
        assert!((s.value() - 0.99).abs() < 1e-15);

        let mut at_floor = AnnealSchedule {
            current: 0.05,
            floor: 0.05,
            gamma: 0.99,
        };
        at_floor.step();
        assert_eq!(at_floor.value(), 0.05);
    }

    #[test]
    fn anneal_clamp_engages_at_step_299() {
        // Oracle: closed form gamma^k, independent of the iterated recurrence.
        let first_clamped = (1..).find(|&k| 0.99f64.powi(k) <= 0.05).unwrap();
        assert_eq!(first_clamped, 299);

        let mut s = AnnealSchedule::new(0.05, 0.99);
        for k in 1..=300 {
            s.step();
            if k < 299 {
                assert!(s.value() > 0.05, "clamped early at step {k}");
            } else {
                assert_eq!(s.value(), 0.05, "not clamped at step {k}");
            }
        }
    }

    #[test]
    fn rl_update_examples() {
        let mut t = RewardTable::new(20);
        t.update(9, 15.0, 1.0);
        assert_eq!(t.get(9), 15.0);

        t.set(3, 10.0);
        t.update(3, 10.0, 0.37);
        assert_eq!(t.get(3), 10.0);

        t.update(4, 0.0, 0.5);
        t.set(5, 10.0);
        t.update(5, 20.0, 0.1);
        assert!((t.get(5) - 11.0).abs() < 1e-12);
        assert_eq!(t.get(4), 0.0);
    }

    #[test]
    fn density_observe_and_evict() {
        let mut d = EmpiricalDensity::new(20, 2);
        d.observe(5);
        assert_eq!(d.window().collect::<Vec<_>>(), vec![5]);

        let mut d = EmpiricalDensity::new(20, 2);
        d.observe(1);
        d.observe(2);
        d.observe(3);
        assert_eq!(d.window().collect::<Vec<_>>(), vec![2, 3]);
        assert_eq!(d.count(1), 0);

        let mut d = EmpiricalDensity::new(20, 3);
        for x in [7, 7, 9] {
            d.observe(x);
        }
        assert!((d.prob(7).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn density_prob_examples() {
        let mut d = EmpiricalDensity::new(20, 20);
        assert_eq!(d.prob(5), None);
        d.observe(9);
        assert_eq!(d.prob(5), Some(0.0));
        d.observe(9);
        d.observe(10);
        assert!((d.prob(9).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn density_expectation_examples() {
        let mut d = EmpiricalDensity::new(20, 20);
        assert_eq!(d.expectation(f64::from), None);
        for _ in 0..3 {
            d.observe(8);
        }
        assert_eq!(d.expectation(f64::from), Some(8.0));

        let mut d = EmpiricalDensity::new(20, 20);
        d.observe(7);
        d.observe(9);
        assert_eq!(d.expectation(f64::from), Some(8.0));
        // (3*7 - 9 + 3*9 - 9) / 2 = (12 + 18) / 2
        let e = d.expectation(|q| 3.0 * f64::from(q) - 9.0).unwrap();
        assert!((e - 15.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn anneal_matches_closed_form(
            initial in 0.0f64..=1.0,
            floor in 0.0f64..0.5,
            gamma in 0.5f64..0.999,
            k in 0u32..600,
        ) {
            let mut s = AnnealSchedule { current: initial.max(floor), floor, gamma };
            let mut prev = s.value();
            for _ in 0..k {
                s.step();
                prop_assert!(s.value() <= prev + 1e-15);
                prop_assert!(s.value() >= floor);
                prev = s.value();
            }
            let closed = (gamma.powi(k as i32) * initial.max(floor)).max(floor);
            prop_assert!((s.value() - closed).abs() < 1e-9);
        }

        #[test]
        fn rl_update_contracts_toward_reward(
            entry in -50.0f64..50.0,
            reward in -50.0f64..50.0,
            alpha in 0.0f64..=1.0,
        ) {
            let mut t = RewardTable::new(3);
            t.set(1, entry);
            t.set(0, 4.0);
            t.update(1, reward, alpha);
            let lhs = (t.get(1) - reward).abs();
            let rhs = (1.0 - alpha) * (entry - reward).abs();
            prop_assert!((lhs - rhs).abs() < 1e-9);
            prop_assert_eq!(t.get(0), 4.0);
        }

        #[test]
        fn density_is_normalized_and_fifo(
            obs in proptest::collection::vec(0u32..20, 1..60),
            cap in 1usize..25,
            c in -10.0f64..10.0,
        ) {
            let mut d = EmpiricalDensity::new(20, cap);
            for &x in &obs {
                d.observe(x);
            }
            prop_assert!(d.len() <= cap);
            let total: f64 = (0..20).map(|x| d.prob(x).unwrap()).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            let tail: Vec<u32> = obs[obs.len().saturating_sub(cap)..].to_vec();
            prop_assert_eq!(d.window().collect::<Vec<_>>(), tail);
            prop_assert!((d.expectation(|_| c).unwrap() - c).abs() < 1e-9);
        }
    }
}
