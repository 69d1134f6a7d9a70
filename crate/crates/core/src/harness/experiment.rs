//! Replicated runs over a population series and their aggregation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::Level;
use crate::auction::{run_simulation, AuctionError, Market, RunTranscript, SimulationOutcome};
use crate::config::MarketConfig;
use crate::metrics::MetricsReport;

use super::config::{ExperimentConfig, Population};

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of run `run` of population `population`; depends on nothing else.
pub fn derive_seed(base: u64, population: usize, run: usize) -> u64 {
    base ^ mix(((population as u64) << 32) | run as u64)
}

/// Position of one replicate within an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cell {
    pub population: usize,
    pub run: usize,
    pub seed: u64,
}

fn thread_pool(parallelism: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .expect("thread pool")
}

/// Runs every (population, run) cell, up to `parallelism` at a time, and
/// maps each outcome through `inspect`. Results are grouped by population in
/// run order regardless of scheduling.
pub fn run_cells<T, F>(cfg: &ExperimentConfig, parallelism: usize, inspect: F) -> Result<Vec<Vec<T>>, AuctionError>
where
    T: Send,
    F: Fn(Cell, &Population, SimulationOutcome) -> T + Sync,
{
    let cells: Vec<Cell> = (0..cfg.populations.len())
        .flat_map(|p| {
            (0..cfg.runs_per_population).map(move |r| Cell {
                population: p,
                run: r,
                seed: derive_seed(cfg.base_seed, p, r),
            })
        })
        .collect();
    let results: Vec<(Cell, T)> = thread_pool(parallelism).install(|| {
        cells
            .par_iter()
            .map(|&cell| {
                let pop = &cfg.populations[cell.population];
                run_simulation(&pop.market, cell.seed, cfg.auctions_per_run).map(|out| (cell, inspect(cell, pop, out)))
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    let mut grouped: Vec<Vec<T>> = (0..cfg.populations.len()).map(|_| Vec::new()).collect();
    for (cell, value) in results {
        grouped[cell.population].push(value);
    }
    Ok(grouped)
}

/// Mean and spread of one metric across runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Standard error of the mean; zero for a single run.
    pub stderr: f64,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Stat {
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Self {
            // Rounding can push the mean a hair outside the sample range.
            mean: mean.clamp(min, max),
            stderr,
            min,
            max,
            n,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SellerAggregate {
    pub id: String,
    pub level: Level,
    pub quality: u32,
    pub cost: i64,
    pub win_rate: Option<Stat>,
    pub profit: Option<Stat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuyerAggregate {
    pub id: String,
    pub level: Level,
    pub value: Option<Stat>,
}

/// Per-population means and standard errors over all runs. `None` marks a
/// metric that is undefined, e.g. when runs have no auctions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationAggregate {
    pub name: String,
    pub group: Option<String>,
    pub runs: usize,
    pub auctions_per_run: u64,
    pub mean_price: Option<Stat>,
    pub volatility: Option<Stat>,
    pub equilibrium_episodes: Option<Stat>,
    pub final_price_is_equilibrium: Option<Stat>,
    /// Indexed by price.
    pub distribution: Vec<Option<Stat>>,
    pub sellers: Vec<SellerAggregate>,
    pub buyers: Vec<BuyerAggregate>,
}

impl PopulationAggregate {
    /// Aggregates per-run reports; runs whose metrics are undefined are
    /// passed as `None`.
    pub fn from_reports(pop: &Population, auctions_per_run: u64, reports: &[Option<MetricsReport>]) -> Self {
        let defined: Vec<&MetricsReport> = reports.iter().flatten().collect();
        let stat = |f: &dyn Fn(&MetricsReport) -> f64| {
            Stat::from_samples(&defined.iter().map(|r| f(r)).collect::<Vec<_>>())
        };
        let market: &MarketConfig = &pop.market;
        Self {
            name: market.name.clone(),
            group: pop.group.clone(),
            runs: reports.len(),
            auctions_per_run,
            mean_price: stat(&|r| r.mean_price),
            volatility: stat(&|r| r.volatility),
            equilibrium_episodes: stat(&|r| r.equilibrium_episodes.len() as f64),
            final_price_is_equilibrium: stat(&|r| f64::from(u8::from(r.final_price_is_equilibrium))),
            distribution: (0..market.price_levels as usize)
                .map(|p| stat(&|r| r.distribution.mass[p]))
                .collect(),
            sellers: market
                .sellers
                .iter()
                .enumerate()
                .map(|(i, s)| SellerAggregate {
                    id: s.id.clone(),
                    level: s.level,
                    quality: s.quality.0,
                    cost: s.cost,
                    win_rate: stat(&|r| r.outcomes.win_rate[i]),
                    profit: stat(&|r| r.outcomes.seller_profit[i] as f64),
                })
                .collect(),
            buyers: market
                .buyers
                .iter()
                .enumerate()
                .map(|(i, b)| BuyerAggregate {
                    id: b.id.clone(),
                    level: b.level,
                    value: stat(&|r| r.outcomes.buyer_value[i] as f64),
                })
                .collect(),
        }
    }

    pub fn seller(&self, id: &str) -> Option<&SellerAggregate> {
        self.sellers.iter().find(|s| s.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub experiment: String,
    pub base_seed: u64,
    pub populations: Vec<PopulationAggregate>,
}

/// Aggregate report plus, when requested, every run's transcript and
/// final agent states.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub report: AggregateReport,
    /// `transcripts[population][run]`, empty unless kept.
    pub transcripts: Vec<Vec<RunTranscript>>,
    /// `states[population][run]`: the market after its last auction, empty
    /// unless kept.
    pub states: Vec<Vec<Market>>,
}

/// What [`run_experiment_with`] keeps besides the aggregate report.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Retain {
    pub transcripts: bool,
    pub states: bool,
}

/// Runs the whole experiment. Transcripts are retained only when
/// `keep_transcripts` is set.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    parallelism: usize,
    keep_transcripts: bool,
) -> Result<ExperimentResult, AuctionError> {
    let retain = Retain {
        transcripts: keep_transcripts,
        states: false,
    };
    run_experiment_with(cfg, parallelism, retain)
}

pub fn run_experiment_with(
    cfg: &ExperimentConfig,
    parallelism: usize,
    retain: Retain,
) -> Result<ExperimentResult, AuctionError> {
    let min_len = cfg.episode_min_len;
    let cells = run_cells(cfg, parallelism, |_, pop, out| {
        let report = MetricsReport::compute(&out.transcript, &pop.market, min_len).ok();
        (
            report,
            retain.transcripts.then_some(out.transcript),
            retain.states.then_some(out.market),
        )
    })?;
    let mut populations = Vec::with_capacity(cells.len());
    let mut transcripts = Vec::new();
    let mut states = Vec::new();
    for (pop, runs) in cfg.populations.iter().zip(cells) {
        let mut reports = Vec::with_capacity(runs.len());
        let (mut kept_t, mut kept_s) = (Vec::new(), Vec::new());
        for (report, t, s) in runs {
            reports.push(report);
            kept_t.extend(t);
            kept_s.extend(s);
        }
        populations.push(PopulationAggregate::from_reports(pop, cfg.auctions_per_run, &reports));
        if retain.transcripts {
            transcripts.push(kept_t);
        }
        if retain.states {
            states.push(kept_s);
        }
    }
    Ok(ExperimentResult {
        report: AggregateReport {
            experiment: cfg.name.clone(),
            base_seed: cfg.base_seed,
            populations,
        },
        transcripts,
        states,
    })
}
