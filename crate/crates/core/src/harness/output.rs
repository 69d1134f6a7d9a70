//! Table, report and transcript files.
//!
//! Layout of an output directory:
//!
//! * `summary.csv`: `population,group,runs,auctions_per_run,mean_price,mean_price_se,volatility,volatility_se,episodes,episodes_se,final_equilibrium,final_equilibrium_se`
//! * `agents.csv`: `population,agent,role,level,quality,cost,win_rate,win_rate_se,profit,profit_se,value,value_se`
//! * `distribution.csv`: `population,price,mass,mass_se` for prices with positive mean mass
//! * `report.json`: the full aggregate report
//! * `transcripts/<population>/run<k>.csv`: one file per run
//! * `checkpoints/<population>/run<k>.json`: final agent states, one file per run
//!
//! Undefined metrics are written as `NA`; fields that do not apply to a role
//! are left empty. `*_se` columns hold standard errors across runs.
//!
//! A transcript starts with a `# config_hash=<hex> seed=<u64>` line followed
//! by the header `index,buyer,winner,price,perceived_quality,<seller ids...>`
//! and one line per auction; the trailing columns are the bids of every
//! seller in roster order.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::agents::{Bid, BuyerId, SellerId};
use crate::auction::{AuctionRecord, Market, RunTranscript};
use crate::config::MarketConfig;
use crate::market::{value, Price, Quality};
use crate::metrics::MetricsReport;

use super::config::ExperimentConfig;
use super::experiment::{AggregateReport, PopulationAggregate, Stat};

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{}: line {line}: {message}", path.display())]
    Format { path: PathBuf, line: usize, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> OutputError + '_ {
    move |source| OutputError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Which files [`emit_outputs`] writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutputFormats {
    pub tables: bool,
    pub json: bool,
    pub transcripts: bool,
}

impl Default for OutputFormats {
    fn default() -> Self {
        Self {
            tables: true,
            json: true,
            transcripts: false,
        }
    }
}

fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

fn stat_cols(s: &Option<Stat>) -> [String; 2] {
    match s {
        Some(s) => [fmt_f64(s.mean), fmt_f64(s.stderr)],
        None => ["NA".into(), "NA".into()],
    }
}

fn write_table(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), OutputError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub const SUMMARY_HEADER: [&str; 12] = [
    "population",
    "group",
    "runs",
    "auctions_per_run",
    "mean_price",
    "mean_price_se",
    "volatility",
    "volatility_se",
    "episodes",
    "episodes_se",
    "final_equilibrium",
    "final_equilibrium_se",
];

pub const AGENTS_HEADER: [&str; 12] = [
    "population",
    "agent",
    "role",
    "level",
    "quality",
    "cost",
    "win_rate",
    "win_rate_se",
    "profit",
    "profit_se",
    "value",
    "value_se",
];

pub const DISTRIBUTION_HEADER: [&str; 4] = ["population", "price", "mass", "mass_se"];

fn summary_rows(pops: &[PopulationAggregate]) -> Vec<Vec<String>> {
    pops.iter()
        .map(|p| {
            let mut row = vec![
                p.name.clone(),
                p.group.clone().unwrap_or_default(),
                p.runs.to_string(),
                p.auctions_per_run.to_string(),
            ];
            for s in [&p.mean_price, &p.volatility, &p.equilibrium_episodes, &p.final_price_is_equilibrium] {
                row.extend(stat_cols(s));
            }
            row
        })
        .collect()
}

fn agent_rows(pops: &[PopulationAggregate]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for p in pops {
        for s in &p.sellers {
            let mut row = vec![
                p.name.clone(),
                s.id.clone(),
                "seller".into(),
                u8::from(s.level).to_string(),
                s.quality.to_string(),
                s.cost.to_string(),
            ];
            row.extend(stat_cols(&s.win_rate));
            row.extend(stat_cols(&s.profit));
            row.extend([String::new(), String::new()]);
            rows.push(row);
        }
        for b in &p.buyers {
            let mut row = vec![
                p.name.clone(),
                b.id.clone(),
                "buyer".into(),
                u8::from(b.level).to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ];
            row.extend(stat_cols(&b.value));
            rows.push(row);
        }
    }
    rows
}

fn distribution_rows(pops: &[PopulationAggregate]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for p in pops {
        for (price, s) in p.distribution.iter().enumerate() {
            if let Some(s) = s.filter(|s| s.mean > 0.0) {
                rows.push(vec![p.name.clone(), price.to_string(), fmt_f64(s.mean), fmt_f64(s.stderr)]);
            }
        }
    }
    rows
}

/// Writes the transcript of one run.
pub fn write_transcript<W: Write>(mut w: W, transcript: &RunTranscript, config: &MarketConfig) -> std::io::Result<()> {
    writeln!(w, "# config_hash={} seed={}", transcript.config_hash, transcript.seed)?;
    let mut header = vec!["index", "buyer", "winner", "price", "perceived_quality"];
    header.extend(config.sellers.iter().map(|s| s.id.as_str()));
    writeln!(w, "{}", header.join(","))?;
    for r in &transcript.records {
        write!(
            w,
            "{},{},{},{},{}",
            r.index, config.buyers[r.buyer.0].id, config.sellers[r.winner.0].id, r.price_paid.0, r.perceived_quality.0
        )?;
        for b in &r.bids {
            write!(w, ",{}", b.price.0)?;
        }
        writeln!(w)?;
    }
    w.flush()
}

/// Parses a transcript written by [`write_transcript`]; `path` is only used
/// in error messages.
pub fn read_transcript<R: BufRead>(r: R, config: &MarketConfig, path: &Path) -> Result<RunTranscript, OutputError> {
    let fail = |line: usize, message: String| OutputError::Format {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = r.lines().enumerate();
    let mut next = || -> Result<Option<(usize, String)>, OutputError> {
        lines.next().map(|(i, l)| l.map(|l| (i + 1, l)).map_err(io_err(path))).transpose()
    };

    let (n, meta) = next()?.ok_or_else(|| fail(1, "missing metadata line".into()))?;
    let meta = meta
        .strip_prefix("# ")
        .ok_or_else(|| fail(n, "metadata line must start with '# '".into()))?;
    let mut config_hash = None;
    let mut seed = None;
    for kv in meta.split_whitespace() {
        match kv.split_once('=') {
            Some(("config_hash", v)) => config_hash = Some(v.to_string()),
            Some(("seed", v)) => seed = Some(v.parse::<u64>().map_err(|e| fail(n, format!("bad seed: {e}")))?),
            _ => return Err(fail(n, format!("unexpected metadata {kv:?}"))),
        }
    }
    let config_hash = config_hash.ok_or_else(|| fail(n, "missing config_hash".into()))?;
    let seed = seed.ok_or_else(|| fail(n, "missing seed".into()))?;

    let (n, header) = next()?.ok_or_else(|| fail(2, "missing header".into()))?;
    let mut expected = vec!["index", "buyer", "winner", "price", "perceived_quality"];
    expected.extend(config.sellers.iter().map(|s| s.id.as_str()));
    if header.split(',').collect::<Vec<_>>() != expected {
        return Err(fail(n, format!("header does not match roster, expected {}", expected.join(","))));
    }

    let buyer_index = |id: &str| config.buyers.iter().position(|b| b.id == id);
    let mut records = Vec::new();
    while let Some((n, line)) = next()? {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 + config.sellers.len() {
            return Err(fail(n, format!("expected {} fields, got {}", 5 + config.sellers.len(), fields.len())));
        }
        let num = |s: &str, what: &str| s.parse::<u64>().map_err(|e| fail(n, format!("bad {what} {s:?}: {e}")));
        let index = num(fields[0], "index")?;
        let buyer = buyer_index(fields[1]).ok_or_else(|| fail(n, format!("unknown buyer {:?}", fields[1])))?;
        let winner = config
            .seller_index(fields[2])
            .ok_or_else(|| fail(n, format!("unknown seller {:?}", fields[2])))?;
        let price = Price(num(fields[3], "price")? as u32);
        let perceived = Quality(num(fields[4], "quality")? as u32);
        if price.0 >= config.price_levels || perceived.0 >= config.quality_levels {
            return Err(fail(n, "price or quality out of range".into()));
        }
        let bids = fields[5..]
            .iter()
            .enumerate()
            .map(|(i, f)| {
                Ok(Bid {
                    seller: SellerId(i),
                    price: Price(num(f, "bid")? as u32),
                })
            })
            .collect::<Result<Vec<_>, OutputError>>()?;
        if bids[winner].price != price {
            return Err(fail(n, "winner's bid differs from the price paid".into()));
        }
        let spec = &config.sellers[winner];
        records.push(AuctionRecord {
            index,
            buyer: BuyerId(buyer),
            bids,
            winner: SellerId(winner),
            price_paid: price,
            true_quality: spec.quality,
            perceived_quality: perceived,
            winner_profit: price.money() - spec.cost,
            buyer_value: value(config.buyers[buyer].value_params, price, perceived),
        });
    }
    Ok(RunTranscript {
        config_hash,
        seed,
        records,
    })
}

/// Writes the final state of every run as JSON; `states[population][run]`
/// follows the order of `cfg.populations`.
pub fn write_checkpoints(cfg: &ExperimentConfig, states: &[Vec<Market>], out_dir: &Path) -> Result<Vec<PathBuf>, OutputError> {
    let mut written = Vec::new();
    for (pop, runs) in cfg.populations.iter().zip(states) {
        let dir = out_dir.join("checkpoints").join(pop.name());
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        for (run, market) in runs.iter().enumerate() {
            let path = dir.join(format!("run{run:04}.json"));
            let text = serde_json::to_string(market).expect("market state serializes");
            fs::write(&path, text + "\n").map_err(io_err(&path))?;
            written.push(path);
        }
    }
    Ok(written)
}

pub fn transcript_path(out_dir: &Path, population: &str, run: usize) -> PathBuf {
    out_dir.join("transcripts").join(population).join(format!("run{run:04}.csv"))
}

/// Writes the report tables, JSON and (optionally) transcripts under
/// `out_dir`. `transcripts[population][run]` must follow the order of
/// `cfg.populations`.
pub fn emit_outputs(
    report: &AggregateReport,
    cfg: &ExperimentConfig,
    transcripts: &[Vec<RunTranscript>],
    out_dir: &Path,
    formats: OutputFormats,
) -> Result<Vec<PathBuf>, OutputError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut written = Vec::new();
    if formats.tables {
        let path = out_dir.join("summary.csv");
        write_table(&path, &SUMMARY_HEADER, summary_rows(&report.populations))?;
        written.push(path);
        let path = out_dir.join("agents.csv");
        write_table(&path, &AGENTS_HEADER, agent_rows(&report.populations))?;
        written.push(path);
        let path = out_dir.join("distribution.csv");
        write_table(&path, &DISTRIBUTION_HEADER, distribution_rows(&report.populations))?;
        written.push(path);
    }
    if formats.json {
        let path = out_dir.join("report.json");
        let text = serde_json::to_string_pretty(report).expect("report serializes");
        fs::write(&path, text + "\n").map_err(io_err(&path))?;
        written.push(path);
    }
    if formats.transcripts {
        for (pop, runs) in cfg.populations.iter().zip(transcripts) {
            for (run, t) in runs.iter().enumerate() {
                let path = transcript_path(out_dir, pop.name(), run);
                let dir = path.parent().expect("transcript path has a parent");
                fs::create_dir_all(dir).map_err(io_err(dir))?;
                let file = File::create(&path).map_err(io_err(&path))?;
                write_transcript(BufWriter::new(file), t, &pop.market).map_err(io_err(&path))?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

/// Reads every stored transcript of `cfg` from `dir` (an output directory
/// of a previous run) and rebuilds the aggregate report.
pub fn recompute_report(cfg: &ExperimentConfig, dir: &Path) -> Result<AggregateReport, OutputError> {
    let mut populations = Vec::new();
    for pop in &cfg.populations {
        let pop_dir = dir.join("transcripts").join(pop.name());
        let mut files: Vec<PathBuf> = fs::read_dir(&pop_dir)
            .map_err(io_err(&pop_dir))?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()
            .map_err(io_err(&pop_dir))?;
        files.retain(|p| p.extension().is_some_and(|e| e == "csv"));
        files.sort();
        let mut reports = Vec::with_capacity(files.len());
        let mut auctions = 0;
        for path in &files {
            let file = File::open(path).map_err(io_err(path))?;
            let t = read_transcript(BufReader::new(file), &pop.market, path)?;
            auctions = auctions.max(t.records.len() as u64);
            reports.push(MetricsReport::compute(&t, &pop.market, cfg.episode_min_len).ok());
        }
        populations.push(PopulationAggregate::from_reports(pop, auctions, &reports));
    }
    Ok(AggregateReport {
        experiment: cfg.name.clone(),
        base_seed: cfg.base_seed,
        populations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::experiment::run_experiment;
    use crate::harness::presets;

    fn small() -> ExperimentConfig {
        let mut cfg = presets::crowding_1level();
        cfg.populations.truncate(2);
        cfg.runs_per_population = 2;
        cfg.auctions_per_run = 300;
        cfg.base_seed = 3;
        cfg
    }

    #[test]
    fn transcript_round_trip_is_lossless() {
        let cfg = small();
        let res = run_experiment(&cfg, 2, true).unwrap();
        let t = &res.transcripts[1][0];
        let market = &cfg.populations[1].market;
        let mut buf = Vec::new();
        write_transcript(&mut buf, t, market).unwrap();
        let back = read_transcript(buf.as_slice(), market, Path::new("mem")).unwrap();
        assert_eq!(&back, t);
    }

    #[test]
    fn recomputed_report_matches_original() {
        let cfg = small();
        let res = run_experiment(&cfg, 2, true).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let formats = OutputFormats {
            transcripts: true,
            ..Default::default()
        };
        let written = emit_outputs(&res.report, &cfg, &res.transcripts, dir.path(), formats).unwrap();
        assert_eq!(written.len(), 4 + 4);
        assert_eq!(recompute_report(&cfg, dir.path()).unwrap(), res.report);
        let json: AggregateReport =
            serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
        assert_eq!(json, res.report);
    }

    #[test]
    fn checkpoints_restore_the_final_market() {
        use crate::harness::experiment::{run_experiment_with, Retain};
        let cfg = small();
        let retain = Retain {
            transcripts: false,
            states: true,
        };
        let res = run_experiment_with(&cfg, 1, retain).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let written = write_checkpoints(&cfg, &res.states, dir.path()).unwrap();
        assert_eq!(written.len(), 4);
        let back: Market = serde_json::from_str(&fs::read_to_string(&written[3]).unwrap()).unwrap();
        assert_eq!(back, res.states[1][1]);
    }

    #[test]
    fn empty_report_writes_headers_only() {
        let dir = tempfile::tempdir().unwrap();
        let report = AggregateReport {
            experiment: "x".into(),
            base_seed: 0,
            populations: vec![],
        };
        emit_outputs(&report, &small(), &[], dir.path(), OutputFormats::default()).unwrap();
        let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(summary.lines().count(), 1);
        assert!(summary.starts_with("population,group,runs"));
    }

    #[test]
    fn undefined_metrics_are_na() {
        let mut cfg = small();
        cfg.auctions_per_run = 0;
        let res = run_experiment(&cfg, 1, false).unwrap();
        let dir = tempfile::tempdir().unwrap();
        emit_outputs(&res.report, &cfg, &[], dir.path(), OutputFormats::default()).unwrap();
        let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert!(summary.lines().nth(1).unwrap().contains("NA"));
    }

    #[test]
    fn malformed_transcripts_are_rejected() {
        let market = &small().populations[0].market;
        let bad = [
            "",
            "config_hash=a seed=1\n",
            "# config_hash=a seed=x\n",
            "# config_hash=a seed=1\nindex,buyer\n",
        ];
        for text in bad {
            assert!(read_transcript(text.as_bytes(), market, Path::new("t")).is_err(), "{text:?}");
        }
        let mut ok = String::from("# config_hash=a seed=1\nindex,buyer,winner,price,perceived_quality");
        for s in &market.sellers {
            ok += &format!(",{}", s.id);
        }
        ok += "\n";
        let row_bids = ",5".repeat(market.sellers.len());
        assert!(read_transcript(format!("{ok}0,b1,s1,5,2{row_bids}\n").as_bytes(), market, Path::new("t")).is_ok());
        assert!(read_transcript(format!("{ok}0,b9,s1,5,2{row_bids}\n").as_bytes(), market, Path::new("t")).is_err());
        assert!(read_transcript(format!("{ok}0,b1,s1,6,2{row_bids}\n").as_bytes(), market, Path::new("t")).is_err());
    }
}
