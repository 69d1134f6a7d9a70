//! Python bindings: market arithmetic, metrics, the learning primitives and
//! whole experiments.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use infomarket::harness::{self, ExperimentConfig};
use infomarket::learning;
use infomarket::market::{self, Price, Quality, ValueParams};
use infomarket::metrics::{self, MetricsReport};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_error(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Converts serialized data into plain Python objects.
fn to_py(py: Python<'_>, v: &serde_json::Value) -> PyResult<Py<PyAny>> {
    use serde_json::Value;
    Ok(match v {
        Value::Null => py.None(),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any().unbind(),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.into_pyobject(py)?.into_any().unbind(),
            (None, Some(u)) => u.into_pyobject(py)?.into_any().unbind(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any().unbind(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any().unbind(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            list.into_any().unbind()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, to_py(py, item)?)?;
            }
            dict.into_any().unbind()
        }
    })
}

fn serialize_to_py<T: serde::Serialize>(py: Python<'_>, x: &T) -> PyResult<Py<PyAny>> {
    to_py(py, &serde_json::to_value(x).map_err(runtime_error)?)
}

fn prices(xs: Vec<u32>) -> Vec<Price> {
    xs.into_iter().map(Price).collect()
}

/// Buyer value of a good bought at `price` and perceived at `quality`.
#[pyfunction]
#[pyo3(signature = (price, quality, quality_weight = 3, price_weight = -1))]
fn value(price: u32, quality: u32, quality_weight: i64, price_weight: i64) -> i64 {
    market::value(
        ValueParams {
            quality_weight,
            price_weight,
        },
        Price(price),
        Quality(quality),
    )
}

/// Seller profit of one auction.
#[pyfunction]
#[pyo3(signature = (price, cost, won = true))]
fn profit(price: u32, cost: i64, won: bool) -> i64 {
    market::profit(Price(price), cost, won)
}

/// Fraction of consecutive prices that differ.
#[pyfunction]
fn volatility(price_series: Vec<u32>) -> PyResult<f64> {
    metrics::volatility(&prices(price_series)).map_err(value_error)
}

/// Share of auctions at each price level.
#[pyfunction]
#[pyo3(signature = (price_series, price_levels = 20))]
fn price_distribution(price_series: Vec<u32>, price_levels: u32) -> PyResult<Vec<f64>> {
    metrics::price_distribution(&prices(price_series), price_levels)
        .map(|d| d.mass)
        .map_err(value_error)
}

#[pyfunction]
fn preset_names() -> Vec<&'static str> {
    harness::PRESET_NAMES.to_vec()
}

/// `ε`/`α` schedule: multiplied by `gamma` each step, never below `floor`.
#[pyclass(name = "AnnealSchedule")]
struct PyAnneal(learning::AnnealSchedule);

#[pymethods]
impl PyAnneal {
    #[new]
    #[pyo3(signature = (floor = 0.05, gamma = 0.99))]
    fn new(floor: f64, gamma: f64) -> Self {
        Self(learning::AnnealSchedule::new(floor, gamma))
    }

    #[getter]
    fn value(&self) -> f64 {
        self.0.value()
    }

    fn step(&mut self) -> f64 {
        self.0.step();
        self.0.value()
    }
}

/// Sliding-window frequency model over `0..support`.
#[pyclass(name = "EmpiricalDensity")]
struct PyDensity(learning::EmpiricalDensity);

#[pymethods]
impl PyDensity {
    #[new]
    #[pyo3(signature = (support = 20, capacity = 20))]
    fn new(support: usize, capacity: usize) -> PyResult<Self> {
        if support == 0 || capacity == 0 {
            return Err(value_error("support and capacity must be positive"));
        }
        Ok(Self(learning::EmpiricalDensity::new(support, capacity)))
    }

    fn observe(&mut self, x: u32) -> PyResult<()> {
        if x as usize >= self.0.support() {
            return Err(value_error(format!("{x} outside 0..{}", self.0.support())));
        }
        self.0.observe(x);
        Ok(())
    }

    fn prob(&self, x: u32) -> Option<f64> {
        self.0.prob(x)
    }

    fn window(&self) -> Vec<u32> {
        self.0.window().collect()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

/// A series of populations with replication settings.
#[pyclass(name = "Experiment")]
struct PyExperiment(ExperimentConfig);

#[pymethods]
impl PyExperiment {
    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        harness::preset(name)
            .map(Self)
            .ok_or_else(|| value_error(format!("unknown preset {name:?}")))
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        harness::parse_config(text, "<string>").map(Self).map_err(value_error)
    }

    fn to_toml(&self) -> String {
        self.0.to_toml()
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name.clone()
    }

    #[getter]
    fn populations(&self) -> Vec<String> {
        self.0.populations.iter().map(|p| p.name().to_string()).collect()
    }

    #[getter]
    fn runs(&self) -> usize {
        self.0.runs_per_population
    }

    #[setter]
    fn set_runs(&mut self, runs: usize) {
        self.0.runs_per_population = runs;
    }

    #[getter]
    fn auctions(&self) -> u64 {
        self.0.auctions_per_run
    }

    #[setter]
    fn set_auctions(&mut self, auctions: u64) {
        self.0.auctions_per_run = auctions;
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.0.base_seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.0.base_seed = seed;
    }

    /// Runs every population and returns the aggregate report as a dict.
    #[pyo3(signature = (parallel = 1))]
    fn run(&self, py: Python<'_>, parallel: usize) -> PyResult<Py<PyAny>> {
        self.0.validate().map_err(value_error)?;
        let cfg = self.0.clone();
        let result = py
            .detach(move || harness::run_experiment(&cfg, parallel, false))
            .map_err(runtime_error)?;
        serialize_to_py(py, &result.report)
    }

    /// One run of population `population`: its auction records and metrics.
    #[pyo3(signature = (population, seed, auctions = None))]
    fn simulate(&self, py: Python<'_>, population: &str, seed: u64, auctions: Option<u64>) -> PyResult<Py<PyAny>> {
        let pop = self
            .0
            .populations
            .iter()
            .find(|p| p.name() == population)
            .ok_or_else(|| value_error(format!("no population {population:?}")))?;
        let market = pop.market.clone();
        let n = auctions.unwrap_or(self.0.auctions_per_run);
        let out = py
            .detach(|| infomarket::run_simulation(&market, seed, n))
            .map_err(runtime_error)?;
        let report = MetricsReport::compute(&out.transcript, &market, self.0.episode_min_len).ok();
        let dict = PyDict::new(py);
        dict.set_item("transcript", serialize_to_py(py, &out.transcript)?)?;
        dict.set_item("metrics", serialize_to_py(py, &report)?)?;
        Ok(dict.into_any().unbind())
    }
}

#[pymodule]
fn pyinfomarket(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(value, m)?)?;
    m.add_function(wrap_pyfunction!(profit, m)?)?;
    m.add_function(wrap_pyfunction!(volatility, m)?)?;
    m.add_function(wrap_pyfunction!(price_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(preset_names, m)?)?;
    m.add_class::<PyAnneal>()?;
    m.add_class::<PyDensity>()?;
    m.add_class::<PyExperiment>()?;
    Ok(())
}
