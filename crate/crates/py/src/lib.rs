//! Python bindings for the relay-rate library.
//!
//! The module mirrors the Rust surface: channel instances and random
//! ensembles, relay configurations, single-point evaluation, configuration
//! search, reference schemes, deterministic CSV sweeps, the half-duplex
//! scheduling factor, and the finite-alphabet network solver. Rates are
//! plain floats in bits per channel use; every library failure raises
//! `ValueError` with the library's message.

use std::collections::BTreeMap;
use std::str::FromStr;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn value_error(e: vfdrelay::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_decoder(text: &str) -> PyResult<vfdrelay::Decoder> {
    vfdrelay::Decoder::from_str(text).map_err(value_error)
}

fn parse_variant(text: &str) -> PyResult<vfdrelay::FormulaVariant> {
    vfdrelay::FormulaVariant::from_str(text).map_err(value_error)
}

/// One network realization: per-hop signal gains and per-stage cross gains,
/// both linear.
#[pyclass(name = "ChannelInstance", frozen)]
struct PyChannelInstance {
    inner: vfdrelay::ChannelInstance,
}

#[pymethods]
impl PyChannelInstance {
    /// Builds from linear gains: `snr` has one entry per hop (K + 1 for K
    /// relay stages), `inr` one per relay stage.
    #[new]
    fn new(snr: Vec<f64>, inr: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: vfdrelay::ChannelInstance::new(snr, inr).map_err(value_error)? })
    }

    /// Builds from decibel gains; `None` cross entries mean no cross link.
    #[staticmethod]
    fn from_db(snr_db: Vec<f64>, inr_db: Vec<Option<f64>>) -> PyResult<Self> {
        let snr = snr_db.iter().map(|&d| vfdrelay::channel::db_to_linear(d)).collect();
        let inr = inr_db
            .iter()
            .map(|d| d.map_or(0.0, vfdrelay::channel::db_to_linear))
            .collect();
        Ok(Self { inner: vfdrelay::ChannelInstance::new(snr, inr).map_err(value_error)? })
    }

    #[getter]
    fn num_relays(&self) -> usize {
        self.inner.num_relays()
    }

    #[getter]
    fn snr(&self) -> Vec<f64> {
        (1..=self.inner.num_relays() + 1).map(|k| self.inner.snr_at(k)).collect()
    }

    #[getter]
    fn inr(&self) -> Vec<f64> {
        (1..=self.inner.num_relays()).map(|k| self.inner.inr_at(k)).collect()
    }

    /// Signal gain of hop `k` for `k` in `1..=K+1`.
    fn snr_at(&self, k: usize) -> PyResult<f64> {
        if k == 0 || k > self.inner.num_relays() + 1 {
            return Err(PyValueError::new_err(format!("hop index {k} out of range")));
        }
        Ok(self.inner.snr_at(k))
    }

    /// Cross gain into stage `k`; the destination stage `K+1` reports 0.
    fn inr_at(&self, k: usize) -> PyResult<f64> {
        if k == 0 || k > self.inner.num_relays() + 1 {
            return Err(PyValueError::new_err(format!("stage index {k} out of range")));
        }
        Ok(self.inner.inr_at(k))
    }

    /// Short hex digest identifying the exact gain values.
    fn digest(&self) -> String {
        self.inner.digest()
    }

    fn __repr__(&self) -> String {
        format!("ChannelInstance(snr={:?}, inr={:?})", self.snr(), self.inr())
    }
}

/// A relaying configuration: which stages quantize and each stage's power
/// split, plus the decoder and the cross-constraint reading.
#[pyclass(name = "ModeConfig", frozen)]
struct PyModeConfig {
    inner: vfdrelay::ModeConfig,
}

#[pymethods]
impl PyModeConfig {
    #[new]
    #[pyo3(signature = (qmf_set, theta, decoder = "sd", variant = "printed"))]
    fn new(qmf_set: Vec<usize>, theta: Vec<f64>, decoder: &str, variant: &str) -> PyResult<Self> {
        let cfg = vfdrelay::ModeConfig::new(
            qmf_set.into_iter().collect(),
            theta,
            parse_decoder(decoder)?,
            parse_variant(variant)?,
        )
        .map_err(value_error)?;
        Ok(Self { inner: cfg })
    }

    #[getter]
    fn qmf_set(&self) -> Vec<usize> {
        self.inner.qmf_set().iter().copied().collect()
    }

    #[getter]
    fn theta(&self) -> Vec<f64> {
        self.inner.theta().to_vec()
    }

    #[getter]
    fn decoder(&self) -> String {
        self.inner.decoder().to_string()
    }

    #[getter]
    fn variant(&self) -> String {
        self.inner.variant().to_string()
    }

    fn __repr__(&self) -> String {
        format!(
            "ModeConfig(qmf_set={:?}, theta={:?}, decoder='{}', variant='{}')",
            self.qmf_set(),
            self.theta(),
            self.decoder(),
            self.variant()
        )
    }
}

/// The evaluated rate point of one configuration on one instance.
#[pyclass(name = "RateBreakdown", frozen)]
struct PyRateBreakdown {
    inner: vfdrelay::RateBreakdown,
}

#[pymethods]
impl PyRateBreakdown {
    /// End-to-end symmetric rate in bits per channel use.
    #[getter]
    fn symmetric_rate(&self) -> f64 {
        self.inner.symmetric_rate.bits()
    }

    /// Long-run per-path throughput, half the symmetric rate.
    #[getter]
    fn per_path_throughput(&self) -> f64 {
        self.inner.per_path_throughput.bits()
    }

    /// Rate of each segment keyed by its leader stage (source segment at 0).
    #[getter]
    fn segment_rates(&self) -> BTreeMap<usize, f64> {
        self.inner.segment_rates.clone()
    }

    /// Quantization noise variance at each quantizing leader.
    #[getter]
    fn quant_noise(&self) -> BTreeMap<usize, f64> {
        self.inner.quant_noise.clone()
    }

    /// Minimizing constraint per segment leader, as `(stage, kind)` with
    /// kind "direct" or "cross".
    #[getter]
    fn binding(&self) -> BTreeMap<usize, (usize, String)> {
        self.inner
            .binding
            .iter()
            .map(|(&leader, b)| {
                let kind = match b.kind {
                    vfdrelay::engine::BindingKind::Direct => "direct",
                    vfdrelay::engine::BindingKind::Cross => "cross",
                };
                (leader, (b.k, kind.to_string()))
            })
            .collect()
    }

    /// True when a quantizing segment's rate hit zero.
    #[getter]
    fn infeasible_quantization(&self) -> bool {
        self.inner.infeasible_quantization
    }

    /// The full report as a JSON document.
    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner)
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!(
            "RateBreakdown(symmetric_rate={}, infeasible_quantization={})",
            self.symmetric_rate(),
            self.inner.infeasible_quantization
        )
    }
}

/// The result of a configuration search.
#[pyclass(name = "Optimum", frozen)]
struct PyOptimum {
    inner: vfdrelay::optimizer::Optimum,
}

#[pymethods]
impl PyOptimum {
    #[getter]
    fn best_config(&self) -> PyModeConfig {
        PyModeConfig { inner: self.inner.best_config.clone() }
    }

    #[getter]
    fn best_breakdown(&self) -> PyRateBreakdown {
        PyRateBreakdown { inner: self.inner.best_breakdown.clone() }
    }

    #[getter]
    fn configs_evaluated(&self) -> u64 {
        self.inner.configs_evaluated
    }

    /// Best rate found for every candidate quantizer set, as
    /// `(sorted stages, rate)` pairs.
    #[getter]
    fn per_subset_rates(&self) -> Vec<(Vec<usize>, f64)> {
        self.inner
            .per_subset_rates
            .iter()
            .map(|(set, rate)| (set.iter().copied().collect(), *rate))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Optimum(rate={}, qmf_set={:?}, configs_evaluated={})",
            self.inner.best_breakdown.symmetric_rate.bits(),
            self.best_config().qmf_set(),
            self.inner.configs_evaluated
        )
    }
}

/// A random ensemble: common per-hop SNR in dB and uniform cross-exponent
/// range, with counter-based deterministic draws.
#[pyclass(name = "EnsembleSpec", frozen)]
struct PyEnsembleSpec {
    inner: vfdrelay::EnsembleSpec,
}

#[pymethods]
impl PyEnsembleSpec {
    #[new]
    #[pyo3(signature = (snr_db = 20.0, alpha_lo = 1.0, alpha_hi = 2.0, trials = 200, seed = 7))]
    fn new(snr_db: f64, alpha_lo: f64, alpha_hi: f64, trials: u64, seed: u64) -> PyResult<Self> {
        let spec = vfdrelay::EnsembleSpec { snr_db, alpha_lo, alpha_hi, trials, seed };
        spec.validate().map_err(value_error)?;
        Ok(Self { inner: spec })
    }

    #[getter]
    fn snr_db(&self) -> f64 {
        self.inner.snr_db
    }

    #[getter]
    fn alpha_lo(&self) -> f64 {
        self.inner.alpha_lo
    }

    #[getter]
    fn alpha_hi(&self) -> f64 {
        self.inner.alpha_hi
    }

    #[getter]
    fn trials(&self) -> u64 {
        self.inner.trials
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    fn __repr__(&self) -> String {
        format!(
            "EnsembleSpec(snr_db={}, alpha_lo={}, alpha_hi={}, trials={}, seed={})",
            self.inner.snr_db,
            self.inner.alpha_lo,
            self.inner.alpha_hi,
            self.inner.trials,
            self.inner.seed
        )
    }
}

/// Evaluates the symmetric rate of one configuration on one instance.
#[pyfunction]
fn evaluate(inst: &PyChannelInstance, config: &PyModeConfig) -> PyResult<PyRateBreakdown> {
    let breakdown =
        vfdrelay::engine::evaluate(&inst.inner, &config.inner).map_err(value_error)?;
    Ok(PyRateBreakdown { inner: breakdown })
}

/// Searches quantizer sets and power splits for the best symmetric rate.
///
/// `qmf` restricts the search to one stage set; otherwise all subsets are
/// tried. `theta_search` is "coordinate" or "grid".
#[pyfunction]
#[pyo3(signature = (
    inst,
    decoder = "sd",
    variant = "printed",
    theta_search = "coordinate",
    grid_points = 101,
    qmf = None
))]
fn optimize(
    inst: &PyChannelInstance,
    decoder: &str,
    variant: &str,
    theta_search: &str,
    grid_points: usize,
    qmf: Option<Vec<usize>>,
) -> PyResult<PyOptimum> {
    use vfdrelay::optimizer::{ModeSearch, SearchSpec, ThetaSearch};
    let theta_search = match theta_search {
        "coordinate" => ThetaSearch::default_coordinate(),
        "grid" => ThetaSearch::Grid { points_per_dim: grid_points },
        other => {
            return Err(PyValueError::new_err(format!(
                "theta_search must be coordinate or grid, got {other:?}"
            )))
        }
    };
    let mode_search = match qmf {
        Some(stages) => ModeSearch::Given(stages.into_iter().collect()),
        None => ModeSearch::Exhaustive,
    };
    let spec = SearchSpec {
        mode_search,
        theta_search,
        decoder: parse_decoder(decoder)?,
        variant: parse_variant(variant)?,
    };
    let optimum = vfdrelay::optimizer::optimize(&inst.inner, &spec).map_err(value_error)?;
    Ok(PyOptimum { inner: optimum })
}

/// Evaluates one reference scheme: "optimized_qmf", "noise_level_qmf",
/// "stage_depth_qmf", "pure_df", or "hop_bound".
#[pyfunction]
#[pyo3(signature = (inst, kind, decoder = "sd", variant = "printed"))]
fn baseline_rate(
    inst: &PyChannelInstance,
    kind: &str,
    decoder: &str,
    variant: &str,
) -> PyResult<PyRateBreakdown> {
    use vfdrelay::baselines::BaselineKind;
    let kind = match kind {
        "optimized_qmf" => BaselineKind::OptimizedQmf,
        "noise_level_qmf" => BaselineKind::NoiseLevelQmf,
        "stage_depth_qmf" => BaselineKind::StageDepthQmf,
        "pure_df" => BaselineKind::PureDf,
        "hop_bound" => BaselineKind::HopCapacityBound,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown baseline {other:?}; expected optimized_qmf, noise_level_qmf, \
                 stage_depth_qmf, pure_df, or hop_bound"
            )))
        }
    };
    let breakdown = vfdrelay::baselines::baseline_rate(
        &inst.inner,
        kind,
        parse_decoder(decoder)?,
        parse_variant(variant)?,
    )
    .map_err(value_error)?;
    Ok(PyRateBreakdown { inner: breakdown })
}

/// Draws the deterministic instance of one ensemble trial.
#[pyfunction]
fn draw_instance(
    spec: &PyEnsembleSpec,
    num_relays: usize,
    trial: u64,
) -> PyResult<PyChannelInstance> {
    let inst = vfdrelay::channel::draw_instance(&spec.inner, num_relays, trial)
        .map_err(value_error)?;
    Ok(PyChannelInstance { inner: inst })
}

/// `log2(1 + effective_snr)` in bits.
#[pyfunction]
fn gaussian_rate(effective_snr: f64) -> PyResult<f64> {
    Ok(vfdrelay::info::gaussian_rate(effective_snr).map_err(value_error)?.bits())
}

/// Quantization noise variance that makes the index rate equal `index_rate`.
#[pyfunction]
fn wyner_ziv_noise(snr_in: f64, index_rate: f64) -> PyResult<f64> {
    vfdrelay::info::wyner_ziv_noise(snr_in, index_rate).map_err(value_error)
}

/// Index rate produced by quantizing at noise variance `noise`.
#[pyfunction]
fn wyner_ziv_rate(snr_in: f64, noise: f64) -> PyResult<f64> {
    Ok(vfdrelay::info::wyner_ziv_rate(snr_in, noise).map_err(value_error)?.bits())
}

/// Long-run throughput of a schedule with `blocks` message blocks:
/// `rate_bits * blocks / (2 (blocks + num_relays))`.
#[pyfunction]
fn schedule_throughput(rate_bits: f64, num_relays: usize, blocks: usize) -> PyResult<f64> {
    let rate = vfdrelay::info::RateValue::new(rate_bits).map_err(value_error)?;
    Ok(vfdrelay::engine::schedule_throughput(rate, num_relays, blocks)
        .map_err(value_error)?
        .bits())
}

/// Runs a deterministic Monte Carlo sweep and returns the per-trial and
/// summary CSV documents as strings.
#[pyfunction]
#[pyo3(signature = (
    k_list,
    snr_db = 20.0,
    alpha_lo = 1.0,
    alpha_hi = 2.0,
    trials = 200,
    seed = 7,
    schemes = None,
    decoder = "sd",
    variant = "printed"
))]
#[allow(clippy::too_many_arguments)]
fn sweep(
    k_list: Vec<usize>,
    snr_db: f64,
    alpha_lo: f64,
    alpha_hi: f64,
    trials: u64,
    seed: u64,
    schemes: Option<Vec<String>>,
    decoder: &str,
    variant: &str,
) -> PyResult<(String, String)> {
    use vfdrelay::sweep::{rows_csv, run_sweep, summary_csv, Scheme, SweepRequest, ALL_SCHEMES};
    let schemes = match schemes {
        Some(names) => names
            .iter()
            .map(|n| Scheme::from_str(n).map_err(value_error))
            .collect::<PyResult<Vec<_>>>()?,
        None => ALL_SCHEMES.to_vec(),
    };
    let request = SweepRequest {
        ensemble: vfdrelay::EnsembleSpec { snr_db, alpha_lo, alpha_hi, trials, seed },
        k_list,
        schemes,
        decoder: parse_decoder(decoder)?,
        variant: parse_variant(variant)?,
    };
    let result = run_sweep(&request).map_err(value_error)?;
    Ok((rows_csv(&result), summary_csv(&result)))
}

/// Solves a finite-alphabet two-path network and returns the full JSON
/// report: symmetric rate, per-path rates, solved quantizers, and every
/// mutual-information term.
#[pyfunction]
#[pyo3(signature = (spec_json, qmf_1, qmf_2, decoder = "sd"))]
fn solve_dm_network(
    spec_json: &str,
    qmf_1: Vec<usize>,
    qmf_2: Vec<usize>,
    decoder: &str,
) -> PyResult<String> {
    let spec = vfdrelay::DmNetworkSpec::from_json(spec_json).map_err(value_error)?;
    let modes =
        vfdrelay::DmModes::new(qmf_1.into_iter().collect(), qmf_2.into_iter().collect());
    let result = vfdrelay::dm::solve_symmetric(&spec, &modes, parse_decoder(decoder)?)
        .map_err(value_error)?;
    serde_json::to_string_pretty(&result).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn vfdrelay_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyChannelInstance>()?;
    m.add_class::<PyModeConfig>()?;
    m.add_class::<PyRateBreakdown>()?;
    m.add_class::<PyOptimum>()?;
    m.add_class::<PyEnsembleSpec>()?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(baseline_rate, m)?)?;
    m.add_function(wrap_pyfunction!(draw_instance, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_rate, m)?)?;
    m.add_function(wrap_pyfunction!(wyner_ziv_noise, m)?)?;
    m.add_function(wrap_pyfunction!(wyner_ziv_rate, m)?)?;
    m.add_function(wrap_pyfunction!(schedule_throughput, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(solve_dm_network, m)?)?;
    m.add("__version__", vfdrelay::VERSION)?;
    Ok(())
}
