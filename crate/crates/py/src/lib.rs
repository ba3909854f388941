use std::collections::BTreeMap;

use num_bigint::BigInt;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use hgsim::analysis::{self, Bootstrap};
use hgsim::lightmodel::{self, LightKind};
use hgsim::scenario::{self, ScenarioConfig, SummaryRow};
use hgsim::{nonlinear, rng, EstimateWithError};

fn to_py(e: hgsim::Error) -> PyErr {
    match e {
        hgsim::Error::Domain(_) | hgsim::Error::UnknownPreset(_) => PyValueError::new_err(e.to_string()),
        e if e.is_config() => PyValueError::new_err(e.to_string()),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

fn bootstrap(resamples: usize, seed: u64) -> Bootstrap {
    Bootstrap { resamples, ..Bootstrap::default() }.with_seed(seed, rng::bootstrap_stream(0))
}

/// A statistic with its bootstrap standard error and 95 % percentile interval.
#[pyclass(name = "Estimate", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyEstimate {
    estimator_id: String,
    value: f64,
    std_error: f64,
    ci_low: f64,
    ci_high: f64,
    samples: u64,
}

impl From<EstimateWithError> for PyEstimate {
    fn from(e: EstimateWithError) -> Self {
        PyEstimate {
            estimator_id: e.estimator_id,
            value: e.value,
            std_error: e.std_error,
            ci_low: e.ci_low,
            ci_high: e.ci_high,
            samples: e.samples,
        }
    }
}

#[pymethods]
impl PyEstimate {
    fn __repr__(&self) -> String {
        format!(
            "Estimate({}={} ± {}, ci=[{}, {}], samples={})",
            self.estimator_id, self.value, self.std_error, self.ci_low, self.ci_high, self.samples
        )
    }
}

#[pyclass(name = "LightModel", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyLightModel {
    inner: hgsim::LightModel,
}

#[pymethods]
impl PyLightModel {
    /// `kind` is "coherent" or "gaussian"; `quad_ratio` 0 is BSV, 1 thermal.
    #[new]
    #[pyo3(signature = (kind, mean_photons, quad_ratio=0.0, temporal_modes=1))]
    fn new(kind: &str, mean_photons: f64, quad_ratio: f64, temporal_modes: u32) -> PyResult<Self> {
        let kind = match kind {
            "coherent" => LightKind::Coherent,
            "gaussian" => LightKind::GaussianQuadrature,
            other => return Err(PyValueError::new_err(format!("unknown light kind `{other}`"))),
        };
        let inner = hgsim::LightModel::new(kind, mean_photons, quad_ratio, temporal_modes).map_err(to_py)?;
        Ok(PyLightModel { inner })
    }

    #[staticmethod]
    fn coherent(mean_photons: f64) -> PyResult<Self> {
        Ok(PyLightModel { inner: hgsim::LightModel::coherent(mean_photons).map_err(to_py)? })
    }

    #[staticmethod]
    #[pyo3(signature = (mean_photons, temporal_modes=1))]
    fn thermal(mean_photons: f64, temporal_modes: u32) -> PyResult<Self> {
        let inner = hgsim::LightModel::thermal(mean_photons)
            .and_then(|m| m.with_temporal_modes(temporal_modes))
            .map_err(to_py)?;
        Ok(PyLightModel { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (mean_photons, temporal_modes=1))]
    fn bsv(mean_photons: f64, temporal_modes: u32) -> PyResult<Self> {
        let inner = hgsim::LightModel::bsv(mean_photons)
            .and_then(|m| m.with_temporal_modes(temporal_modes))
            .map_err(to_py)?;
        Ok(PyLightModel { inner })
    }

    #[getter]
    fn mean_photons(&self) -> f64 {
        self.inner.mean_photons()
    }

    #[getter]
    fn quad_ratio(&self) -> f64 {
        self.inner.quad_ratio()
    }

    #[getter]
    fn temporal_modes(&self) -> u32 {
        self.inner.temporal_modes()
    }

    fn analytic_gn(&self, n: u32) -> PyResult<f64> {
        self.inner.analytic_gn_f64(n).map_err(to_py)
    }

    /// Exact g(n) as a `(numerator, denominator)` pair.
    fn analytic_gn_exact(&self, n: u32) -> PyResult<(BigInt, BigInt)> {
        let q = self.inner.analytic_gn(n).map_err(to_py)?;
        Ok((q.numer().clone(), q.denom().clone()))
    }

    /// Predicted g(2) of the n-th harmonic, exact.
    fn predict_harmonic_g2(&self, n: u32) -> PyResult<(BigInt, BigInt)> {
        let q = analysis::predict_harmonic_g2_exact(&self.inner, n).map_err(to_py)?;
        Ok((q.numer().clone(), q.denom().clone()))
    }

    /// Total photon number of `pulses` pulses.
    #[pyo3(signature = (pulses, seed, stream=rng::SOURCE_STREAM))]
    fn sample(&self, pulses: usize, seed: u64, stream: u64) -> PyResult<Vec<f64>> {
        Ok(lightmodel::sample_ensemble(&self.inner, pulses, seed, stream).map_err(to_py)?.totals())
    }

    /// Per-mode intensities, one list per pulse.
    #[pyo3(signature = (pulses, seed, stream=rng::SOURCE_STREAM))]
    fn sample_modes(&self, pulses: usize, seed: u64, stream: u64) -> PyResult<Vec<Vec<f64>>> {
        let e = lightmodel::sample_ensemble(&self.inner, pulses, seed, stream).map_err(to_py)?;
        Ok(e.records().map(|r| r.mode_intensities.to_vec()).collect())
    }

    fn __repr__(&self) -> String {
        format!("LightModel({})", self.inner)
    }
}

#[pyfunction]
#[pyo3(signature = (areas, n, resamples=200, seed=0))]
fn estimate_gn(areas: Vec<f64>, n: u32, resamples: usize, seed: u64) -> PyResult<PyEstimate> {
    Ok(analysis::estimate_gn(&areas, n, &bootstrap(resamples, seed)).map_err(to_py)?.into())
}

#[pyfunction]
#[pyo3(signature = (counts, n, resamples=200, seed=0))]
fn estimate_factorial_gn(counts: Vec<u64>, n: u32, resamples: usize, seed: u64) -> PyResult<PyEstimate> {
    Ok(analysis::estimate_factorial_gn(&counts, n, &bootstrap(resamples, seed)).map_err(to_py)?.into())
}

#[pyfunction]
#[pyo3(signature = (arm1, arm2, coincidences, resamples=200, seed=0))]
fn hbt_g2(arm1: Vec<u8>, arm2: Vec<u8>, coincidences: Vec<u8>, resamples: usize, seed: u64) -> PyResult<PyEstimate> {
    Ok(analysis::hbt_g2(&arm1, &arm2, &coincidences, &bootstrap(resamples, seed)).map_err(to_py)?.into())
}

#[pyfunction]
#[pyo3(signature = (harmonic, pump, n, resamples=200, seed=0))]
fn statistical_efficiency(harmonic: Vec<f64>, pump: Vec<f64>, n: u32, resamples: usize, seed: u64) -> PyResult<PyEstimate> {
    Ok(analysis::statistical_efficiency(&harmonic, &pump, n, &bootstrap(resamples, seed)).map_err(to_py)?.into())
}

/// Fits `R = A·Fⁿ`; returns a dict with the coefficient, the optional free
/// exponent and the dropped-point count.
#[pyfunction]
#[pyo3(signature = (points, n, fix_exponent=true))]
fn fit_power_law<'py>(py: Python<'py>, points: Vec<(f64, f64)>, n: u32, fix_exponent: bool) -> PyResult<Bound<'py, PyDict>> {
    let fit = analysis::fit_power_law(&points, n, fix_exponent).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("order", fit.order)?;
    d.set_item("coefficient", PyEstimate::from(fit.coefficient))?;
    d.set_item("exponent", fit.exponent.map(PyEstimate::from))?;
    d.set_item("residual_norm", fit.residual_norm)?;
    d.set_item("used_points", fit.used_points)?;
    d.set_item("dropped_points", fit.dropped_points)?;
    Ok(d)
}

#[pyfunction]
fn predict_harmonic_g2(pump_gs: BTreeMap<u32, f64>, n: u32) -> PyResult<f64> {
    analysis::predict_harmonic_g2(&pump_gs, n).map_err(to_py)
}

#[pyfunction]
fn absorb(w: f64, kappa: f64) -> f64 {
    nonlinear::absorb(w, kappa)
}

#[pyfunction]
fn harmonic_yield(mode_intensities: Vec<f64>, order: u32, eta: f64) -> PyResult<f64> {
    nonlinear::harmonic_yield(&mode_intensities, order, eta).map_err(to_py)
}

#[pyfunction]
fn presets() -> Vec<&'static str> {
    scenario::PRESETS.to_vec()
}

/// Scenario file of a preset, as TOML text.
#[pyfunction]
fn preset_config(name: &str) -> PyResult<String> {
    scenario::preset(name).and_then(|c| c.to_toml()).map_err(to_py)
}

fn rows_to_py<'py>(py: Python<'py>, rows: &[SummaryRow]) -> PyResult<Vec<Bound<'py, PyDict>>> {
    rows.iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("scenario_id", &r.scenario_id)?;
            d.set_item("grid_index", r.grid_index)?;
            d.set_item("grid_parameter", &r.grid_parameter)?;
            d.set_item("grid_value", r.grid_value)?;
            d.set_item("seed", r.seed)?;
            d.set_item("estimator_id", &r.estimator_id)?;
            d.set_item("target", &r.target)?;
            d.set_item("subset", &r.subset)?;
            d.set_item("order", r.order)?;
            d.set_item("value", r.value)?;
            d.set_item("std_error", r.std_error)?;
            d.set_item("ci_low", r.ci_low)?;
            d.set_item("ci_high", r.ci_high)?;
            d.set_item("samples", r.samples)?;
            Ok(d)
        })
        .collect()
}

/// Runs a scenario given as TOML text; returns the summary rows.
#[pyfunction]
#[pyo3(signature = (config, pulses=None, seed=None))]
fn run_config<'py>(py: Python<'py>, config: &str, pulses: Option<u64>, seed: Option<u64>) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let mut cfg = ScenarioConfig::from_toml(config).map_err(to_py)?;
    if let Some(p) = pulses {
        cfg.pulses = p;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let outcome = scenario::run(&cfg).map_err(to_py)?;
    rows_to_py(py, &outcome.rows)
}

#[pyfunction]
#[pyo3(signature = (name, pulses=None, seed=None))]
fn run_preset<'py>(py: Python<'py>, name: &str, pulses: Option<u64>, seed: Option<u64>) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let text = preset_config(name)?;
    run_config(py, &text, pulses, seed)
}

#[pymodule]
fn pyhgsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLightModel>()?;
    m.add_class::<PyEstimate>()?;
    m.add_function(wrap_pyfunction!(estimate_gn, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_factorial_gn, m)?)?;
    m.add_function(wrap_pyfunction!(hbt_g2, m)?)?;
    m.add_function(wrap_pyfunction!(statistical_efficiency, m)?)?;
    m.add_function(wrap_pyfunction!(fit_power_law, m)?)?;
    m.add_function(wrap_pyfunction!(predict_harmonic_g2, m)?)?;
    m.add_function(wrap_pyfunction!(absorb, m)?)?;
    m.add_function(wrap_pyfunction!(harmonic_yield, m)?)?;
    m.add_function(wrap_pyfunction!(presets, m)?)?;
    m.add_function(wrap_pyfunction!(preset_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_preset, m)?)?;
    Ok(())
}
