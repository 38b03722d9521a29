//! Python bindings for the `ambsc` simulator.

use ambsc::analysis::{ber_approx_for, ber_exact};
use ambsc::detector::{threshold_paper, DetectorParams};
use ambsc::harness::{self, config, BerResult, ExperimentSpec};
use ambsc::numerics::{self, RngStream};
use ambsc::phy::{build_frame, draw_channels, generate_source_symbol, FrameHistory};
use ambsc::receiver::Receiver;
use ambsc::{DofConvention, SystemConfig, ThresholdMode};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList, PyTuple};

fn py_err(e: ambsc::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Config-file text of one keyword value; sequences become comma lists.
fn value_text(v: &Bound<'_, PyAny>) -> PyResult<String> {
    if v.is_instance_of::<PyList>() || v.is_instance_of::<PyTuple>() {
        let parts = v
            .try_iter()?
            .map(|item| Ok(item?.str()?.to_string()))
            .collect::<PyResult<Vec<_>>>()?;
        Ok(parts.join(","))
    } else {
        Ok(v.str()?.to_string())
    }
}

fn apply_kwargs(spec: &mut ExperimentSpec, kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<()> {
    if let Some(kwargs) = kwargs {
        for (k, v) in kwargs.iter() {
            let key: String = k.extract()?;
            config::apply(spec, "kwargs", &key, &value_text(&v)?).map_err(py_err)?;
        }
    }
    Ok(())
}

/// Sweep specification. Keyword names match the config-file keys.
#[pyclass(name = "Experiment", module = "ambsc_py")]
struct PyExperiment {
    spec: ExperimentSpec,
}

#[pymethods]
impl PyExperiment {
    #[new]
    #[pyo3(signature = (**kwargs))]
    fn new(kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut spec = ExperimentSpec::default();
        apply_kwargs(&mut spec, kwargs)?;
        Ok(PyExperiment { spec })
    }

    #[staticmethod]
    fn from_config(text: &str) -> PyResult<Self> {
        Ok(PyExperiment {
            spec: harness::parse_config(text).map_err(py_err)?,
        })
    }

    #[pyo3(signature = (**kwargs))]
    fn set(&mut self, kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<()> {
        apply_kwargs(&mut self.spec, kwargs)
    }

    fn print_config(&self) -> String {
        harness::print_config(&self.spec)
    }

    fn validate(&self) -> PyResult<()> {
        self.spec.validate().map_err(py_err)
    }

    /// Runs the sweep without touching the filesystem.
    fn run(&self, py: Python<'_>) -> PyResult<Vec<PyBerResult>> {
        let spec = self.spec.clone();
        let results = py
            .detach(move || harness::run_experiment(&spec))
            .map_err(py_err)?;
        Ok(results.into_iter().map(|inner| PyBerResult { inner }).collect())
    }

    /// Runs the sweep and writes the table and its `.meta` sidecar.
    fn write(&self, py: Python<'_>) -> PyResult<String> {
        let spec = self.spec.clone();
        py.detach(move || harness::write_outputs(&spec)).map_err(py_err)?;
        Ok(self.spec.output_path.clone())
    }

    fn __repr__(&self) -> String {
        format!(
            "Experiment(snr_db_list={:?}, w_list={:?}, trials_per_point={})",
            self.spec.snr_db_list, self.spec.w_list, self.spec.trials_per_point
        )
    }
}

#[pyclass(name = "BerResult", module = "ambsc_py", frozen)]
struct PyBerResult {
    inner: BerResult,
}

#[pymethods]
impl PyBerResult {
    #[getter]
    fn snr_db(&self) -> f64 {
        self.inner.snr_db
    }
    #[getter]
    fn w(&self) -> usize {
        self.inner.w
    }
    #[getter]
    fn trials(&self) -> u64 {
        self.inner.trials
    }
    #[getter]
    fn bit_errors(&self) -> u64 {
        self.inner.bit_errors
    }
    #[getter]
    fn ber_sim(&self) -> f64 {
        self.inner.ber_sim
    }
    #[getter]
    fn ci95_halfwidth(&self) -> f64 {
        self.inner.ci95_halfwidth
    }
    #[getter]
    fn ber_theory_approx(&self) -> f64 {
        self.inner.ber_theory_approx
    }
    #[getter]
    fn ber_theory_exact(&self) -> f64 {
        self.inner.ber_theory_exact
    }
    #[getter]
    fn threshold(&self) -> f64 {
        self.inner.threshold_used
    }
    #[getter]
    fn wall_ms(&self) -> u64 {
        self.inner.wall_ms
    }

    fn __repr__(&self) -> String {
        let r = &self.inner;
        format!(
            "BerResult(snr_db={}, w={}, ber_sim={}, ber_theory_exact={})",
            r.snr_db, r.w, r.ber_sim, r.ber_theory_exact
        )
    }
}

/// Detector for one `(W, γ)` pair; `gamma` is linear.
#[pyclass(name = "Detector", module = "ambsc_py", frozen)]
struct PyDetector {
    params: DetectorParams,
}

#[pymethods]
impl PyDetector {
    #[new]
    #[pyo3(signature = (w, gamma, dof = "paper", threshold = "closed-form"))]
    fn new(w: usize, gamma: f64, dof: &str, threshold: &str) -> PyResult<Self> {
        let dof: DofConvention = dof.parse().map_err(py_err)?;
        let mode: ThresholdMode = threshold.parse().map_err(py_err)?;
        Ok(PyDetector {
            params: DetectorParams::new(w, gamma, dof, mode).map_err(py_err)?,
        })
    }

    #[getter]
    fn threshold(&self) -> f64 {
        self.params.threshold
    }
    #[getter]
    fn noncentrality(&self) -> f64 {
        self.params.noncentrality()
    }
    #[getter]
    fn dof(&self) -> usize {
        self.params.dof()
    }

    fn pdf_h0(&self, x: f64) -> f64 {
        self.params.pdf_h0(x)
    }

    fn pdf_h1(&self, x: f64) -> f64 {
        self.params.pdf_h1(x)
    }

    fn decide(&self, gamma_t: f64) -> u8 {
        ambsc::detector::decide_value(gamma_t, self.params.threshold)
    }

    /// `(p0, p1, pe)` at `threshold`, defaulting to the detector's own.
    #[pyo3(signature = (threshold = None))]
    fn ber_exact(&self, threshold: Option<f64>) -> PyResult<(f64, f64, f64)> {
        let e = ber_exact(&self.params, threshold.unwrap_or(self.params.threshold)).map_err(py_err)?;
        Ok((e.p0, e.p1, e.pe))
    }

    #[pyo3(signature = (threshold = None))]
    fn ber_approx(&self, threshold: Option<f64>) -> f64 {
        ber_approx_for(&self.params, threshold.unwrap_or(self.params.threshold))
    }
}

/// Test statistics `Γ_t` of `count` frames carrying `bit`, one stream per frame.
#[pyfunction]
#[pyo3(signature = (experiment, bit, count, seed = 1))]
fn sample_statistics(experiment: &PyExperiment, bit: u8, count: u64, seed: u64) -> PyResult<Vec<f64>> {
    let mut cfg: SystemConfig = experiment.spec.base.clone();
    cfg.w = experiment.spec.w_list.first().copied().unwrap_or(cfg.w);
    let history = FrameHistory::zeros(&cfg);
    let mut rx = Receiver::new(&cfg).map_err(py_err)?;
    (0..count)
        .map(|i| {
            let mut rng = RngStream::new(seed, i);
            let ch = draw_channels(&cfg, &mut rng)?;
            let s = generate_source_symbol(&cfg, &mut rng);
            let frame = build_frame(&cfg, &ch, s, bit, &mut rng, &history)?;
            let block = rx.process(&frame.y)?;
            Ok(rx.statistic(&block)?.gamma_t)
        })
        .collect::<ambsc::Result<Vec<_>>>()
        .map_err(py_err)
}

/// One end-to-end trial: `(sent_bit, decided_bit)`.
#[pyfunction]
#[pyo3(signature = (experiment, seed, stream = 0))]
fn run_trial(experiment: &PyExperiment, seed: u64, stream: u64) -> PyResult<(u8, u8)> {
    let mut rng = RngStream::new(seed, stream);
    harness::run_trial(&experiment.spec.base, &mut rng).map_err(py_err)
}

#[pyfunction]
fn gamma_fn(x: f64) -> PyResult<f64> {
    numerics::gamma_fn(x).map_err(py_err)
}

#[pyfunction]
fn bessel_i(order: f64, x: f64) -> PyResult<f64> {
    numerics::bessel_i(order, x).map_err(py_err)
}

#[pyfunction]
fn gaussian_q(x: f64) -> f64 {
    numerics::gaussian_q(x)
}

#[pyfunction]
fn sin_power_integral(w: usize) -> PyResult<f64> {
    numerics::sin_power_integral(w).map_err(py_err)
}

#[pyfunction]
fn noncentral_chi2_pdf(x: f64, dof: usize, lambda: f64) -> PyResult<f64> {
    numerics::noncentral_chi2_pdf(x, dof, lambda).map_err(py_err)
}

/// Closed-form threshold of the `χ²_W` model.
#[pyfunction]
fn closed_form_threshold(w: usize, gamma: f64) -> PyResult<f64> {
    threshold_paper(w, gamma).map_err(py_err)
}

#[pymodule]
fn ambsc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyExperiment>()?;
    m.add_class::<PyBerResult>()?;
    m.add_class::<PyDetector>()?;
    m.add_function(wrap_pyfunction!(run_trial, m)?)?;
    m.add_function(wrap_pyfunction!(sample_statistics, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_fn, m)?)?;
    m.add_function(wrap_pyfunction!(bessel_i, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_q, m)?)?;
    m.add_function(wrap_pyfunction!(sin_power_integral, m)?)?;
    m.add_function(wrap_pyfunction!(noncentral_chi2_pdf, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form_threshold, m)?)?;
    m.add("CSV_HEADER", harness::BER_HEADER)?;
    Ok(())
}
