//! Python bindings, importable as `dctif`.

use std::sync::Arc;

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

use dctif::analysis;
use dctif::coeffgen;
use dctif::datasets;
use dctif::fixedpoint::{quantize, QFormat};
use dctif::hwmodel::{build_engine, ApproxEngine};
use dctif::nn;
use dctif::presets::{Preset, ERROR_BUDGETS};
use dctif::regions;

fn py_err(e: dctif::Error) -> PyErr {
    match e {
        dctif::Error::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Filter configuration: tab count, `alpha = 1/2^j`, scale `2^s`, window size.
#[pyclass(frozen, skip_from_py_object, name = "DctifParams")]
#[derive(Clone)]
struct PyParams {
    inner: coeffgen::DctifParams,
}

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (tabs, j, s, window = coeffgen::DEFAULT_WINDOW))]
    fn new(tabs: u32, j: u32, s: u32, window: u32) -> PyResult<Self> {
        Ok(PyParams { inner: coeffgen::DctifParams::with_window(tabs, j, s, window).map_err(py_err)? })
    }

    #[getter]
    fn tabs(&self) -> u32 {
        self.inner.tab_count()
    }

    #[getter]
    fn j(&self) -> u32 {
        self.inner.j()
    }

    #[getter]
    fn s(&self) -> u32 {
        self.inner.s()
    }

    #[getter]
    fn window(&self) -> u32 {
        self.inner.window_size()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    /// Integer coefficients for every position `r = 1 .. 2^j - 1`.
    fn coefficients(&self) -> PyResult<Vec<Vec<i32>>> {
        let table = coeffgen::coefficient_table(&self.inner).map_err(py_err)?;
        Ok(table.iter().map(|c| c.values().to_vec()).collect())
    }

    /// Windowed real-valued coefficients at position `r`, before scaling.
    fn raw_coefficients(&self, r: u32) -> PyResult<Vec<f64>> {
        let pos = coeffgen::FractionalPosition::new(r, self.inner.j()).map_err(py_err)?;
        Ok(coeffgen::generate_raw_coefficients(&self.inner, &pos).map_err(py_err)?.values().to_vec())
    }

    fn __repr__(&self) -> String {
        format!("DctifParams({})", self.inner)
    }
}

#[pyclass(frozen, get_all)]
struct ErrorReport {
    max_err: f64,
    mean_abs_err: f64,
    argmax_x: f64,
    samples: usize,
    memory_bits: u64,
    codes_evaluated: u64,
}

/// Bit-accurate fixed-point tanh engine.
#[pyclass(frozen, name = "Engine")]
struct PyEngine {
    inner: Arc<ApproxEngine>,
}

#[pymethods]
impl PyEngine {
    #[new]
    #[pyo3(signature = (params, eps_max, in_int = 3, in_frac = 6, out_frac = 15))]
    fn new(params: &PyParams, eps_max: f64, in_int: u32, in_frac: u32, out_frac: u32) -> PyResult<Self> {
        let in_fmt = QFormat::new(in_int, in_frac).map_err(py_err)?;
        let out_fmt = QFormat::new(0, out_frac).map_err(py_err)?;
        let e = build_engine(params.inner, eps_max, in_fmt, out_fmt).map_err(py_err)?;
        Ok(PyEngine { inner: Arc::new(e) })
    }

    /// Named configuration: `paper-loacc`, `paper-hiacc` or `budget-<eps>`.
    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        let p: Preset = name.parse().map_err(py_err)?;
        Ok(PyEngine { inner: Arc::new(p.build().map_err(py_err)?) })
    }

    fn evaluate(&self, x: f64) -> f64 {
        self.inner.evaluate_real(x)
    }

    fn evaluate_many(&self, xs: Vec<f64>) -> Vec<f64> {
        xs.into_iter().map(|x| self.inner.evaluate_real(x)).collect()
    }

    /// Raw input code to raw output code.
    fn evaluate_code(&self, raw: i64) -> i32 {
        self.inner.evaluate(self.inner.in_fmt().from_raw(raw)).raw()
    }

    /// `(output, route, cycles)` for a real input.
    fn trace(&self, x: f64) -> (f64, String, u32) {
        let t = self.inner.evaluate_traced(quantize(x, self.inner.in_fmt()));
        (t.output.to_real(), format!("{:?}", t.route).to_lowercase(), t.cycles)
    }

    fn max_error(&self) -> ErrorReport {
        let r = analysis::max_error(&self.inner);
        ErrorReport {
            max_err: r.max_err,
            mean_abs_err: r.mean_abs_err,
            argmax_x: r.argmax_x,
            samples: r.samples_count,
            memory_bits: r.memory_bits,
            codes_evaluated: r.codes_evaluated,
        }
    }

    /// Worst error over all real inputs, input rounding included.
    fn real_input_max_error(&self) -> f64 {
        analysis::real_input_max_error(&self.inner)
    }

    #[getter]
    fn memory_bits(&self) -> u64 {
        self.inner.memory_bits()
    }

    #[getter]
    fn pass_end(&self) -> f64 {
        self.inner.boundaries().pass_end
    }

    #[getter]
    fn sat_start(&self) -> f64 {
        self.inner.boundaries().sat_start
    }

    /// Stored samples as `(x, value)` pairs.
    fn samples(&self) -> Vec<(f64, f64)> {
        let t = self.inner.table();
        t.entries().iter().enumerate().map(|(i, v)| (t.x_at(i), v.to_real())).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Engine({}, eps={}, in={}, out={})",
            self.inner.params(),
            self.inner.boundaries().eps_max,
            self.inner.in_fmt(),
            self.inner.out_fmt()
        )
    }
}

/// `(pass_end, sat_start)` for a target maximum error.
#[pyfunction]
fn region_boundaries(eps_max: f64) -> PyResult<(f64, f64)> {
    let b = regions::compute_boundaries(eps_max).map_err(py_err)?;
    Ok((b.pass_end, b.sat_start))
}

/// Raw code of `x` in `Q<int_bits>.<frac_bits>`.
#[pyfunction]
fn quantize_raw(x: f64, int_bits: u32, frac_bits: u32) -> PyResult<i32> {
    Ok(quantize(x, QFormat::new(int_bits, frac_bits).map_err(py_err)?).raw())
}

/// Reference vectors not reproduced at `window`: `(tabs, s, r, expected, got)`.
#[pyfunction]
#[pyo3(signature = (window = coeffgen::DEFAULT_WINDOW))]
fn golden_mismatches(window: u32) -> PyResult<Vec<coeffgen::Mismatch>> {
    coeffgen::reference_mismatches(window).map_err(py_err)
}

#[pyfunction]
fn error_budgets() -> Vec<f64> {
    ERROR_BUDGETS.to_vec()
}

type StudyTuple = (String, f64, Option<f64>, f64, usize);

/// `(eps, mse, correlation, normalized_mse, stop_epoch)` rows of the
/// activation-accuracy study on the Sinc or Sigmoid regression set,
/// coarsest budget first and exact last.
#[pyfunction]
#[pyo3(signature = (dataset = "sinc", arch = "4x5", seed = 0, epochs = 10_000, protocol = "test"))]
fn nn_study(
    py: Python<'_>,
    dataset: &str,
    arch: &str,
    seed: u64,
    epochs: usize,
    protocol: &str,
) -> PyResult<Vec<StudyTuple>> {
    let data = match dataset {
        "sinc" => datasets::make_sinc_dataset(seed),
        "sigmoid" => datasets::make_sigmoid_dataset(seed),
        other => return Err(PyValueError::new_err(format!("dataset {other:?} is not sinc or sigmoid"))),
    };
    let arch = nn::MlpArchitecture::parse(arch, 1, 1).map_err(py_err)?;
    let protocol: nn::Protocol = protocol.parse().map_err(py_err)?;
    let hp = nn::Hyperparams { epochs, seed, ..nn::Hyperparams::default() };
    let rows =
        py.detach(|| nn::run_study(&data, arch, &nn::ActivationSpec::study_levels(), &hp, protocol)).map_err(py_err)?;
    Ok(rows
        .into_iter()
        .map(|r| (r.eps, r.metrics.mse, r.metrics.correlation, r.metrics.normalized_mse, r.stop_epoch))
        .collect())
}

#[pymodule(name = "dctif")]
mod dctif_module {
    #[pymodule_export]
    use super::{
        error_budgets, golden_mismatches, nn_study, quantize_raw, region_boundaries, ErrorReport, PyEngine, PyParams,
    };
}
