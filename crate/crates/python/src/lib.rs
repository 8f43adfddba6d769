//! Python bindings: sampling, correlations, periodograms, oracles and `verify`.

// Triggered by the expansion of `#[pymethods]`.
#![allow(clippy::useless_conversion)]

use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyIndexError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use planar_diffraction::job::{self, verify};
use planar_diffraction::samplers::DEFAULT_GUARD_BITS;
use planar_diffraction::{self as pd, CorrelationQuery, Error, LatticeVector, SamplerSpec, System, WeightLaw};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::OutOfWindow { .. } => PyIndexError::new_err(e.to_string()),
        _ => PyValueError::new_err(format!("{}: {e}", e.kind())),
    }
}

fn make_system(name: &str, law: &str, guard_bits: u32) -> PyResult<System> {
    let law: WeightLaw = law.parse().map_err(to_py)?;
    System::named(name, law, guard_bits).map_err(to_py)
}

fn parse_query(text: &str) -> PyResult<CorrelationQuery> {
    text.parse().map_err(to_py)
}

/// A finite window of unit-modulus weights.
#[pyclass(name = "Window", module = "planar_diffraction")]
#[derive(Clone)]
struct PyWindow {
    inner: pd::WeightWindow,
}

#[pymethods]
impl PyWindow {
    /// Window of signs, row-major with the bottom row first; `True` is +1.
    #[staticmethod]
    #[pyo3(signature = (width, height, signs, origin = (0, 0)))]
    fn from_signs(width: usize, height: usize, signs: Vec<bool>, origin: (i64, i64)) -> PyResult<Self> {
        let inner = pd::WeightWindow::from_signs(origin.into(), width, height, &signs).map_err(to_py)?;
        Ok(PyWindow { inner })
    }

    /// Parses the CSV produced by `to_csv`.
    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        Ok(PyWindow {
            inner: pd::io::parse_window_csv(text).map_err(to_py)?,
        })
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn origin(&self) -> (i64, i64) {
        let o = self.inner.origin();
        (o.a, o.b)
    }

    #[getter]
    fn is_signed(&self) -> bool {
        self.inner.alphabet() == pd::Alphabet::PlusMinusOne
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        let (a, b) = self.origin();
        format!("Window({}x{} at ({a},{b}))", self.width(), self.height())
    }

    /// Weight at the absolute lattice site `(a, b)`.
    fn at(&self, a: i64, b: i64) -> PyResult<Complex64> {
        self.inner
            .lookup(LatticeVector::new(a, b))
            .map(|w| w.value())
            .map_err(to_py)
    }

    /// All weights, row-major with the bottom row first.
    fn values(&self) -> Vec<Complex64> {
        self.inner.data().iter().map(|w| w.value()).collect()
    }

    fn translate(&self, a: i64, b: i64) -> Self {
        PyWindow {
            inner: self.inner.translate(LatticeVector::new(a, b)),
        }
    }

    fn to_csv(&self) -> String {
        pd::io::window_csv(&self.inner)
    }

    fn write_csv(&self, path: std::path::PathBuf) -> PyResult<()> {
        pd::io::write_window_csv(&self.inner, &path).map_err(to_py)
    }

    /// Window average of the generalized correlation, e.g. `"(0,0),(1,0),(0,1)"`.
    fn correlation(&self, query: &str) -> PyResult<Complex64> {
        pd::correlation(&self.inner, &parse_query(query)?).map_err(to_py)
    }

    /// `[(za, zb, eta, pairs), ...]` for every lag with `|z|_inf <= range`.
    #[pyo3(signature = (range, direct = false))]
    fn autocorr(&self, range: usize, direct: bool) -> PyResult<Vec<(i64, i64, Complex64, u64)>> {
        let table = if direct {
            pd::autocorr_table_direct(&self.inner, range)
        } else {
            pd::autocorr_table(&self.inner, range)
        }
        .map_err(to_py)?;
        Ok(table.entries.iter().map(|e| (e.z.a, e.z.b, e.value, e.pairs)).collect())
    }

    /// Periodogram of the window, or of the comb re-weighted by `phi = (plus, minus)`.
    #[pyo3(signature = (phi = None))]
    fn periodogram(&self, phi: Option<(Complex64, Complex64)>) -> PyResult<PyPeriodogram> {
        let grid = match phi {
            Some((p, m)) => pd::periodogram(&self.inner.comb_weights(p, m).map_err(to_py)?),
            None => pd::periodogram(&self.inner),
        };
        Ok(PyPeriodogram { inner: grid })
    }
}

/// `|DFT|² / (width·height)` on the torus frequency grid.
#[pyclass(name = "Periodogram", module = "planar_diffraction")]
struct PyPeriodogram {
    inner: pd::PeriodogramGrid,
}

#[pymethods]
impl PyPeriodogram {
    #[getter]
    fn width(&self) -> usize {
        self.inner.width
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height
    }

    /// Ordinates, row-major: index `k * width + j` holds frequency `(j/width, k/height)`.
    fn values(&self) -> Vec<f64> {
        self.inner.values.clone()
    }

    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    /// Ordinate at the grid frequency nearest to `(qa, qb)`.
    fn ordinate_at(&self, qa: f64, qb: f64) -> f64 {
        self.inner.ordinate_at((qa, qb))
    }

    #[pyo3(signature = (expected_density = 1.0, with_ks = true))]
    fn flatness<'py>(&self, py: Python<'py>, expected_density: f64, with_ks: bool) -> PyResult<Bound<'py, PyDict>> {
        let r = pd::flatness_report(&self.inner, expected_density, with_ks).map_err(to_py)?;
        let d = PyDict::new_bound(py);
        d.set_item("mean", r.mean)?;
        d.set_item("expected_density", r.expected_density)?;
        d.set_item("binned_means", r.binned_means)?;
        d.set_item("max_bin_deviation", r.max_bin_deviation)?;
        d.set_item("ks_statistic", r.ks_statistic)?;
        d.set_item("flat", r.flat)?;
        Ok(d)
    }

    /// Writes a 16-bit PGM plus a `.json` sidecar recording `clip`.
    fn write_pgm(&self, path: std::path::PathBuf, clip: f64) -> PyResult<()> {
        pd::io::write_grid_pgm(&self.inner, &path, clip).map_err(to_py)
    }
}

/// Samples a `width x height` window (default `size x size`) of one system.
#[pyfunction]
#[pyo3(signature = (system, size = 256, seed = 0, law = "coin", width = None, height = None, guard_bits = DEFAULT_GUARD_BITS))]
fn sample(
    system: &str,
    size: usize,
    seed: u64,
    law: &str,
    width: Option<usize>,
    height: Option<usize>,
    guard_bits: u32,
) -> PyResult<PyWindow> {
    let spec = SamplerSpec::new(
        make_system(system, law, guard_bits)?,
        width.unwrap_or(size),
        height.unwrap_or(size),
        seed,
    );
    Ok(PyWindow {
        inner: spec.sample().map_err(to_py)?,
    })
}

/// Exact ensemble value of a generalized correlation.
#[pyfunction]
#[pyo3(signature = (system, query, law = "coin"))]
fn oracle(system: &str, query: &str, law: &str) -> PyResult<Complex64> {
    job::oracle_value(&make_system(system, law, DEFAULT_GUARD_BITS)?, &parse_query(query)?).map_err(to_py)
}

/// Ledrappier correlation by enumerating every configuration on `[0, box]²`,
/// as a `(numerator, denominator)` pair.
#[pyfunction]
fn ledrappier_bruteforce(query: &str, box_size: usize) -> PyResult<(i64, i64)> {
    let r = pd::ledrappier_bruteforce(&parse_query(query)?, box_size).map_err(to_py)?;
    Ok((*r.numer(), *r.denom()))
}

#[pyfunction]
fn rudin_shapiro(n: u64) -> i8 {
    pd::rudin_shapiro_1d(n)
}

/// `(bragg_mass, ac_density)` of the Bernoulli comb with weights `+1 ↦ plus`, `-1 ↦ minus`.
#[pyfunction]
#[pyo3(signature = (law = "coin", plus = Complex64::new(1.0, 0.0), minus = Complex64::new(-1.0, 0.0)))]
fn expected_spectrum(law: &str, plus: Complex64, minus: Complex64) -> PyResult<(f64, f64)> {
    let law: WeightLaw = law.parse().map_err(to_py)?;
    let s = pd::expected_spectrum(&law, plus, minus);
    Ok((s.bragg_mass, s.ac_density))
}

/// Runs the acceptance checks and returns the report as a JSON string.
#[pyfunction]
#[pyo3(signature = (system = None, size = 512, seed = 7))]
fn run_verify(system: Option<&str>, size: usize, seed: u64) -> PyResult<String> {
    let report = verify::verify(system, &verify::VerifyConfig::new(size, seed)).map_err(to_py)?;
    pd::io::report_json(&report).map_err(to_py)
}

#[pymodule]
#[pyo3(name = "planar_diffraction")]
pub fn init_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyWindow>()?;
    m.add_class::<PyPeriodogram>()?;
    m.add_function(wrap_pyfunction!(sample, m)?)?;
    m.add_function(wrap_pyfunction!(oracle, m)?)?;
    m.add_function(wrap_pyfunction!(ledrappier_bruteforce, m)?)?;
    m.add_function(wrap_pyfunction!(rudin_shapiro, m)?)?;
    m.add_function(wrap_pyfunction!(expected_spectrum, m)?)?;
    m.add("verify", wrap_pyfunction!(run_verify, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
