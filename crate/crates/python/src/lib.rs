//! Python bindings: the r₃ table, exponential sums, local densities,
//! constants, predictions and variance reports.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

use cubevar::cache;
use cubevar::cube_reps::{sieve_r3, CubeRepTable};
use cubevar::dirichlet::{self, ConstantSet, DEFAULT_PRIME_CUTOFF, DEFAULT_SERIES_CUTOFF};
use cubevar::exp_sums;
use cubevar::identities::{self, IdentityRanges};
use cubevar::local_densities::{self, RhoCache};
use cubevar::main_terms::{self, FormulaSpec, Weights};
use cubevar::report;
use cubevar::variance_lab::{self, PredictionInputs, DEFAULT_NORMALIZE_EXPONENT};
use cubevar::Error;

fn err(e: Error) -> PyErr {
    match e {
        Error::Io(_) | Error::CorruptCache(_) | Error::Checksum { .. } => {
            PyOSError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => u.into_pyobject(py)?.into_any(),
            (None, Some(i)) => i.into_pyobject(py)?.into_any(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

/// r₃(n) for 1 <= n <= x_max.
#[pyclass(name = "CubeRepTable", frozen)]
struct PyCubeRepTable {
    inner: CubeRepTable,
}

#[pymethods]
impl PyCubeRepTable {
    #[new]
    fn new(x_max: u64) -> PyResult<Self> {
        Ok(Self {
            inner: sieve_r3(x_max).map_err(err)?,
        })
    }

    /// Load a cache file written by `save` or `cubevar sieve`.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: cache::read_cache(&path).map_err(err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        cache::write_cache(&path, &self.inner).map_err(err)
    }

    #[getter]
    fn x_max(&self) -> u64 {
        self.inner.x_max()
    }

    fn r3(&self, n: u64) -> PyResult<u32> {
        if n == 0 || n > self.inner.x_max() {
            return Err(err(Error::Range {
                value: n,
                max: self.inner.x_max(),
            }));
        }
        Ok(self.inner.r3(n))
    }

    fn sum_r3(&self, x: u64) -> PyResult<u64> {
        self.inner.sum_r3(x).map_err(err)
    }

    fn sum_r3_squared(&self, x: u64) -> PyResult<u128> {
        self.inner.sum_r3_squared(x).map_err(err)
    }

    /// Υ(x; q, a) for a = 1..=q.
    fn progression_sums(&self, x: u64, q: u64) -> PyResult<Vec<u64>> {
        self.inner.progression_sums(x, q).map_err(err)
    }

    fn estimate_upper_exponent(&self, grid: Vec<u64>) -> PyResult<f64> {
        Ok(self.inner.estimate_upper_exponent(&grid).map_err(err)?.max)
    }

    fn __len__(&self) -> usize {
        self.inner.x_max() as usize
    }

    fn __repr__(&self) -> String {
        format!("CubeRepTable(x_max={})", self.inner.x_max())
    }
}

/// Euler-product constants with error estimates.
#[pyclass(name = "ConstantSet", frozen)]
struct PyConstantSet {
    inner: ConstantSet,
}

#[pymethods]
impl PyConstantSet {
    #[new]
    #[pyo3(signature = (prime_cutoff = DEFAULT_PRIME_CUTOFF, series_cutoff = DEFAULT_SERIES_CUTOFF))]
    fn new(prime_cutoff: u64, series_cutoff: u64) -> PyResult<Self> {
        Ok(Self {
            inner: dirichlet::constants(prime_cutoff, series_cutoff).map_err(err)?,
        })
    }

    /// (value, error_estimate) of a named constant such as "A2".
    fn get(&self, name: &str) -> PyResult<(f64, f64)> {
        self.inner
            .named()
            .into_iter()
            .find(|c| c.name == name)
            .map(|c| (c.value, c.error_estimate))
            .ok_or_else(|| PyValueError::new_err(format!("unknown constant {name:?}")))
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.inner.warnings.clone()
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &report::constants_json(&self.inner))
    }
}

#[pyfunction]
fn s_direct(q: u64, a: i64) -> PyResult<Complex64> {
    if q == 0 {
        return Err(PyValueError::new_err("modulus q must be positive"));
    }
    Ok(exp_sums::s_direct(q, a))
}

#[pyfunction]
fn s_reduce(q: u64, b: i64) -> PyResult<Complex64> {
    if q == 0 {
        return Err(PyValueError::new_err("modulus q must be positive"));
    }
    Ok(exp_sums::s_reduce(q, b))
}

#[pyfunction]
fn s_fast(q: u64, a: i64) -> PyResult<Complex64> {
    exp_sums::s_fast(q, a).map_err(err)
}

#[pyfunction]
fn s_prime_power(p: u64, alpha: u32, a: i64) -> PyResult<Complex64> {
    exp_sums::s_prime_power(p, alpha, a).map_err(err)
}

#[pyfunction]
fn nu(q: u64, a: i64) -> PyResult<Complex64> {
    exp_sums::nu(q, a).map_err(err)
}

#[pyfunction]
fn sixth_moment_prime(p: u64) -> PyResult<u128> {
    exp_sums::sixth_moment_prime(p).map_err(err)
}

/// ρ(q, a) for a = 1..=q, with a = q the zero class.
#[pyfunction]
fn rho_table(q: u64) -> PyResult<Vec<u64>> {
    let t = local_densities::rho_table(q).map_err(err)?;
    Ok((1..=q as i64).map(|a| t.get(a)).collect())
}

#[pyfunction]
fn rho_via_dft(q: u64, a: i64) -> PyResult<f64> {
    if q == 0 {
        return Err(PyValueError::new_err("modulus q must be positive"));
    }
    Ok(local_densities::rho_via_dft(q, a))
}

#[pyfunction]
fn t_function(r: u64) -> PyResult<f64> {
    Ok(local_densities::t_function(r).map_err(err)?.value)
}

#[pyfunction]
fn h_function(l: u64) -> PyResult<f64> {
    local_densities::h_function(l).map_err(err)
}

#[pyfunction]
fn zeta(s: f64) -> PyResult<f64> {
    dirichlet::zeta(s).map_err(err)
}

/// (value, relative tail bound) of D₀(s) truncated at `prime_cutoff`.
#[pyfunction]
#[pyo3(signature = (s, prime_cutoff = DEFAULT_PRIME_CUTOFF))]
fn d0(s: f64, prime_cutoff: u64) -> PyResult<(f64, f64)> {
    let v = dirichlet::d0(s, prime_cutoff).map_err(err)?;
    Ok((v.value, v.tail_bound))
}

/// V(x, Q) without a prediction.
#[pyfunction]
fn empirical_variance(table: &PyCubeRepTable, x: u64, q: u64) -> PyResult<f64> {
    let rho = RhoCache::new();
    Ok(
        variance_lab::empirical_variance(&table.inner, &rho, x, q, false)
            .map_err(err)?
            .v_empirical,
    )
}

/// Predicted V(x, Q) as a dict with the named main terms and their total.
#[pyfunction]
#[pyo3(signature = (table, x, q, formula = "auto", constants = None))]
fn predict<'py>(
    py: Python<'py>,
    table: &PyCubeRepTable,
    x: u64,
    q: u64,
    formula: &str,
    constants: Option<&PyConstantSet>,
) -> PyResult<Bound<'py, PyAny>> {
    let spec: FormulaSpec = formula.parse().map_err(err)?;
    let id = spec
        .resolve(x as f64, q as f64)
        .ok_or_else(|| PyValueError::new_err("predict needs a formula other than none"))?;
    if q == 0 || q > x {
        return Err(PyValueError::new_err(format!(
            "need 0 < Q <= x, got x = {x}, Q = {q}"
        )));
    }
    let owned;
    let c = match constants {
        Some(c) => &c.inner,
        None => {
            owned =
                dirichlet::constants(DEFAULT_PRIME_CUTOFF, DEFAULT_SERIES_CUTOFF).map_err(err)?;
            &owned
        }
    };
    let w = Weights::new(x / q + 1).map_err(err)?;
    let sum_sq = table.inner.sum_r3_squared(x).map_err(err)?;
    let p = main_terms::predict(id, x as f64, q as f64, sum_sq, c, &w).map_err(err)?;
    let v = serde_json::to_value(&p).map_err(|e| err(Error::Json(e)))?;
    to_py(py, &v)
}

/// A variance report dict with the same keys as the CLI JSON output.
#[pyfunction]
#[pyo3(signature = (table, x, q, formula = "auto", constants = None, normalize_exponent = DEFAULT_NORMALIZE_EXPONENT))]
fn variance<'py>(
    py: Python<'py>,
    table: &PyCubeRepTable,
    x: u64,
    q: u64,
    formula: &str,
    constants: Option<&PyConstantSet>,
    normalize_exponent: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let spec: FormulaSpec = formula.parse().map_err(err)?;
    let rho = RhoCache::new();
    let report = if q > 0 && q <= x && spec.resolve(x as f64, q as f64).is_some() {
        let owned;
        let c = match constants {
            Some(c) => &c.inner,
            None => {
                owned = dirichlet::constants(DEFAULT_PRIME_CUTOFF, DEFAULT_SERIES_CUTOFF)
                    .map_err(err)?;
                &owned
            }
        };
        let w = Weights::new(x / q + 1).map_err(err)?;
        let inputs = PredictionInputs {
            constants: c,
            weights: &w,
        };
        variance_lab::variance_with_prediction(
            &table.inner,
            &rho,
            x,
            q,
            spec,
            Some(&inputs),
            normalize_exponent,
        )
    } else {
        variance_lab::variance_with_prediction(
            &table.inner,
            &rho,
            x,
            q,
            FormulaSpec::None,
            None,
            normalize_exponent,
        )
    }
    .map_err(err)?;
    to_py(py, &report::report_json(&report))
}

/// Run the identity suite; returns a list of result dicts.
#[pyfunction]
#[pyo3(signature = (q_max = 2000))]
fn run_identities<'py>(py: Python<'py>, q_max: u64) -> PyResult<Bound<'py, PyAny>> {
    let mut ranges = IdentityRanges::default();
    ranges.reduce_q_max = q_max;
    ranges.prime_power_max = q_max;
    ranges.dft_q_max = ranges.dft_q_max.min(q_max);
    ranges.second_moment_q_max = ranges.second_moment_q_max.min(q_max);
    ranges.multiplicative_max = ranges.multiplicative_max.min(q_max);
    let results = identities::run_suite(&ranges).map_err(err)?;
    let v = serde_json::to_value(&results).map_err(|e| err(Error::Json(e)))?;
    to_py(py, &v)
}

#[pymodule]
#[pyo3(name = "cubevar")]
fn cubevar_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCubeRepTable>()?;
    m.add_class::<PyConstantSet>()?;
    m.add_function(wrap_pyfunction!(s_direct, m)?)?;
    m.add_function(wrap_pyfunction!(s_reduce, m)?)?;
    m.add_function(wrap_pyfunction!(s_fast, m)?)?;
    m.add_function(wrap_pyfunction!(s_prime_power, m)?)?;
    m.add_function(wrap_pyfunction!(nu, m)?)?;
    m.add_function(wrap_pyfunction!(sixth_moment_prime, m)?)?;
    m.add_function(wrap_pyfunction!(rho_table, m)?)?;
    m.add_function(wrap_pyfunction!(rho_via_dft, m)?)?;
    m.add_function(wrap_pyfunction!(t_function, m)?)?;
    m.add_function(wrap_pyfunction!(h_function, m)?)?;
    m.add_function(wrap_pyfunction!(zeta, m)?)?;
    m.add_function(wrap_pyfunction!(d0, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_variance, m)?)?;
    m.add_function(wrap_pyfunction!(predict, m)?)?;
    m.add_function(wrap_pyfunction!(variance, m)?)?;
    m.add_function(wrap_pyfunction!(run_identities, m)?)?;
    m.add("GAMMA_4_3", dirichlet::GAMMA_4_3)?;
    Ok(())
}
