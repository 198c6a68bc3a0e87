//! Python extension module over the nonvanishing core: prime contexts,
//! character and Kloosterman sums, smoothing kernels, mollified moments,
//! and the exact rational optimizer.
//!
//! Exact rationals cross the boundary as strings ("5/13"); structured
//! reports come back as plain dicts.

use num_complex::Complex64;
use num_rational::BigRational;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyList};

use nonvanishing::arith;
use nonvanishing::characters::{self, DirichletCharacter};
use nonvanishing::error::Error;
use nonvanishing::expsums;
use nonvanishing::lmoments::{self, MollifierParams, SumPath};
use nonvanishing::optimize as opt;
use nonvanishing::specfun::KernelConfig;

fn err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_rational(s: &str, what: &str) -> PyResult<BigRational> {
    s.parse()
        .map_err(|_| PyValueError::new_err(format!("{what} {s:?} is not a rational")))
}

fn json_to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    use serde_json::Value;
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any(),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_pyobject(py)?.into_any()
            } else if let Some(u) = n.as_u64() {
                u.into_pyobject(py)?.into_any()
            } else {
                n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any()
            }
        }
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (key, item) in map {
                dict.set_item(key, json_to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn to_py_dict<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    json_to_py(py, &v)
}

/// Modular arithmetic tables for a fixed odd prime modulus.
#[pyclass(frozen)]
struct PrimeContext {
    inner: arith::PrimeContext,
}

#[pymethods]
impl PrimeContext {
    #[new]
    fn new(p: u64) -> PyResult<Self> {
        Ok(PrimeContext {
            inner: arith::PrimeContext::new(p).map_err(err)?,
        })
    }

    #[getter]
    fn p(&self) -> u64 {
        self.inner.p()
    }

    /// Smallest primitive root mod p.
    #[getter]
    fn generator(&self) -> u64 {
        self.inner.generator()
    }

    /// Number of even primitive characters mod p.
    #[getter]
    fn even_primitive_count(&self) -> u64 {
        self.inner.even_primitive_count()
    }

    /// Exponent k with generator^k = u mod p.
    fn discrete_log(&self, u: u64) -> PyResult<u64> {
        self.inner.discrete_log(u).map_err(err)
    }

    fn inv_mod(&self, u: u64) -> PyResult<u64> {
        self.inner.inv_mod(u).map_err(err)
    }

    /// Complete sum of e((x n + y inv(n)) / p) over invertible n; real.
    fn kloosterman(&self, x: u64, y: u64) -> f64 {
        expsums::kloosterman(&self.inner, x, y)
    }

    /// Gauss sum of the character with index j.
    fn gauss_sum(&self, j: u64) -> Complex64 {
        characters::gauss_sum(&self.inner, DirichletCharacter::new(&self.inner, j))
    }

    /// Central L-value of the even character with index j.
    fn central_value(&self, j: u64) -> PyResult<Complex64> {
        let chi = DirichletCharacter::new(&self.inner, j);
        lmoments::central_value(&self.inner, chi, &KernelConfig::default()).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "PrimeContext(p={}, generator={})",
            self.inner.p(),
            self.inner.generator()
        )
    }
}

/// Deterministic Miller-Rabin primality test.
#[pyfunction]
fn is_prime(n: u64) -> bool {
    arith::is_prime(n)
}

/// Mobius function; 0 when n has a squared prime factor.
#[pyfunction]
fn mobius(n: u64) -> PyResult<i8> {
    if n == 0 {
        return Err(PyValueError::new_err("mobius is defined for n >= 1"));
    }
    Ok(arith::mobius(n))
}

/// Mollifier coefficients mu(m) log(L/m) / log L for m below len.
#[pyfunction]
fn mollifier_coeffs(len: u64) -> PyResult<Vec<f64>> {
    lmoments::mollifier_coeffs(len).map_err(err)
}

/// Smoothing weight for the single central-value series.
#[pyfunction]
fn weight_w(x: f64) -> PyResult<f64> {
    nonvanishing::specfun::weight_w_quadrature(x, &KernelConfig::default()).map_err(err)
}

/// Smoothing weight for the squared central-value series.
#[pyfunction]
fn weight_v(x: f64) -> PyResult<f64> {
    nonvanishing::specfun::weight_v_quadrature(x, &KernelConfig::default()).map_err(err)
}

/// Kloosterman sum S(x, y; p) without keeping the context around.
#[pyfunction]
fn kloosterman(p: u64, x: u64, y: u64) -> PyResult<f64> {
    let ctx = arith::PrimeContext::new(p).map_err(err)?;
    Ok(expsums::kloosterman(&ctx, x, y))
}

/// Mollified moment sweep over the even primitive family at one prime.
///
/// Omitting c1 and c2 uses the optimal split for (theta, alpha). Returns
/// the full report as a dict; path is "dft" or "naive".
#[pyfunction]
#[pyo3(signature = (p, theta=0.2, alpha=0.1, c1=None, c2=None, path="dft"))]
fn moments<'py>(
    py: Python<'py>,
    p: u64,
    theta: f64,
    alpha: f64,
    c1: Option<f64>,
    c2: Option<f64>,
    path: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let params = match (c1, c2) {
        (Some(a), Some(b)) => MollifierParams::new(p, theta, alpha, a, b).map_err(err)?,
        (None, None) => MollifierParams::with_optimal_weights(p, theta, alpha).map_err(err)?,
        _ => return Err(PyValueError::new_err("c1 and c2 must be given together")),
    };
    let sum_path = match path {
        "dft" => SumPath::Dft,
        "naive" => SumPath::Naive,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown path {other:?}; use \"dft\" or \"naive\""
            )))
        }
    };
    let ctx = arith::PrimeContext::new(p).map_err(err)?;
    let report = lmoments::moment_report(&ctx, &params, &KernelConfig::default(), sum_path);
    to_py_dict(py, &report)
}

/// Exact maximizer of the combined mollifier length at margin delta.
///
/// Rationals in the result are strings; grid_* fields hold the floating
/// cross-check. Raises ValueError outside the feasible margin range.
#[pyfunction]
#[pyo3(signature = (delta="0", force_alpha_zero=false))]
fn optimize<'py>(
    py: Python<'py>,
    delta: &str,
    force_alpha_zero: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let d = parse_rational(delta, "margin")?;
    let result = opt::maximize_combined_length(&d, force_alpha_zero).map_err(err)?;
    to_py_dict(py, &result.record())
}

/// Optimal (c1, c2) split for rational theta, alpha; exact strings.
#[pyfunction]
fn optimal_weights(theta: &str, alpha: &str) -> PyResult<(String, String)> {
    let t = parse_rational(theta, "theta")?;
    let a = parse_rational(alpha, "alpha")?;
    let (c1, c2) = opt::optimal_weights(&t, &a).map_err(err)?;
    Ok((c1.to_string(), c2.to_string()))
}

/// Predicted nonvanishing proportion for rational parameters, exact.
#[pyfunction]
fn proportion(theta: &str, alpha: &str, c1: &str, c2: &str) -> PyResult<String> {
    let v = opt::proportion(
        &parse_rational(theta, "theta")?,
        &parse_rational(alpha, "alpha")?,
        &parse_rational(c1, "c1")?,
        &parse_rational(c2, "c2")?,
    )
    .map_err(err)?;
    Ok(v.to_string())
}

/// Constraint check for rational (theta, alpha) at margin delta.
#[pyfunction]
#[pyo3(signature = (theta, alpha, delta="0"))]
fn feasible<'py>(
    py: Python<'py>,
    theta: &str,
    alpha: &str,
    delta: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let t = parse_rational(theta, "theta")?;
    let a = parse_rational(alpha, "alpha")?;
    let d = parse_rational(delta, "margin")?;
    to_py_dict(py, &opt::feasible(&t, &a, &d))
}

#[pymodule]
fn nonvanishing_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PrimeContext>()?;
    m.add_function(wrap_pyfunction!(is_prime, m)?)?;
    m.add_function(wrap_pyfunction!(mobius, m)?)?;
    m.add_function(wrap_pyfunction!(mollifier_coeffs, m)?)?;
    m.add_function(wrap_pyfunction!(weight_w, m)?)?;
    m.add_function(wrap_pyfunction!(weight_v, m)?)?;
    m.add_function(wrap_pyfunction!(kloosterman, m)?)?;
    m.add_function(wrap_pyfunction!(moments, m)?)?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_weights, m)?)?;
    m.add_function(wrap_pyfunction!(proportion, m)?)?;
    m.add_function(wrap_pyfunction!(feasible, m)?)?;
    Ok(())
}
