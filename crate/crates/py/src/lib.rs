use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use tetraqg::error::Error;
use tetraqg::suites::{cmd_compute, cmd_verify, SuiteConfig};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Usage(_) | Error::Domain(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// 3D R (or L) matrix element as an exact string.
#[pyfunction]
#[pyo3(signature = (a, b, c, i, j, k, qroot = "1/2", name = "R"))]
fn threed_element(a: i64, b: i64, c: i64, i: i64, j: i64, k: i64, qroot: &str, name: &str) -> PyResult<String> {
    let mut cfg = SuiteConfig::new("compute");
    cfg.qroot = qroot.into();
    cfg.name = Some(name.into());
    cfg.index = Some(format!("{a},{b},{c},{i},{j},{k}"));
    cmd_compute("threed-element", &cfg).map_err(to_py)
}

/// Trace-construction R matrix block in the text dump format.
#[pyfunction]
#[pyo3(signature = (eps, l, m, z = "3/5", qroot = "1/2"))]
fn rmatrix_trace(eps: &str, l: i64, m: i64, z: &str, qroot: &str) -> PyResult<String> {
    let mut cfg = SuiteConfig::new("compute");
    cfg.qroot = qroot.into();
    cfg.eps = Some(eps.into());
    cfg.sector = Some(format!("{l},{m}"));
    cfg.z = Some(z.into());
    cmd_compute("rmatrix-trace", &cfg).map_err(to_py)
}

/// Runs a verification suite and returns the JSON report.
#[pyfunction]
#[pyo3(signature = (suite, name = None, eps = None, qroot = "1/2", seed = 0))]
fn verify(suite: &str, name: Option<String>, eps: Option<String>, qroot: &str, seed: u64) -> PyResult<String> {
    let mut cfg = SuiteConfig::new(suite);
    cfg.name = name;
    cfg.eps = eps;
    cfg.qroot = qroot.into();
    cfg.seed = seed;
    cmd_verify(&cfg).map(|r| r.to_json()).map_err(to_py)
}

#[pymodule]
fn tetraqg_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(threed_element, m)?)?;
    m.add_function(wrap_pyfunction!(rmatrix_trace, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
