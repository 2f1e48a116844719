//! Python module `bianchi`. Structured results are returned as JSON text.

use std::path::PathBuf;

use bianchi_cli::report;
use bianchi_core::iqfield::{class_group, make_field};
use bianchi_core::poly::RationalFunction;
use bianchi_core::specseq::DEFAULT_QMAX;
use bianchi_core::{wallres, Error};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Input(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn series_for(m: i64, ell: u64, qmax: usize) -> Result<RationalFunction, Error> {
    let r = report::compute(m, &[ell], None, qmax)?;
    let t = r.torsion_for(ell).ok_or_else(|| Error::Invariant("missing torsion report".into()))?;
    RationalFunction::from_record(&t.series)
}

/// Full report for `Q(sqrt(-m))` as JSON, with timings zeroed when `canonical`.
#[pyfunction]
#[pyo3(signature = (m, ells = vec![2, 3], qmax = DEFAULT_QMAX, cache = None, canonical = false))]
fn compute(py: Python<'_>, m: i64, ells: Vec<u64>, qmax: usize, cache: Option<PathBuf>, canonical: bool) -> PyResult<String> {
    let cache = report::cache_dir(cache.as_deref());
    let r = py.detach(|| report::compute(m, &ells, cache.as_deref(), qmax)).map_err(to_py)?;
    Ok(if canonical { report::canonical_json(&r) } else { serde_json::to_string(&r).expect("report serialises") })
}

/// The ℓ-primary Poincaré series, as text.
#[pyfunction]
#[pyo3(signature = (m, ell, qmax = DEFAULT_QMAX))]
fn poincare_series(py: Python<'_>, m: i64, ell: u64, qmax: usize) -> PyResult<String> {
    py.detach(|| series_for(m, ell, qmax)).map(|f| f.to_string()).map_err(to_py)
}

/// `dim H_q(Γ; F_ℓ)` for `q = 3, 4, ...`, `n` terms.
#[pyfunction]
#[pyo3(signature = (m, ell, n = 12))]
fn mod_ell_dimensions(py: Python<'_>, m: i64, ell: u64, n: usize) -> PyResult<Vec<i64>> {
    let f = py.detach(|| series_for(m, ell, DEFAULT_QMAX)).map_err(to_py)?;
    let c = f.integer_series(n + 3).map_err(to_py)?;
    Ok(c[3..].to_vec())
}

#[pyfunction]
fn class_number(m: i64) -> PyResult<usize> {
    let field = make_field(m).map_err(to_py)?;
    Ok(class_group(&field).class_number)
}

/// Checks on the resolution for A4 as JSON.
#[pyfunction]
fn wall_report() -> PyResult<String> {
    let r = wallres::construct().and_then(|w| w.verify()).map_err(to_py)?;
    Ok(serde_json::to_string(&r).expect("report serialises"))
}

#[pymodule]
fn bianchi(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(compute, m)?)?;
    m.add_function(wrap_pyfunction!(poincare_series, m)?)?;
    m.add_function(wrap_pyfunction!(mod_ell_dimensions, m)?)?;
    m.add_function(wrap_pyfunction!(class_number, m)?)?;
    m.add_function(wrap_pyfunction!(wall_report, m)?)?;
    Ok(())
}
