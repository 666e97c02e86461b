//! Python bindings for fragcheck.

use pyo3::prelude::*;

#[pymodule]
fn fragcheck_py(_m: &Bound<'_, PyModule>) -> PyResult<()> {
    Ok(())
}
