use pyo3::prelude::*;

#[pymodule]
fn editwire(_m: &Bound<'_, PyModule>) -> PyResult<()> {
    Ok(())
}
