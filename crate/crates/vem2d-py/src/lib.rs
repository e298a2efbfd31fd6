use pyo3::prelude::*;

#[pymodule]
fn vem2d_py(_m: &Bound<'_, PyModule>) -> PyResult<()> {
    Ok(())
}
