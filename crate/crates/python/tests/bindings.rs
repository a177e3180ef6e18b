use pyo3::prelude::*;
use pyo3::types::PyDict;

fn run(code: &str) -> PyResult<()> {
    Python::initialize();
    Python::attach(|py| {
        let module = PyModule::new(py, "ttmmk")?;
        ttmmk_py::ttmmk_module(&module)?;
        let globals = PyDict::new(py);
        globals.set_item("ttmmk", module)?;
        py.run(&std::ffi::CString::new(code).unwrap(), Some(&globals), None)
    })
}

#[test]
fn tensor_roundtrip_and_tt() {
    run(r#"
x = ttmmk.Tensor([2, 3], [1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
assert x.get([1, 2]) == 6.0
assert x.matricize(0) == [[1.0, 3.0, 5.0], [2.0, 4.0, 6.0]]
tt = ttmmk.tt_svd(x, eps=0.0)
assert tt.ranks[0] == 1 and tt.ranks[-1] == 1
err = sum((a - b) ** 2 for a, b in zip(tt.reconstruct().data, x.data)) ** 0.5
assert err < 1e-13, err
"#)
    .unwrap();
}

#[test]
fn errors_carry_codes() {
    let err = run("ttmmk.tt_svd(ttmmk.Tensor([2], [1.0, 2.0]), rank=1, eps=0.1)").unwrap_err();
    Python::attach(|py| assert!(err.is_instance_of::<pyo3::exceptions::PyValueError>(py)));
    let err = run("ttmmk.Tensor([0], [])").unwrap_err().to_string();
    assert!(err.contains('['), "{err}");
}
