use planar_diffraction_py::init_module;
use pyo3::prelude::*;

fn run(code: &str) {
    pyo3::append_to_inittab!(init_module);
    Python::with_gil(|py| {
        py.run_bound(code, None, None)
            .unwrap_or_else(|e| panic!("{}", e.value_bound(py)));
    });
}

#[test]
fn module_round_trip() {
    run(r#"
import planar_diffraction as pd
w = pd.sample("ledrappier", size=32, seed=1)
assert w.correlation("(0,0),(2,0),(0,2)") == 1
assert pd.oracle("times23", "(0,1):-2,(1,1):1") == 1
t = w.autocorr(2)
assert len(t) == 25 and t[12][:2] == (0, 0) and t[12][2] == 1
g = w.periodogram()
assert abs(g.mean() - 1) < 1e-12
try:
    pd.sample("ledrappier", size=0)
except ValueError as e:
    assert "invalid_window" in str(e)
else:
    raise AssertionError
"#);
}
