use ::fkp::fkp;
use pyo3::ffi::c_str;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn run(script: &std::ffi::CStr) {
    pyo3::append_to_inittab!(fkp);
    Python::initialize();
    Python::attach(|py| {
        let globals = PyDict::new(py);
        if let Err(e) = py.run(script, Some(&globals), None) {
            e.display(py);
            panic!("python check failed");
        }
    });
}

#[test]
fn module_round_trips_a_solve() {
    run(c_str!(
        r#"
import fkp, math
g = fkp.Grid.square(64, 16.0)
assert g.nx == 64 and g.dx == 0.5
phi, rep = fkp.solve(g, alpha=2.0, max_iter=300)
assert rep.status == "converged", rep
assert len(rep.records) == rep.iterations
assert fkp.residual(phi) < 1e-5
ex = fkp.exact_lump(g, 2.0)
assert ex.get(32, 32) == 16.0
r, p, plateau, var = fkp.decay(ex, "y")
assert len(r) == 31 and math.isfinite(plateau)
try:
    fkp.Grid.square(100, 1.0)
except fkp.FkpError as e:
    assert "invalid-grid" in str(e)
else:
    raise AssertionError("bad grid accepted")
try:
    fkp.section(ex, "z")
except ValueError:
    pass
else:
    raise AssertionError("bad axis accepted")
"#
    ));
}
