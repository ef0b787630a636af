//! Python bindings: grids, fields, the Petviashvili solver, diagnostics and
//! kernel-symbol probes. Fields cross the boundary as flat row-major lists
//! with x varying fastest.

use std::collections::HashMap;

use fkp_core::analysis::{cross_section, decay_profile_with_power, symmetry_report, Axis};
use fkp_core::diagnostics::{fourier_tail, functionals, residual};
use fkp_core::fieldfile::{load_field, save_field, FieldMeta};
use fkp_core::kernels::{integrability_probe, SymbolKind};
use fkp_core::reference::{exact_kp1_lump, ExactLumpParams};
use fkp_core::{
    solve as core_solve, Branch, FkpError, RealField, SeedKind, SeedSpec, SolverConfig, SpectralGrid, SymbolParams,
};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

create_exception!(fkp, FkpException, PyException, "Error raised by the fKP solver.");

fn to_py(e: FkpError) -> PyErr {
    FkpException::new_err(format!("[{}] {e}", e.code()))
}

#[pyclass(name = "Grid", frozen, eq, from_py_object)]
#[derive(Clone, Copy, PartialEq)]
pub struct PyGrid {
    inner: SpectralGrid,
}

#[pymethods]
impl PyGrid {
    /// `nx x ny` nodes on `[-lx, lx) x [-ly, ly)`.
    #[new]
    #[pyo3(signature = (nx, ny, lx, ly))]
    fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> PyResult<Self> {
        Ok(Self {
            inner: SpectralGrid::new(nx, ny, lx, ly).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn square(n: usize, l: f64) -> PyResult<Self> {
        Ok(Self {
            inner: SpectralGrid::square(n, l).map_err(to_py)?,
        })
    }

    #[getter]
    fn nx(&self) -> usize {
        self.inner.nx()
    }

    #[getter]
    fn ny(&self) -> usize {
        self.inner.ny()
    }

    #[getter]
    fn lx(&self) -> f64 {
        self.inner.lx()
    }

    #[getter]
    fn ly(&self) -> f64 {
        self.inner.ly()
    }

    #[getter]
    fn dx(&self) -> f64 {
        self.inner.dx()
    }

    #[getter]
    fn dy(&self) -> f64 {
        self.inner.dy()
    }

    fn xs(&self) -> Vec<f64> {
        self.inner.xs()
    }

    fn ys(&self) -> Vec<f64> {
        self.inner.ys()
    }

    fn __repr__(&self) -> String {
        format!(
            "Grid(nx={}, ny={}, lx={}, ly={})",
            self.inner.nx(),
            self.inner.ny(),
            self.inner.lx(),
            self.inner.ly()
        )
    }
}

/// Real samples on a [`PyGrid`].
#[pyclass(name = "Field", frozen)]
pub struct PyField {
    inner: RealField,
}

#[pymethods]
impl PyField {
    #[new]
    fn new(grid: PyGrid, values: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: RealField::new(grid.inner, values).map_err(to_py)?,
        })
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid {
            inner: *self.inner.grid(),
        }
    }

    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    fn get(&self, ix: usize, iy: usize) -> PyResult<f64> {
        let g = self.inner.grid();
        if ix >= g.nx() || iy >= g.ny() {
            return Err(PyValueError::new_err(format!("node ({ix}, {iy}) outside {}x{}", g.nx(), g.ny())));
        }
        Ok(self.inner.get(ix, iy))
    }

    fn max_abs(&self) -> f64 {
        self.inner.max_abs()
    }

    #[pyo3(signature = (path, alpha=2.0, c=1.0, sigma=-1.0))]
    fn save(&self, path: &str, alpha: f64, c: f64, sigma: f64) -> PyResult<()> {
        save_field(path, &self.inner, &FieldMeta { alpha, c, sigma }).map_err(to_py)
    }

    /// Returns `(field, {"alpha", "c", "sigma"})`.
    #[staticmethod]
    fn load(path: &str) -> PyResult<(PyField, HashMap<String, f64>)> {
        let (inner, meta) = load_field(path).map_err(to_py)?;
        let meta = HashMap::from([
            ("alpha".to_string(), meta.alpha),
            ("c".to_string(), meta.c),
            ("sigma".to_string(), meta.sigma),
        ]);
        Ok((PyField { inner }, meta))
    }

    fn __len__(&self) -> usize {
        self.inner.values().len()
    }
}

#[pyclass(name = "SolveReport", frozen, get_all)]
pub struct PySolveReport {
    status: String,
    iterations: usize,
    /// `(iter, iter_error, m_factor, factor_error, residual)` per step.
    records: Vec<(usize, f64, f64, f64, f64)>,
}

#[pymethods]
impl PySolveReport {
    fn converged(&self) -> bool {
        self.status == "converged"
    }

    fn __repr__(&self) -> String {
        format!("SolveReport(status={:?}, iterations={})", self.status, self.iterations)
    }
}

fn parse_seed(seed: &str) -> PyResult<SeedKind> {
    match seed {
        "gaussian" => Ok(SeedKind::Gaussian),
        "exact-kp1" => Ok(SeedKind::ExactKp1),
        other => match other.strip_prefix("file:") {
            Some(p) if !p.is_empty() => Ok(SeedKind::File(p.into())),
            _ => Err(PyValueError::new_err(format!("seed `{other}` is not gaussian, exact-kp1 or file:PATH"))),
        },
    }
}

fn params(alpha: f64, c: f64, sigma: f64) -> PyResult<SymbolParams> {
    Ok(SymbolParams {
        branch: Branch::from_sigma(sigma).map_err(to_py)?,
        ..SymbolParams::new(alpha, c)
    })
}

/// Runs the Petviashvili iteration and returns `(field, report)`.
#[pyfunction]
#[pyo3(signature = (
    grid, alpha=2.0, c=1.0, *, sigma=-1.0, nu=2.0, lambda_=fkp_core::symbols::DEFAULT_LAMBDA, tol=1e-5,
    max_iter=200, seed="gaussian", seed_amplitude=None, seed_width=2.0, allow_supercritical=false, dealias=false
))]
#[allow(clippy::too_many_arguments)]
fn solve(
    py: Python<'_>,
    grid: PyGrid,
    alpha: f64,
    c: f64,
    sigma: f64,
    nu: f64,
    lambda_: f64,
    tol: f64,
    max_iter: usize,
    seed: &str,
    seed_amplitude: Option<f64>,
    seed_width: f64,
    allow_supercritical: bool,
    dealias: bool,
) -> PyResult<(PyField, PySolveReport)> {
    let mut p = params(alpha, c, sigma)?;
    p.lambda = lambda_;
    let mut cfg = SolverConfig::new(grid.inner, p);
    cfg.nu = nu;
    cfg.tol = tol;
    cfg.max_iter = max_iter;
    cfg.seed = SeedSpec {
        kind: parse_seed(seed)?,
        amplitude: seed_amplitude,
        width: seed_width,
    };
    cfg.allow_supercritical = allow_supercritical;
    cfg.dealias = dealias;
    let (phi, report) = py.detach(|| core_solve(&cfg)).map_err(to_py)?;
    let records = report
        .records
        .iter()
        .map(|r| (r.iter, r.iter_error, r.m_factor, r.factor_error, r.residual))
        .collect();
    Ok((
        PyField { inner: phi },
        PySolveReport {
            status: report.status.as_str().to_string(),
            iterations: report.iterations(),
            records,
        },
    ))
}

/// The closed-form KP-I lump of speed `c` sampled on `grid`.
#[pyfunction]
#[pyo3(signature = (grid, c=1.0))]
fn exact_lump(grid: PyGrid, c: f64) -> PyResult<PyField> {
    Ok(PyField {
        inner: exact_kp1_lump(&grid.inner, &ExactLumpParams::new(c)).map_err(to_py)?,
    })
}

#[pyfunction(name = "residual")]
#[pyo3(signature = (field, alpha=2.0, c=1.0, sigma=-1.0))]
fn py_residual(field: &PyField, alpha: f64, c: f64, sigma: f64) -> PyResult<f64> {
    residual(&field.inner, &params(alpha, c, sigma)?).map_err(to_py)
}

/// Variational functionals, Sobolev ratio and Fourier-tail decay as a dict.
#[pyfunction(name = "functionals")]
#[pyo3(signature = (field, alpha=2.0))]
fn py_functionals(field: &PyField, alpha: f64) -> PyResult<HashMap<String, f64>> {
    let f = functionals(&field.inner, alpha).map_err(to_py)?;
    Ok(HashMap::from([
        ("l_value".to_string(), f.l_value),
        ("n_value".to_string(), f.n_value),
        ("energy_norm".to_string(), f.energy_norm),
        ("sobolev_ratio".to_string(), f.sobolev_ratio),
        ("dc_mode".to_string(), f.dc_mode),
        ("fourier_tail".to_string(), fourier_tail(&field.inner)),
    ]))
}

/// `(x_defect, y_defect)` relative reflection defects.
#[pyfunction]
fn symmetry(field: &PyField) -> (f64, f64) {
    let s = symmetry_report(&field.inner);
    (s.x_defect, s.y_defect)
}

fn axis(name: &str) -> PyResult<Axis> {
    match name {
        "x" => Ok(Axis::X),
        "y" => Ok(Axis::Y),
        other => Err(PyValueError::new_err(format!("axis `{other}` is not x or y"))),
    }
}

/// `(coordinates, values)` along the grid line nearest to `offset`.
#[pyfunction]
#[pyo3(signature = (field, axis_name, offset=0.0))]
fn section(field: &PyField, axis_name: &str, offset: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let pts = cross_section(&field.inner, axis(axis_name)?, offset).map_err(to_py)?;
    Ok(pts.into_iter().unzip())
}

/// `r^power φ` along a positive half-axis, with its window plateau.
#[pyfunction]
#[pyo3(signature = (field, axis_name, power=2.0))]
fn decay(field: &PyField, axis_name: &str, power: f64) -> PyResult<(Vec<f64>, Vec<f64>, f64, f64)> {
    let d = decay_profile_with_power(&field.inner, axis(axis_name)?, power);
    Ok((d.radii, d.products, d.plateau_value, d.plateau_rel_variation))
}

#[pyclass(name = "ProbeResult", frozen, get_all)]
pub struct PyProbe {
    alpha: f64,
    p: f64,
    which: String,
    radii: Vec<f64>,
    truncated_norms: Vec<f64>,
    separated_norms: Vec<f64>,
    last_increment: f64,
    route_gap: f64,
    verdict: String,
}

/// Truncated `L^p` norms of the `m` or `h` symbol over growing regions.
#[pyfunction]
#[pyo3(signature = (alpha, p, which="m"))]
fn probe(py: Python<'_>, alpha: f64, p: f64, which: &str) -> PyResult<PyProbe> {
    let kind = match which {
        "m" => SymbolKind::M,
        "h" => SymbolKind::H,
        other => return Err(PyValueError::new_err(format!("symbol `{other}` is not m or h"))),
    };
    let r = py.detach(|| integrability_probe(alpha, p, kind)).map_err(to_py)?;
    Ok(PyProbe {
        alpha,
        p,
        which: kind.as_str().to_string(),
        radii: r.truncation_radii,
        truncated_norms: r.truncated_norms,
        separated_norms: r.separated_norms,
        last_increment: r.last_increment,
        route_gap: r.route_gap,
        verdict: r.verdict.as_str().to_string(),
    })
}

#[pymodule]
pub fn fkp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("FkpError", m.py().get_type::<FkpException>())?;
    m.add_class::<PyGrid>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PySolveReport>()?;
    m.add_class::<PyProbe>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(exact_lump, m)?)?;
    m.add_function(wrap_pyfunction!(py_residual, m)?)?;
    m.add_function(wrap_pyfunction!(py_functionals, m)?)?;
    m.add_function(wrap_pyfunction!(symmetry, m)?)?;
    m.add_function(wrap_pyfunction!(section, m)?)?;
    m.add_function(wrap_pyfunction!(decay, m)?)?;
    m.add_function(wrap_pyfunction!(probe, m)?)?;
    Ok(())
}
