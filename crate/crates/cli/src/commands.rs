use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fkp_core::analysis::{cross_section, decay_profile_with_power, symmetry_report, Axis};
use fkp_core::diagnostics::{fourier_tail, functionals, residual};
use fkp_core::fieldfile::{load_field, save_field, FieldMeta};
use fkp_core::kernels::{integrability_probe, SymbolKind};
use fkp_core::reference::{exact_kp1_lump, interpolate, ExactLumpParams};
use fkp_core::symbols::{Branch, SymbolParams};
use fkp_core::{solve as run_solver, FkpError, RealField, SolveStatus, SpectralGrid};
use serde::Serialize;

use crate::config::{resolve, ConfigError, RawConfig, ResolvedRun};
use crate::output::{real, write_csv, write_key_values, RunManifest};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_MAX_ITER: u8 = 2;
pub const EXIT_DIVERGED: u8 = 3;

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Core(FkpError),
    Io(PathBuf, std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(FkpError::Divergence(_) | FkpError::DegenerateIterate(_)) => EXIT_DIVERGED,
            _ => EXIT_INPUT,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Core(FkpError::InvalidConfig { key, reason }) => {
                write!(f, "invalid value for `{key}`: {reason}")
            }
            CliError::Core(e) => write!(f, "[{}] {e}", e.code()),
            CliError::Io(path, e) => write!(f, "{}: {e}", path.display()),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<FkpError> for CliError {
    fn from(e: FkpError) -> Self {
        CliError::Core(e)
    }
}

trait IoContext<T> {
    fn at(self, path: &Path) -> Result<T, CliError>;
}

impl<T> IoContext<T> for std::io::Result<T> {
    fn at(self, path: &Path) -> Result<T, CliError> {
        self.map_err(|e| CliError::Io(path.to_path_buf(), e))
    }
}

fn status_code(status: SolveStatus) -> u8 {
    match status {
        SolveStatus::Converged => EXIT_OK,
        SolveStatus::MaxIter => EXIT_MAX_ITER,
        SolveStatus::Diverged => EXIT_DIVERGED,
    }
}

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).at(dir)
}

fn meta_for(run: &ResolvedRun) -> FieldMeta {
    FieldMeta {
        alpha: run.alpha,
        c: run.c,
        sigma: run.sigma,
    }
}

pub fn solve(raw: &RawConfig) -> Result<u8, CliError> {
    let run = resolve(raw)?;
    let cfg = run.solver_config()?;
    prepare_dir(&run.out)?;
    let mut manifest = RunManifest::new("solve", run.clone());

    let t = Instant::now();
    let (phi, report) = run_solver(&cfg)?;
    manifest.timing("solve", t.elapsed().as_secs_f64());

    let t = Instant::now();
    let field_path = run.out.join("field.fkpl");
    save_field(&field_path, &phi, &meta_for(&run))?;
    manifest.output("field", &field_path);

    let log_path = run.out.join("iterations.csv");
    let rows = report.records.iter().map(|r| {
        vec![
            r.iter.to_string(),
            real(r.iter_error),
            real(r.m_factor),
            real(r.factor_error),
            real(r.residual),
        ]
    });
    write_csv(&log_path, &["iter", "iter_error", "m_factor", "factor_error", "residual"], rows).at(&log_path)?;
    manifest.output("iteration-log", &log_path);
    manifest.timing("write", t.elapsed().as_secs_f64());

    manifest.status = report.status.as_str().to_string();
    manifest.iterations = Some(report.iterations());
    let manifest_path = run.out.join("manifest.json");
    manifest.write(&manifest_path).at(&manifest_path)?;

    match report.last() {
        Some(r) => println!(
            "{} after {} iterations: iter_error {:.3e}, |1-M| {:.3e}, residual {:.3e}",
            report.status.as_str(),
            report.iterations(),
            r.iter_error,
            r.factor_error,
            r.residual
        ),
        None => println!("{} before the first step", report.status.as_str()),
    }
    Ok(status_code(report.status))
}

#[derive(Debug, Serialize)]
struct AnalyzeConfig {
    field: PathBuf,
    out: PathBuf,
    offsets: Vec<f64>,
    power: f64,
}

pub fn analyze(field: &Path, out: &Path, offsets: &[f64], power: f64) -> Result<u8, CliError> {
    if !power.is_finite() {
        return Err(ConfigError::new("power", "must be finite").into());
    }
    let t = Instant::now();
    let (phi, meta) = load_field(field)?;
    prepare_dir(out)?;
    let mut manifest = RunManifest::new(
        "analyze",
        AnalyzeConfig {
            field: field.to_path_buf(),
            out: out.to_path_buf(),
            offsets: offsets.to_vec(),
            power,
        },
    );
    manifest.timing("load", t.elapsed().as_secs_f64());

    let t = Instant::now();
    for axis in [Axis::X, Axis::Y] {
        let mut rows = Vec::new();
        for &offset in offsets {
            for (s, v) in cross_section(&phi, axis, offset)? {
                rows.push(vec![real(offset), real(s), real(v)]);
            }
        }
        let path = out.join(format!("section_{}.csv", axis.as_str()));
        let coord = match axis {
            Axis::X => "x",
            Axis::Y => "y",
        };
        write_csv(&path, &["offset", coord, "phi"], rows).at(&path)?;
        manifest.output(&format!("section-{}", axis.as_str()), &path);
    }

    let sym = symmetry_report(&phi);
    let sym_path = out.join("symmetry.txt");
    write_key_values(
        &sym_path,
        &[
            ("x_defect".into(), real(sym.x_defect)),
            ("y_defect".into(), real(sym.y_defect)),
        ],
    )
    .at(&sym_path)?;
    manifest.output("symmetry", &sym_path);

    let mut plateau_pairs = Vec::new();
    for axis in [Axis::X, Axis::Y] {
        let profile = decay_profile_with_power(&phi, axis, power);
        let path = out.join(format!("decay_{}.csv", axis.as_str()));
        let rows = profile
            .radii
            .iter()
            .zip(&profile.products)
            .map(|(r, p)| vec![real(*r), real(*p)]);
        write_csv(&path, &["r", "r_pow_phi"], rows).at(&path)?;
        manifest.output(&format!("decay-{}", axis.as_str()), &path);
        let a = axis.as_str();
        plateau_pairs.push((format!("plateau_{a}"), real(profile.plateau_value)));
        plateau_pairs.push((format!("plateau_variation_{a}"), real(profile.plateau_rel_variation)));
    }
    manifest.timing("sections", t.elapsed().as_secs_f64());

    let t = Instant::now();
    let branch = Branch::from_sigma(meta.sigma)?;
    let params = SymbolParams {
        branch,
        ..SymbolParams::new(meta.alpha, meta.c)
    };
    let f = functionals(&phi, meta.alpha)?;
    let mut pairs = vec![
        ("alpha".to_string(), real(meta.alpha)),
        ("c".into(), real(meta.c)),
        ("sigma".into(), real(meta.sigma)),
        ("max_abs".into(), real(phi.max_abs())),
        ("residual".into(), real(residual(&phi, &params)?)),
        ("l_value".into(), real(f.l_value)),
        ("n_value".into(), real(f.n_value)),
        ("energy_norm".into(), real(f.energy_norm)),
        ("sobolev_ratio".into(), real(f.sobolev_ratio)),
        ("dc_mode".into(), real(f.dc_mode)),
        ("fourier_tail".into(), real(fourier_tail(&phi))),
    ];
    pairs.extend(plateau_pairs);
    let fun_path = out.join("functionals.txt");
    write_key_values(&fun_path, &pairs).at(&fun_path)?;
    manifest.output("functionals", &fun_path);
    manifest.timing("functionals", t.elapsed().as_secs_f64());

    let manifest_path = out.join("manifest.json");
    manifest.write(&manifest_path).at(&manifest_path)?;
    println!(
        "symmetry defects {:.3e} {:.3e}; wrote {}",
        sym.x_defect,
        sym.y_defect,
        out.display()
    );
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct ProbeConfig {
    alpha: Vec<f64>,
    p: Vec<f64>,
    which: String,
    out: PathBuf,
}

pub fn kernel_probe(alphas: &[f64], ps: &[f64], which: &str, out: &Path) -> Result<u8, CliError> {
    let kind = match which {
        "m" => SymbolKind::M,
        "h" => SymbolKind::H,
        other => return Err(ConfigError::new("which", format!("`{other}` is not m or h")).into()),
    };
    for &p in ps {
        if !(p.is_finite() && p > 0.5) {
            return Err(ConfigError::new("p", format!("{p} must exceed 1/2")).into());
        }
    }
    for &a in alphas {
        if !(a.is_finite() && a > 0.0) {
            return Err(ConfigError::new("alpha", format!("{a} must be positive")).into());
        }
    }
    prepare_dir(out)?;
    let mut manifest = RunManifest::new(
        "kernel-probe",
        ProbeConfig {
            alpha: alphas.to_vec(),
            p: ps.to_vec(),
            which: which.to_string(),
            out: out.to_path_buf(),
        },
    );
    let t = Instant::now();
    let (mut summary, mut norms) = (Vec::new(), Vec::new());
    for &alpha in alphas {
        for &p in ps {
            let probe = integrability_probe(alpha, p, kind)?;
            let last = probe.truncation_radii.len() - 1;
            println!(
                "{} alpha={alpha} p={p}: increment {:.3e} -> {}",
                kind.as_str(),
                probe.last_increment,
                probe.verdict.as_str()
            );
            summary.push(vec![
                real(alpha),
                real(p),
                kind.as_str().to_string(),
                real(probe.truncation_radii[last]),
                real(probe.truncated_norms[last]),
                real(probe.separated_norms[last]),
                real(probe.last_increment),
                real(probe.route_gap),
                probe.verdict.as_str().to_string(),
            ]);
            for i in 0..=last {
                norms.push(vec![
                    real(alpha),
                    real(p),
                    kind.as_str().to_string(),
                    real(probe.truncation_radii[i]),
                    real(probe.truncated_norms[i]),
                    real(probe.separated_norms[i]),
                ]);
            }
        }
    }
    manifest.timing("probe", t.elapsed().as_secs_f64());
    let path = out.join("probe.csv");
    write_csv(
        &path,
        &[
            "alpha",
            "p",
            "which",
            "radius",
            "truncated_norm",
            "separated_norm",
            "last_increment",
            "route_gap",
            "verdict",
        ],
        summary,
    )
    .at(&path)?;
    manifest.output("probe", &path);
    let path = out.join("probe_norms.csv");
    write_csv(&path, &["alpha", "p", "which", "radius", "truncated_norm", "separated_norm"], norms).at(&path)?;
    manifest.output("probe-norms", &path);
    let manifest_path = out.join("manifest.json");
    manifest.write(&manifest_path).at(&manifest_path)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct ReferenceConfig {
    c: f64,
    n: usize,
    l: f64,
    out: PathBuf,
}

pub fn reference(c: f64, n: usize, l: f64, out: &Path) -> Result<u8, CliError> {
    let grid = SpectralGrid::square(n, l).map_err(|e| match e {
        FkpError::InvalidGrid(r) if r.starts_with("lx") => CliError::Config(ConfigError::new("l", r)),
        FkpError::InvalidGrid(r) => CliError::Config(ConfigError::new("n", r)),
        other => other.into(),
    })?;
    let t = Instant::now();
    let phi = exact_kp1_lump(&grid, &ExactLumpParams::new(c))?;
    prepare_dir(out)?;
    let mut manifest = RunManifest::new(
        "reference",
        ReferenceConfig {
            c,
            n,
            l,
            out: out.to_path_buf(),
        },
    );
    let path = out.join("exact_kp1.fkpl");
    save_field(
        &path,
        &phi,
        &FieldMeta {
            alpha: 2.0,
            c,
            sigma: -1.0,
        },
    )?;
    manifest.output("field", &path);
    manifest.timing("build", t.elapsed().as_secs_f64());
    let manifest_path = out.join("manifest.json");
    manifest.write(&manifest_path).at(&manifest_path)?;
    println!("wrote {}", path.display());
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct StudyConfig {
    run: ResolvedRun,
    l_list: Vec<f64>,
    dx: f64,
    reference: String,
}

struct StudyRow {
    l: f64,
    n: usize,
    iterations: usize,
    status: SolveStatus,
    residual: f64,
    phi: RealField,
}

/// Largest nodal deviation of `phi` from `reference`, sampled at the nodes of `phi`.
fn deviation(phi: &RealField, reference: &dyn Fn(f64, f64) -> Result<f64, FkpError>) -> Result<f64, FkpError> {
    let g = phi.grid();
    let mut worst = 0.0_f64;
    for iy in 0..g.ny() {
        for ix in 0..g.nx() {
            worst = worst.max((phi.get(ix, iy) - reference(g.x(ix), g.y(iy))?).abs());
        }
    }
    Ok(worst)
}

pub fn convergence_study(raw: &RawConfig, l_list: &[f64], dx: f64) -> Result<u8, CliError> {
    let base = resolve(raw)?;
    if !(dx.is_finite() && dx > 0.0) {
        return Err(ConfigError::new("dx", "must be positive").into());
    }
    let mut sizes = Vec::with_capacity(l_list.len());
    for &l in l_list {
        let n = (2.0 * l / dx).round();
        if !(l.is_finite() && l > 0.0) || (n * dx - 2.0 * l).abs() > 1e-9 * l {
            return Err(ConfigError::new("l-list", format!("2·{l} is not a multiple of dx = {dx}")).into());
        }
        let n = n as usize;
        if n < 8 || !n.is_power_of_two() {
            return Err(ConfigError::new("l-list", format!("l = {l} needs n = {n}, not a power of two")).into());
        }
        sizes.push((l, n));
    }
    let exact = base.alpha == 2.0;
    prepare_dir(&base.out)?;
    let mut manifest = RunManifest::new(
        "convergence-study",
        StudyConfig {
            run: base.clone(),
            l_list: l_list.to_vec(),
            dx,
            reference: if exact { "exact-kp1" } else { "largest-domain" }.to_string(),
        },
    );

    let mut rows = Vec::new();
    for &(l, n) in &sizes {
        let run = ResolvedRun { n, l, ..base.clone() };
        let cfg = run.solver_config()?;
        let t = Instant::now();
        let (phi, report) = run_solver(&cfg)?;
        manifest.timing(&format!("solve-l{l}"), t.elapsed().as_secs_f64());
        rows.push(StudyRow {
            l,
            n,
            iterations: report.iterations(),
            status: report.status,
            residual: report.last().map_or(f64::NAN, |r| r.residual),
            phi,
        });
    }

    let lump = ExactLumpParams::new(base.c);
    let widest = rows
        .iter()
        .max_by(|a, b| a.l.total_cmp(&b.l))
        .map(|r| r.phi.clone());
    let mut table = Vec::new();
    let mut code = EXIT_OK;
    println!("{:>10} {:>6} {:>6} {:>10} {:>12} {:>12}", "l", "n", "iter", "status", "residual", "error");
    for row in &rows {
        let error = if exact {
            deviation(&row.phi, &|x, y| Ok(fkp_core::reference::exact_kp1_value(x, y, &lump)))?
        } else {
            let widest = widest.as_ref().expect("at least one run");
            deviation(&row.phi, &|x, y| interpolate(widest, x, y))?
        };
        println!(
            "{:>10} {:>6} {:>6} {:>10} {:>12.4e} {:>12.4e}",
            row.l,
            row.n,
            row.iterations,
            row.status.as_str(),
            row.residual,
            error
        );
        code = code.max(status_code(row.status));
        table.push(vec![
            real(row.l),
            row.n.to_string(),
            row.iterations.to_string(),
            row.status.as_str().to_string(),
            real(row.residual),
            real(error),
        ]);
    }
    let path = base.out.join("convergence.csv");
    write_csv(&path, &["l", "n", "iterations", "status", "residual", "error"], table).at(&path)?;
    manifest.output("convergence-table", &path);
    manifest.status = match code {
        EXIT_OK => "converged",
        EXIT_MAX_ITER => "max-iter",
        _ => "diverged",
    }
    .to_string();
    let manifest_path = base.out.join("manifest.json");
    manifest.write(&manifest_path).at(&manifest_path)?;
    Ok(code)
}
