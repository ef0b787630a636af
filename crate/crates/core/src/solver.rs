//! Petviashvili fixed-point iteration for steady fKP-I lumps.
//!
//! One step maps `φ_n` to
//! `φ̂_{n+1} = M_n^ν · (φ_n²)^ / (2(c + ξ2²/(ξ1+iλ)² + |ξ1|^α))`, where the
//! stabilizing factor `M_n` is the ratio of the quadratic pairing
//! `⟨denominator·φ̂, φ̂⟩` to the cubic pairing `⟨(φ²)^, φ̂⟩`. `M_n → 1` at a
//! solution; the power `ν` suppresses the amplitude mode that makes the plain
//! iteration blow up or collapse.

use std::path::PathBuf;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{FkpError, Result};
use crate::fieldfile::load_field;
use crate::grid::{inverse_real_part, inverse_to_real, signed_index, to_complex, wavenumbers, Fft2d, RealField, SpectralGrid};
use crate::reference::{exact_kp1_lump, gaussian_seed, ExactLumpParams};
use crate::symbols::{denominator_at, require_kp1, SymbolParams, ENERGY_CRITICAL_ALPHA};

/// Iterates whose sup norm exceeds this multiple of `c` are treated as blow-up.
pub const BLOWUP_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub enum SeedKind {
    Gaussian,
    ExactKp1,
    File(PathBuf),
}

/// Initial guess for the iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedSpec {
    pub kind: SeedKind,
    /// Defaults to `3c` when unset.
    pub amplitude: Option<f64>,
    pub width: f64,
}

impl Default for SeedSpec {
    fn default() -> Self {
        Self {
            kind: SeedKind::Gaussian,
            amplitude: None,
            width: 2.0,
        }
    }
}

impl SeedSpec {
    pub fn amplitude_for(&self, c: f64) -> f64 {
        self.amplitude.unwrap_or(3.0 * c)
    }

    pub fn build(&self, grid: &SpectralGrid, c: f64) -> Result<RealField> {
        match &self.kind {
            SeedKind::Gaussian => gaussian_seed(grid, self.amplitude_for(c), self.width),
            SeedKind::ExactKp1 => exact_kp1_lump(grid, &ExactLumpParams::new(c)),
            SeedKind::File(path) => {
                let (field, _) = load_field(path)?;
                if field.grid() != grid {
                    return Err(FkpError::GridMismatch(format!(
                        "seed file {} is on {:?}, solver grid is {:?}",
                        path.display(),
                        field.grid(),
                        grid
                    )));
                }
                Ok(field)
            }
        }
    }
}

/// Everything that defines one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub params: SymbolParams,
    pub grid: SpectralGrid,
    pub nu: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: SeedSpec,
    /// Permits `α ≤ 4/5`, where no lump exists in the energy space.
    pub allow_supercritical: bool,
    /// Form `φ²` on a 3/2-padded grid instead of pointwise on the base grid.
    pub dealias: bool,
}

impl SolverConfig {
    pub fn new(grid: SpectralGrid, params: SymbolParams) -> Self {
        Self {
            params,
            grid,
            nu: 2.0,
            tol: 1e-5,
            max_iter: 200,
            seed: SeedSpec::default(),
            allow_supercritical: false,
            dealias: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        require_kp1(&self.params)?;
        if !self.allow_supercritical && self.params.alpha <= ENERGY_CRITICAL_ALPHA {
            return Err(FkpError::config(
                "alpha",
                format!(
                    "{} <= 4/5: no lump solutions exist (pass allow-supercritical to iterate anyway)",
                    self.params.alpha
                ),
            ));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(FkpError::config("tol", "must be positive"));
        }
        if self.max_iter == 0 {
            return Err(FkpError::config("max-iter", "must be at least 1"));
        }
        if !self.nu.is_finite() {
            return Err(FkpError::config("nu", "must be finite"));
        }
        if !(self.seed.width.is_finite() && self.seed.width > 0.0) {
            return Err(FkpError::config("seed-width", "must be positive"));
        }
        if let Some(a) = self.seed.amplitude {
            if !a.is_finite() || a == 0.0 {
                return Err(FkpError::config("seed-amplitude", "must be finite and nonzero"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    /// `‖φ_n − φ_{n−1}‖∞`
    pub iter_error: f64,
    /// `M_n`
    pub m_factor: f64,
    /// `|1 − M_n|`
    pub factor_error: f64,
    /// `‖Sφ_n‖∞`
    pub residual: f64,
}

impl IterationRecord {
    /// Largest of the three monitors; infinite when any of them is NaN.
    pub fn worst(&self) -> f64 {
        let values = [self.iter_error, self.factor_error, self.residual];
        if values.iter().any(|v| v.is_nan()) {
            return f64::INFINITY;
        }
        values.into_iter().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIter,
    Diverged,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIter => "max-iter",
            SolveStatus::Diverged => "diverged",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationReport {
    pub records: Vec<IterationRecord>,
    pub status: SolveStatus,
}

impl IterationReport {
    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    pub fn iterations(&self) -> usize {
        self.records.len()
    }
}

/// Spectral data of one iterate, reused for the monitors and the next step.
struct Iterate {
    phi: RealField,
    square_hat: Vec<Complex64>,
    m_factor: f64,
    residual: f64,
}

/// Cached transforms and symbols for a fixed grid and parameter set.
pub(crate) struct PetviashviliOperator {
    grid: SpectralGrid,
    params: SymbolParams,
    fft: Fft2d,
    denominator: Vec<Complex64>,
    /// Excluded from the stabilizing factor: the line `ξ1 = 0, ξ2 ≠ 0`.
    zero_mass_line: Vec<bool>,
    xi1_sq: Vec<f64>,
    xi2_sq: Vec<f64>,
    dispersion: Vec<f64>,
    padding: Option<Padding>,
}

impl PetviashviliOperator {
    pub(crate) fn new(grid: SpectralGrid, params: SymbolParams, dealias: bool) -> Result<Self> {
        params.validate()?;
        require_kp1(&params)?;
        let (xi1, xi2) = wavenumbers(&grid);
        let n = grid.len();
        let mut denominator = Vec::with_capacity(n);
        let mut zero_mass_line = Vec::with_capacity(n);
        for &b in &xi2 {
            for &a in &xi1 {
                denominator.push(denominator_at(a, b, &params));
                zero_mass_line.push(a == 0.0 && b != 0.0);
            }
        }
        Ok(Self {
            grid,
            params,
            fft: Fft2d::for_grid(&grid),
            denominator,
            zero_mass_line,
            xi1_sq: xi1.iter().map(|a| a * a).collect(),
            xi2_sq: xi2.iter().map(|b| b * b).collect(),
            dispersion: xi1.iter().map(|a| a.abs().powf(params.alpha)).collect(),
            padding: dealias.then(|| Padding::new(&grid)),
        })
    }

    fn analyze(&self, phi: RealField) -> Result<Iterate> {
        if phi.grid() != &self.grid {
            return Err(FkpError::GridMismatch("iterate grid differs from solver grid".into()));
        }
        let mut phi_hat = to_complex(phi.values());
        self.fft.forward(&mut phi_hat);
        let square_hat = match &self.padding {
            Some(p) => p.square(&phi_hat, &self.grid),
            None => {
                let mut sq: Vec<Complex64> =
                    phi.values().iter().map(|v| Complex64::new(v * v, 0.0)).collect();
                self.fft.forward(&mut sq);
                sq
            }
        };
        let m_factor = self.stabilizing_ratio(&phi_hat, &square_hat)?;
        let residual = self.residual_from(&phi_hat, &square_hat)?;
        Ok(Iterate {
            phi,
            square_hat,
            m_factor,
            residual,
        })
    }

    fn stabilizing_ratio(&self, phi_hat: &[Complex64], square_hat: &[Complex64]) -> Result<f64> {
        let mut quad = Complex64::new(0.0, 0.0);
        let mut cubic = Complex64::new(0.0, 0.0);
        let mut cubic_scale = 0.0;
        for k in 0..phi_hat.len() {
            let p = phi_hat[k];
            if !self.zero_mass_line[k] {
                quad += self.denominator[k] * p.norm_sqr();
            }
            cubic += square_hat[k] * p.conj();
            cubic_scale += square_hat[k].norm() * p.norm();
        }
        if cubic.norm().is_nan() || cubic.norm() <= 1e-12 * cubic_scale {
            return Err(FkpError::DegenerateIterate(format!(
                "cubic pairing {:.3e} vanishes relative to its scale {:.3e}",
                cubic.norm(),
                cubic_scale
            )));
        }
        let m = quad / cubic;
        if m.im.abs() > 1e-8 * m.norm() {
            return Err(FkpError::DegenerateIterate(format!(
                "stabilizing factor is not real: {m}"
            )));
        }
        Ok(m.re)
    }

    /// `‖S φ‖∞` with `Ŝ = −ξ1²·F(−cφ + φ²/2 − D^α φ) + ξ2² φ̂`.
    fn residual_from(&self, phi_hat: &[Complex64], square_hat: &[Complex64]) -> Result<f64> {
        let nx = self.grid.nx();
        let c = self.params.c;
        let mut s = vec![Complex64::new(0.0, 0.0); phi_hat.len()];
        s.par_chunks_mut(nx).enumerate().for_each(|(k2, row)| {
            let b2 = self.xi2_sq[k2];
            for (k1, v) in row.iter_mut().enumerate() {
                let k = k2 * nx + k1;
                let inner = -c * phi_hat[k] + 0.5 * square_hat[k] - self.dispersion[k1] * phi_hat[k];
                *v = -self.xi1_sq[k1] * inner + b2 * phi_hat[k];
            }
        });
        Ok(inverse_real_part(&self.grid, s, &self.fft)?.max_abs())
    }

    fn step(&self, it: &Iterate, nu: f64) -> Result<RealField> {
        let gain = it.m_factor.powf(nu);
        if !gain.is_finite() {
            return Err(FkpError::Divergence(format!("M^ν = {gain}")));
        }
        let next: Vec<Complex64> = it
            .square_hat
            .par_iter()
            .zip(self.denominator.par_iter())
            .map(|(s, d)| gain * s / d)
            .collect();
        if next.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(FkpError::Divergence("non-finite spectral coefficients".into()));
        }
        inverse_to_real(&self.grid, next, &self.fft).map_err(|e| match e {
            FkpError::InvalidField(msg) => FkpError::Divergence(msg),
            other => other,
        })
    }
}

/// 3/2 zero-padding for the quadratic product.
struct Padding {
    fine_nx: usize,
    fine_ny: usize,
    fft: Fft2d,
}

impl Padding {
    fn new(grid: &SpectralGrid) -> Self {
        let fine_nx = grid.nx() * 3 / 2;
        let fine_ny = grid.ny() * 3 / 2;
        Self {
            fine_nx,
            fine_ny,
            fft: Fft2d::new(fine_nx, fine_ny),
        }
    }

    /// Fine slots holding coarse signed index `k`; the coarse Nyquist mode is
    /// split evenly over `±n/2`.
    fn targets(k: usize, n: usize, fine: usize) -> Vec<(usize, f64)> {
        let s = signed_index(k, n);
        if s == -(n as i64) / 2 {
            vec![(fine - n / 2, 0.5), (n / 2, 0.5)]
        } else {
            vec![(s.rem_euclid(fine as i64) as usize, 1.0)]
        }
    }

    fn square(&self, phi_hat: &[Complex64], grid: &SpectralGrid) -> Vec<Complex64> {
        let (nx, ny) = (grid.nx(), grid.ny());
        let (fx, fy) = (self.fine_nx, self.fine_ny);
        let up = (fx * fy) as f64 / (nx * ny) as f64;
        let mut fine = vec![Complex64::new(0.0, 0.0); fx * fy];
        for k2 in 0..ny {
            let t2 = Self::targets(k2, ny, fy);
            for k1 in 0..nx {
                let t1 = Self::targets(k1, nx, fx);
                let c = phi_hat[k2 * nx + k1] * up;
                for &(j2, w2) in &t2 {
                    for &(j1, w1) in &t1 {
                        fine[j2 * fx + j1] += c * (w1 * w2);
                    }
                }
            }
        }
        self.fft.inverse(&mut fine);
        for z in fine.iter_mut() {
            *z = Complex64::new(z.re * z.re, 0.0);
        }
        self.fft.forward(&mut fine);
        let down = 1.0 / up;
        let mut out = vec![Complex64::new(0.0, 0.0); nx * ny];
        for k2 in 0..ny {
            let t2 = Self::targets(k2, ny, fy);
            for k1 in 0..nx {
                let t1 = Self::targets(k1, nx, fx);
                let mut acc = Complex64::new(0.0, 0.0);
                for &(j2, _) in &t2 {
                    for &(j1, _) in &t1 {
                        acc += fine[j2 * fx + j1];
                    }
                }
                out[k2 * nx + k1] = acc * down;
            }
        }
        out
    }
}

/// `M` for a single field.
pub fn stabilizing_factor(phi: &RealField, p: &SymbolParams) -> Result<f64> {
    let op = PetviashviliOperator::new(*phi.grid(), *p, false)?;
    Ok(op.analyze(phi.clone())?.m_factor)
}

/// One Petviashvili update; returns the next iterate and the `M` used.
pub fn petviashvili_step(phi: &RealField, p: &SymbolParams, nu: f64) -> Result<(RealField, f64)> {
    let op = PetviashviliOperator::new(*phi.grid(), *p, false)?;
    let it = op.analyze(phi.clone())?;
    let next = op.step(&it, nu)?;
    Ok((next, it.m_factor))
}

/// Runs the iteration until `iter_error`, `|1 − M|` and the residual are all
/// below `tol`, the iteration budget is exhausted, or the iterate blows up.
///
/// Blow-up, and collapse to zero where `M` stops being finite, are reported
/// through [`SolveStatus::Diverged`] together with the last iterate; a seed
/// whose cubic pairing vanishes is an error.
pub fn solve(config: &SolverConfig) -> Result<(RealField, IterationReport)> {
    config.validate()?;
    let op = PetviashviliOperator::new(config.grid, config.params, config.dealias)?;
    let seed = config.seed.build(&config.grid, config.params.c)?;
    let mut current = op.analyze(seed)?;
    let mut records = Vec::new();
    let limit = BLOWUP_FACTOR * config.params.c;

    let mut status = SolveStatus::MaxIter;
    for n in 1..=config.max_iter {
        let next = match op.step(&current, config.nu) {
            Ok(f) if f.max_abs() <= limit => f,
            Ok(_) | Err(FkpError::Divergence(_)) => {
                status = SolveStatus::Diverged;
                break;
            }
            Err(e) => return Err(e),
        };
        let iter_error = next.max_abs_diff(&current.phi)?;
        let it = op.analyze(next)?;
        let record = IterationRecord {
            iter: n,
            iter_error,
            m_factor: it.m_factor,
            factor_error: (1.0 - it.m_factor).abs(),
            residual: it.residual,
        };
        records.push(record);
        current = it;
        if !record.m_factor.is_finite() {
            status = SolveStatus::Diverged;
            break;
        }
        if record.worst() <= config.tol {
            status = SolveStatus::Converged;
            break;
        }
    }
    Ok((current.phi, IterationReport { records, status }))
}

/// `‖S φ‖∞` through the solver's own spectral path.
#[cfg(test)]
pub(crate) fn residual_via_operator(phi: &RealField, p: &SymbolParams) -> Result<f64> {
    let op = PetviashviliOperator::new(*phi.grid(), *p, false)?;
    Ok(op.analyze(phi.clone())?.residual)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(alpha: f64) -> SolverConfig {
        let grid = SpectralGrid::square(128, 32.0).unwrap();
        SolverConfig::new(grid, SymbolParams::new(alpha, 1.0))
    }

    #[test]
    fn validation() {
        let mut cfg = small(0.7);
        let err = cfg.validate().unwrap_err();
        assert!(matches!(err, FkpError::InvalidConfig { ref key, .. } if key == "alpha"));
        cfg.allow_supercritical = true;
        assert!(cfg.validate().is_ok());

        let mut cfg = small(2.0);
        cfg.params.branch = crate::symbols::Branch::KpII;
        assert!(matches!(cfg.validate(), Err(FkpError::UnsupportedEquation(_))));

        let mut cfg = small(2.0);
        cfg.tol = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = small(2.0);
        cfg.max_iter = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn odd_field_is_degenerate() {
        let g = SpectralGrid::square(64, 16.0).unwrap();
        let f = RealField::from_fn(g, |x, y| x * (-(x * x + y * y) / 4.0).exp()).unwrap();
        let err = petviashvili_step(&f, &SymbolParams::new(2.0, 1.0), 2.0).unwrap_err();
        assert!(matches!(err, FkpError::DegenerateIterate(_)), "{err}");
        let zero = RealField::zeros(g);
        assert!(stabilizing_factor(&zero, &SymbolParams::new(2.0, 1.0)).is_err());
    }

    #[test]
    fn factor_scales_inversely_with_amplitude() {
        let g = SpectralGrid::square(64, 16.0).unwrap();
        let p = SymbolParams::new(1.5, 1.0);
        let f = gaussian_seed(&g, 3.0, 2.0).unwrap();
        let m1 = stabilizing_factor(&f, &p).unwrap();
        let m2 = stabilizing_factor(&f.scaled(2.0), &p).unwrap();
        assert!((m2 - m1 / 2.0).abs() < 1e-12 * m1);
    }

    #[test]
    fn small_grid_converges_with_even_iterates() {
        let (phi, report) = solve(&small(2.0)).unwrap();
        assert_eq!(report.status, SolveStatus::Converged, "{:?}", report.last());
        let last = report.last().unwrap();
        assert!(last.worst() <= 1e-5);
        let g = *phi.grid();
        let n = g.nx();
        let mut defect: f64 = 0.0;
        for iy in 0..n {
            for ix in 0..n {
                let a = phi.get(ix, iy);
                defect = defect
                    .max((a - phi.get((n - ix) % n, iy)).abs())
                    .max((a - phi.get(ix, (n - iy) % n)).abs());
            }
        }
        assert!(defect <= 1e-10 * phi.max_abs());
    }

    #[test]
    fn max_iter_is_a_status() {
        let mut cfg = small(2.0);
        cfg.max_iter = 3;
        let (_, report) = solve(&cfg).unwrap();
        assert_eq!(report.status, SolveStatus::MaxIter);
        assert_eq!(report.iterations(), 3);
    }

    #[test]
    fn blowup_is_reported_as_divergence() {
        // without the stabilizing power the plain iteration runs away
        let mut cfg = small(2.0);
        cfg.nu = 0.0;
        cfg.seed.amplitude = Some(30.0);
        let (phi, report) = solve(&cfg).unwrap();
        assert_eq!(report.status, SolveStatus::Diverged);
        assert!(phi.values().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn collapse_to_zero_is_not_convergence() {
        let mut cfg = small(2.0);
        cfg.nu = 0.0;
        cfg.seed.amplitude = Some(0.5);
        let (_, report) = solve(&cfg).unwrap();
        assert_eq!(report.status, SolveStatus::Diverged);
        assert!(!report.last().unwrap().m_factor.is_finite());
    }

    #[test]
    fn nan_monitor_is_never_within_tolerance() {
        let r = IterationRecord {
            iter: 1,
            iter_error: 0.0,
            m_factor: f64::NAN,
            factor_error: f64::NAN,
            residual: 0.0,
        };
        assert_eq!(r.worst(), f64::INFINITY);
    }
}
