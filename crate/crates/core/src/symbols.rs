//! Fourier multipliers on a grid's wavenumber lattice.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{FkpError, Result};
use crate::grid::{forward_transform, inverse_to_real, wavenumbers, Fft2d, RealField, SpectralGrid};

/// Regularization of `1/ξ1` at `ξ1 = 0`.
pub const DEFAULT_LAMBDA: f64 = 2.2e-16;

/// Lumps in the energy space exist only above this dispersion order.
pub const ENERGY_CRITICAL_ALPHA: f64 = 0.8;

/// Sign of the transverse term: fKP-I (`σ = -1`) or fKP-II (`σ = +1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    KpI,
    KpII,
}

impl Branch {
    pub fn sigma(self) -> f64 {
        match self {
            Branch::KpI => -1.0,
            Branch::KpII => 1.0,
        }
    }

    pub fn from_sigma(sigma: f64) -> Result<Self> {
        if sigma == -1.0 {
            Ok(Branch::KpI)
        } else if sigma == 1.0 {
            Ok(Branch::KpII)
        } else {
            Err(FkpError::config("sigma", format!("{sigma} is not ±1")))
        }
    }
}

/// Equation parameters shared by every multiplier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolParams {
    pub alpha: f64,
    pub c: f64,
    pub branch: Branch,
    pub lambda: f64,
}

impl SymbolParams {
    /// fKP-I with the default regularization.
    pub fn new(alpha: f64, c: f64) -> Self {
        Self {
            alpha,
            c,
            branch: Branch::KpI,
            lambda: DEFAULT_LAMBDA,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(FkpError::config("alpha", "must be positive"));
        }
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(FkpError::config("c", "must be positive"));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(FkpError::config("lambda", "must be positive"));
        }
        Ok(())
    }
}

/// Lattice samples of a multiplier, in transform order.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierField {
    grid: SpectralGrid,
    values: Vec<Complex64>,
}

impl MultiplierField {
    /// Evaluates `f(ξ1, ξ2)` on the lattice.
    pub fn from_fn(grid: SpectralGrid, f: impl Fn(f64, f64) -> Complex64 + Sync) -> Self {
        let (xi1, xi2) = wavenumbers(&grid);
        let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
        values
            .par_chunks_mut(grid.nx())
            .zip(xi2.par_iter())
            .for_each(|(row, &k2)| {
                for (v, &k1) in row.iter_mut().zip(&xi1) {
                    *v = f(k1, k2);
                }
            });
        Self { grid, values }
    }

    pub(crate) fn from_real_fn(grid: SpectralGrid, f: impl Fn(f64, f64) -> f64 + Sync) -> Self {
        Self::from_fn(grid, |a, b| Complex64::new(f(a, b), 0.0))
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Value at signed mode indices.
    pub fn get(&self, k1: i64, k2: i64) -> Complex64 {
        let g = &self.grid;
        self.values[g.index(crate::grid::slot(k1, g.nx()), crate::grid::slot(k2, g.ny()))]
    }

    pub fn recip(&self) -> MultiplierField {
        MultiplierField {
            grid: self.grid,
            values: self.values.iter().map(|v| v.inv()).collect(),
        }
    }

    pub fn scaled(&self, s: Complex64) -> MultiplierField {
        MultiplierField {
            grid: self.grid,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    pub fn product(&self, other: &MultiplierField) -> Result<MultiplierField> {
        if self.grid != other.grid {
            return Err(FkpError::GridMismatch("multiplier product".into()));
        }
        Ok(MultiplierField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }

    /// Zeroes the unpaired Nyquist row and column. Needed for symbols that are
    /// odd in either variable, whose Nyquist samples have no mirror partner.
    pub fn without_nyquist(mut self) -> MultiplierField {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        for (i, v) in self.values.iter_mut().enumerate() {
            if i % nx == nx / 2 || i / nx == ny / 2 {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        self
    }

    /// Zeroes the unpaired Nyquist column only, for symbols odd in `ξ1` and
    /// even in `ξ2`.
    pub fn without_nyquist_column(mut self) -> MultiplierField {
        let nx = self.grid.nx();
        for (i, v) in self.values.iter_mut().enumerate() {
            if i % nx == nx / 2 {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        self
    }
}

/// `2(c + ξ2²/(ξ1+iλ)² + |ξ1|^α)` at one wavenumber.
#[inline]
pub fn denominator_at(xi1: f64, xi2: f64, p: &SymbolParams) -> Complex64 {
    let shifted = Complex64::new(xi1, p.lambda);
    2.0 * (p.c + xi2 * xi2 / (shifted * shifted) + xi1.abs().powf(p.alpha))
}

/// `ξ1² / (|ξ|² + |ξ1|^(α+2))`, continued by 1 at the origin (its limit along
/// `ξ2 = 0`, matching the Petviashvili denominator at `c = 1`).
#[inline]
pub fn m_at(xi1: f64, xi2: f64, alpha: f64) -> f64 {
    if xi1 == 0.0 {
        return if xi2 == 0.0 { 1.0 } else { 0.0 };
    }
    let a = xi1 * xi1;
    a / (a + xi2 * xi2 + xi1.abs().powf(alpha + 2.0))
}

/// `ξ1 / (|ξ|² + |ξ1|^(α+2))`, zero on the line `ξ1 = 0`.
#[inline]
pub fn h_at(xi1: f64, xi2: f64, alpha: f64) -> f64 {
    if xi1 == 0.0 {
        return 0.0;
    }
    xi1 / (xi1 * xi1 + xi2 * xi2 + xi1.abs().powf(alpha + 2.0))
}

pub(crate) fn require_kp1(p: &SymbolParams) -> Result<()> {
    match p.branch {
        Branch::KpI => Ok(()),
        Branch::KpII => Err(FkpError::UnsupportedEquation(
            "fKP-II (sigma = +1) has no nontrivial lumps in the energy space".into(),
        )),
    }
}

/// Denominator of the Petviashvili update.
pub fn petviashvili_denominator(grid: &SpectralGrid, p: &SymbolParams) -> Result<MultiplierField> {
    p.validate()?;
    require_kp1(p)?;
    Ok(MultiplierField::from_fn(*grid, |a, b| denominator_at(a, b, p)))
}

/// Symbol of the convolution kernel `K_α`.
pub fn symbol_m(grid: &SpectralGrid, alpha: f64) -> MultiplierField {
    MultiplierField::from_real_fn(*grid, |a, b| m_at(a, b, alpha))
}

/// Symbol of the kernel `H_α`.
pub fn symbol_h(grid: &SpectralGrid, alpha: f64) -> MultiplierField {
    MultiplierField::from_real_fn(*grid, |a, b| h_at(a, b, alpha))
}

/// Riesz potential `D_x^s`, symbol `|ξ1|^s`.
pub fn riesz(grid: &SpectralGrid, order: f64) -> MultiplierField {
    MultiplierField::from_real_fn(*grid, |a, _| a.abs().powf(order))
}

/// `∂x⁻¹∂y`, symbol `ξ2/(ξ1 + iλ)`, with the Nyquist lines removed.
pub fn inverse_dx_dy(grid: &SpectralGrid, lambda: f64) -> MultiplierField {
    MultiplierField::from_fn(*grid, |a, b| b / Complex64::new(a, lambda)).without_nyquist()
}

/// `∂x`, symbol `iξ1`, with the Nyquist column removed.
pub fn dx(grid: &SpectralGrid) -> MultiplierField {
    MultiplierField::from_fn(*grid, |a, _| Complex64::new(0.0, a)).without_nyquist_column()
}

/// `inverse(m ⊙ forward(f))`.
pub fn apply_multiplier(f: &RealField, m: &MultiplierField) -> Result<RealField> {
    if f.grid() != m.grid() {
        return Err(FkpError::GridMismatch(format!(
            "field on {:?}, multiplier on {:?}",
            f.grid(),
            m.grid()
        )));
    }
    let mut coeffs = forward_transform(f).into_coeffs();
    coeffs
        .par_iter_mut()
        .zip(m.values.par_iter())
        .for_each(|(c, s)| *c *= s);
    inverse_to_real(f.grid(), coeffs, &Fft2d::for_grid(f.grid()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn denominator_point_values() {
        let p = SymbolParams::new(2.0, 1.0);
        assert!((denominator_at(1.0, 0.0, &p) - Complex64::new(4.0, 0.0)).norm() < 1e-14);
        for alpha in [0.9, 1.5, 2.0] {
            let d = denominator_at(0.0, 0.0, &SymbolParams::new(alpha, 1.0));
            assert_eq!(d, Complex64::new(2.0, 0.0));
        }
        let d = denominator_at(1.0, 2.0, &SymbolParams::new(1.0, 1.0));
        assert!((d - Complex64::new(12.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn denominator_rejects_kp2() {
        let g = SpectralGrid::square(8, 1.0).unwrap();
        let mut p = SymbolParams::new(2.0, 1.0);
        p.branch = Branch::KpII;
        assert!(matches!(
            petviashvili_denominator(&g, &p),
            Err(FkpError::UnsupportedEquation(_))
        ));
    }

    #[test]
    fn denominator_bounded_below_and_nearly_real() {
        let g = SpectralGrid::square(64, 16.0).unwrap();
        for alpha in [0.9, 1.35, 2.0] {
            let p = SymbolParams::new(alpha, 1.5);
            let d = petviashvili_denominator(&g, &p).unwrap();
            let max_mod = d.values().iter().fold(0.0_f64, |m, v| m.max(v.norm()));
            let max_im = d.values().iter().fold(0.0_f64, |m, v| m.max(v.im.abs()));
            let min_mod = d.values().iter().fold(f64::INFINITY, |m, v| m.min(v.norm()));
            assert!(min_mod >= 2.0 * 1.5 * (1.0 - 1e-12));
            assert!(max_im <= 1e-12 * max_mod);
        }
    }

    #[test]
    fn m_and_h_point_values() {
        assert!((m_at(1.0, 0.0, 2.0) - 0.5).abs() < 1e-15);
        assert!((m_at(2.0, 0.0, 1.0) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(m_at(0.0, 3.0, 1.3), 0.0);
        assert!((h_at(1.0, 0.0, 2.0) - 0.5).abs() < 1e-15);
        assert!((h_at(1.0, 1.0, 1.0) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(h_at(0.0, 3.0, 1.3), 0.0);
    }

    #[test]
    fn lattice_parities() {
        let g = SpectralGrid::new(16, 32, 3.0, 5.0).unwrap();
        let m = symbol_m(&g, 1.4);
        let h = symbol_h(&g, 1.4);
        let d = petviashvili_denominator(&g, &SymbolParams::new(1.4, 1.0)).unwrap();
        for k2 in -15..16 {
            for k1 in -7..8 {
                assert_eq!(m.get(k1, k2), m.get(-k1, k2));
                assert_eq!(m.get(k1, k2), m.get(k1, -k2));
                assert_eq!(h.get(k1, k2), -h.get(-k1, k2));
                assert_eq!(h.get(k1, k2), h.get(k1, -k2));
                assert_eq!(d.get(k1, k2), d.get(k1, -k2));
                assert!((d.get(k1, k2) - d.get(-k1, k2).conj()).norm() <= 1e-12 * d.get(k1, k2).norm());
                let v = m.get(k1, k2).re;
                assert!((0.0..=1.0).contains(&v));
            }
            assert_eq!(m.get(0, k2).re, if k2 == 0 { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn identity_and_eigenfunction() {
        let g = SpectralGrid::square(32, PI).unwrap();
        let f = RealField::from_fn(g, |x, y| (x.sin() + 0.3 * (2.0 * y).cos()).exp()).unwrap();
        let one = MultiplierField::from_real_fn(g, |_, _| 1.0);
        assert!(apply_multiplier(&f, &one).unwrap().max_abs_diff(&f).unwrap() < 1e-12 * f.max_abs());

        let c = RealField::from_fn(g, |x, _| x.cos()).unwrap();
        let out = apply_multiplier(&c, &riesz(&g, 2.0)).unwrap();
        assert!(out.max_abs_diff(&c).unwrap() < 1e-12);
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let a = SpectralGrid::square(8, 1.0).unwrap();
        let b = SpectralGrid::square(16, 1.0).unwrap();
        let f = RealField::zeros(a);
        assert!(matches!(
            apply_multiplier(&f, &symbol_m(&b, 2.0)),
            Err(FkpError::GridMismatch(_))
        ));
    }

    #[test]
    fn inverse_dx_dy_is_real_operator() {
        let g = SpectralGrid::square(32, 8.0).unwrap();
        let f = RealField::from_fn(g, |x, y| x * (-(x * x + 2.0 * y * y) / 4.0).exp()).unwrap();
        // a zero-mass field maps to a real field; the symbol itself is exactly
        // conjugate-symmetric once the Nyquist lines are gone
        assert!(apply_multiplier(&f, &inverse_dx_dy(&g, DEFAULT_LAMBDA)).is_ok());
    }
}
