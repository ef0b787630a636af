//! Quality measures for a computed lump: the residual operator, the
//! variational functionals, the anisotropic Sobolev ratio and Fourier-tail
//! decay.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::Result;
use crate::grid::{
    forward_transform, inverse_real_part, signed_index, wavenumbers, Fft2d, RealField, SpectralGrid,
};
use crate::symbols::{apply_multiplier, riesz, MultiplierField, SymbolParams, DEFAULT_LAMBDA};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalValues {
    /// `L(φ) = ½∫ φ² + (D_x^{α/2}φ)² + (∂x⁻¹∂yφ)²`
    pub l_value: f64,
    /// `N(φ) = ⅙∫ φ³`
    pub n_value: f64,
    /// `‖φ‖_{α/2}`, computed by Parseval.
    pub energy_norm: f64,
    pub sobolev_ratio: f64,
    pub dc_mode: f64,
}

/// `‖Sφ‖∞` for `S = (−cφ + ½φ² − D_x^αφ)_xx + σ φ_yy`.
///
/// The nonlinear and dispersive parts are formed in physical space and only
/// the outer derivatives are applied spectrally.
pub fn residual(phi: &RealField, p: &SymbolParams) -> Result<f64> {
    p.validate()?;
    let grid = *phi.grid();
    let dispersed = apply_multiplier(phi, &riesz(&grid, p.alpha))?;
    let inner: Vec<f64> = phi
        .values()
        .iter()
        .zip(dispersed.values())
        .map(|(&f, &d)| -p.c * f + 0.5 * f * f - d)
        .collect();
    let inner_hat = forward_transform(&RealField::new(grid, inner)?).into_coeffs();
    let phi_hat = forward_transform(phi).into_coeffs();
    let (xi1, xi2) = wavenumbers(&grid);
    let sigma = p.branch.sigma();
    let nx = grid.nx();
    let s: Vec<Complex64> = (0..grid.len())
        .map(|k| {
            let (a, b) = (xi1[k % nx], xi2[k / nx]);
            -(a * a) * inner_hat[k] - sigma * b * b * phi_hat[k]
        })
        .collect();
    Ok(inverse_real_part(&grid, s, &Fft2d::for_grid(&grid))?.max_abs())
}

/// `ξ2/(ξ1 + iλ)` off the line `ξ1 = 0` and zero on it, with the Nyquist
/// lines removed.
fn transverse_symbol(grid: &SpectralGrid) -> MultiplierField {
    MultiplierField::from_fn(*grid, |a, b| {
        if a == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            b / Complex64::new(a, DEFAULT_LAMBDA)
        }
    })
    .without_nyquist()
}

fn l2_sq(f: &RealField) -> f64 {
    f.integrate(|v| v * v)
}

pub fn functionals(phi: &RealField, alpha: f64) -> Result<FunctionalValues> {
    let grid = *phi.grid();
    let half_dispersion = apply_multiplier(phi, &riesz(&grid, alpha / 2.0))?;
    let transverse_symbol = transverse_symbol(&grid);
    let transverse = apply_multiplier(phi, &transverse_symbol)?;
    let (a, b, t) = (l2_sq(phi), l2_sq(&half_dispersion), l2_sq(&transverse));
    let l_value = 0.5 * (a + b + t);
    let cubic = phi.integrate(|v| v * v * v);

    let energy_norm = energy_norm(phi, alpha, &transverse_symbol).sqrt();
    let sobolev_ratio = if cubic == 0.0 && a == 0.0 {
        0.0
    } else {
        let e1 = (5.0 * alpha - 4.0) / (alpha + 2.0);
        let e2 = (18.0 - 5.0 * alpha) / (2.0 * (alpha + 2.0));
        let l3 = phi.integrate(|v| v.abs().powi(3));
        l3 / (a.sqrt().powf(e1) * b.sqrt().powf(e2) * t.sqrt().sqrt())
    };
    Ok(FunctionalValues {
        l_value,
        n_value: cubic / 6.0,
        energy_norm,
        sobolev_ratio,
        dc_mode: phi.mean(),
    })
}

/// `Σ (1 + |ξ1|^α + |s|²)|φ̂|² · dA/N`, the squared energy norm by Parseval.
fn energy_norm(phi: &RealField, alpha: f64, transverse: &MultiplierField) -> f64 {
    let grid = *phi.grid();
    let (xi1, _) = wavenumbers(&grid);
    let nx = grid.nx();
    let coeffs = forward_transform(phi).into_coeffs();
    let sum: f64 = coeffs
        .par_iter()
        .zip(transverse.values().par_iter())
        .enumerate()
        .map(|(k, (c, s))| {
            let disp = xi1[k % nx].abs().powf(alpha);
            (1.0 + disp + s.norm_sqr()) * c.norm_sqr()
        })
        .sum();
    sum * grid.cell_area() / grid.len() as f64
}

/// Largest `|φ̂|` with `|k1| > nx/4` or `|k2| > ny/4`, relative to the largest
/// `|φ̂|` overall. Zero for the zero field.
pub fn fourier_tail(phi: &RealField) -> f64 {
    let grid = *phi.grid();
    let (nx, ny) = (grid.nx(), grid.ny());
    let coeffs = forward_transform(phi).into_coeffs();
    let mut outer = 0.0_f64;
    let mut all = 0.0_f64;
    for (k, c) in coeffs.iter().enumerate() {
        let m = c.norm();
        all = all.max(m);
        let (k1, k2) = (signed_index(k % nx, nx), signed_index(k / nx, ny));
        if k1.unsigned_abs() as usize > nx / 4 || k2.unsigned_abs() as usize > ny / 4 {
            outer = outer.max(m);
        }
    }
    if all == 0.0 {
        0.0
    } else {
        outer / all
    }
}
