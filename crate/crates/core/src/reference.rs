//! Closed-form reference fields and seed constructors.

use crate::error::{FkpError, Result};
use crate::grid::{RealField, SpectralGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactLumpParams {
    pub c: f64,
    /// Time; the lump is sampled at `x - c t`.
    pub t: f64,
}

impl ExactLumpParams {
    pub fn new(c: f64) -> Self {
        Self { c, t: 0.0 }
    }
}

/// The classical KP-I lump,
/// `8c (1 - c ξ²/3 + c² y²/3) / (1 + c ξ²/3 + c² y²/3)²` with `ξ = x - ct`.
pub fn exact_kp1_value(x: f64, y: f64, p: &ExactLumpParams) -> f64 {
    let c = p.c;
    let s = x - c * p.t;
    let a = c * s * s / 3.0;
    let b = c * c * y * y / 3.0;
    let den = 1.0 + a + b;
    8.0 * c * (1.0 - a + b) / (den * den)
}

pub fn exact_kp1_lump(grid: &SpectralGrid, p: &ExactLumpParams) -> Result<RealField> {
    if !(p.c.is_finite() && p.c > 0.0) {
        return Err(FkpError::config("c", "must be positive"));
    }
    let p = *p;
    RealField::from_fn(*grid, move |x, y| exact_kp1_value(x, y, &p))
}

/// `A exp(-(x² + y²)/w²)`.
pub fn gaussian_seed(grid: &SpectralGrid, amplitude: f64, width: f64) -> Result<RealField> {
    if !(width.is_finite() && width > 0.0) {
        return Err(FkpError::config("seed-width", "must be positive"));
    }
    if !amplitude.is_finite() || amplitude == 0.0 {
        return Err(FkpError::config("seed-amplitude", "must be finite and nonzero"));
    }
    let w2 = width * width;
    RealField::from_fn(*grid, move |x, y| amplitude * (-(x * x + y * y) / w2).exp())
}

/// Periodic bilinear interpolation at `(x, y)`; coordinates must lie in the
/// closed box `[-lx, lx] x [-ly, ly]`.
pub fn interpolate(field: &RealField, x: f64, y: f64) -> Result<f64> {
    let g = field.grid();
    if x.abs() > g.lx() * (1.0 + 1e-12) || y.abs() > g.ly() * (1.0 + 1e-12) {
        return Err(FkpError::OutOfRange(format!(
            "({x}, {y}) outside [-{}, {}] x [-{}, {}]",
            g.lx(),
            g.lx(),
            g.ly(),
            g.ly()
        )));
    }
    let locate = |v: f64, l: f64, h: f64, n: usize| {
        let s = (v + l) / h;
        let mut i = s.floor();
        let mut frac = s - i;
        // snap onto nodes so coincident points reproduce samples exactly
        if frac > 1.0 - 1e-9 {
            i += 1.0;
            frac = 0.0;
        } else if frac < 1e-9 {
            frac = 0.0;
        }
        let i0 = (i as i64).rem_euclid(n as i64) as usize;
        (i0, (i0 + 1) % n, frac)
    };
    let (x0, x1, fx) = locate(x, g.lx(), g.dx(), g.nx());
    let (y0, y1, fy) = locate(y, g.ly(), g.dy(), g.ny());
    let v00 = field.get(x0, y0);
    let v10 = field.get(x1, y0);
    let v01 = field.get(x0, y1);
    let v11 = field.get(x1, y1);
    Ok((1.0 - fy) * ((1.0 - fx) * v00 + fx * v10) + fy * ((1.0 - fx) * v01 + fx * v11))
}

/// Maps a speed-1 solution `ψ` to speed `c`:
/// `φ_c(x, y) = c ψ(c^(1/α) x, c^(1/α + 1/2) y)`, sampled on `target`.
pub fn rescale_solution(
    phi: &RealField,
    alpha: f64,
    c: f64,
    target: &SpectralGrid,
) -> Result<RealField> {
    if !(c.is_finite() && c > 0.0) {
        return Err(FkpError::config("c", "must be positive"));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(FkpError::config("alpha", "must be positive"));
    }
    let sx = c.powf(1.0 / alpha);
    let sy = c.powf(1.0 / alpha + 0.5);
    let mut values = Vec::with_capacity(target.len());
    for iy in 0..target.ny() {
        let y = target.y(iy) * sy;
        for ix in 0..target.nx() {
            values.push(c * interpolate(phi, target.x(ix) * sx, y)?);
        }
    }
    RealField::new(*target, values)
}
