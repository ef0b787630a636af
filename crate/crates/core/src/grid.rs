//! Periodic computational domain, real/spectral field containers and the 2D
//! discrete Fourier transform used by every other module.
//!
//! Coefficients are referenced to the physical origin: for node coordinates
//! `x_j = -lx + j*dx` the forward transform is
//! `f̂(ξ) = Σ_j f(x_j) exp(-i ξ·x_j)` (unnormalized), and the inverse carries
//! the `1/(nx*ny)` factor. Referencing the origin instead of node 0 only
//! multiplies every coefficient by `(-1)^(k1+k2)`, but it makes coefficients
//! comparable across grids that share the same box.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{FkpError, Result};

/// Relative tolerance for conjugate symmetry of spectra that must map back to
/// real fields.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Uniform periodic grid on `[-lx, lx) x [-ly, ly)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralGrid {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
}

impl SpectralGrid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        for (name, n) in [("nx", nx), ("ny", ny)] {
            if n < 8 || !n.is_power_of_two() {
                return Err(FkpError::InvalidGrid(format!(
                    "{name} = {n} must be a power of two and at least 8"
                )));
            }
        }
        for (name, l) in [("lx", lx), ("ly", ly)] {
            if !(l.is_finite() && l > 0.0) {
                return Err(FkpError::InvalidGrid(format!(
                    "{name} = {l} must be positive and finite"
                )));
            }
        }
        Ok(Self { nx, ny, lx, ly })
    }

    /// `n x n` nodes on `[-l, l)^2`.
    pub fn square(n: usize, l: f64) -> Result<Self> {
        Self::new(n, n, l, l)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.lx / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        2.0 * self.ly / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.lx + j as f64 * self.dx()
    }

    pub fn y(&self, i: usize) -> f64 {
        -self.ly + i as f64 * self.dy()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|j| self.x(j)).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        (0..self.ny).map(|i| self.y(i)).collect()
    }

    /// Row-major offset of node `(ix, iy)`.
    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    /// Offset of the mode with signed indices `(-k1, -k2)` given the offset
    /// of `(k1, k2)`.
    #[inline]
    pub fn mirror(&self, idx: usize) -> usize {
        let (iy, ix) = (idx / self.nx, idx % self.nx);
        ((self.ny - iy) % self.ny) * self.nx + (self.nx - ix) % self.nx
    }

    pub fn xi1_spacing(&self) -> f64 {
        PI / self.lx
    }

    pub fn xi2_spacing(&self) -> f64 {
        PI / self.ly
    }

    fn check_same(&self, other: &SpectralGrid) -> Result<()> {
        if self != other {
            return Err(FkpError::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// Signed index in `{-n/2, …, n/2-1}` of transform slot `k`.
#[inline]
pub fn signed_index(k: usize, n: usize) -> i64 {
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Transform slot of signed index `k` (taken modulo `n`).
#[inline]
pub fn slot(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}

/// Physical wavenumbers `(ξ1, ξ2)` in transform order.
pub fn wavenumbers(grid: &SpectralGrid) -> (Vec<f64>, Vec<f64>) {
    let axis = |n: usize, l: f64| {
        (0..n)
            .map(|k| PI * signed_index(k, n) as f64 / l)
            .collect::<Vec<_>>()
    };
    (axis(grid.nx, grid.lx), axis(grid.ny, grid.ly))
}

/// Real samples of a field on a grid, row-major with `x` varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: SpectralGrid,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: SpectralGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(FkpError::InvalidField(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(FkpError::InvalidField(format!(
                "non-finite value at offset {pos}"
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: SpectralGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(grid: SpectralGrid, f: impl Fn(f64, f64) -> f64 + Sync) -> Result<Self> {
        let xs = grid.xs();
        let mut values = vec![0.0; grid.len()];
        values
            .par_chunks_mut(grid.nx)
            .enumerate()
            .for_each(|(iy, row)| {
                let y = grid.y(iy);
                for (v, &x) in row.iter_mut().zip(&xs) {
                    *v = f(x, y);
                }
            });
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.grid.index(ix, iy)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs_diff(&self, other: &RealField) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn scaled(&self, s: f64) -> RealField {
        RealField {
            grid: self.grid,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    /// Pointwise `a*self + b*other`.
    pub fn combine(&self, a: f64, other: &RealField, b: f64) -> Result<RealField> {
        self.grid.check_same(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        RealField::new(self.grid, values)
    }

    /// Mean over the periodic domain.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Lattice quadrature `Σ f · dA` of `g(f)`.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.values.iter().map(|&v| g(v)).sum::<f64>() * self.grid.cell_area()
    }

}

/// Origin-referenced discrete Fourier coefficients of a field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: SpectralGrid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: SpectralGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(FkpError::InvalidField(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient at signed mode indices `(k1, k2)`.
    pub fn coeff(&self, k1: i64, k2: i64) -> Complex64 {
        let g = &self.grid;
        self.coeffs[g.index(slot(k1, g.nx), slot(k2, g.ny))]
    }

    /// `max |c(k) - conj(c(-k))| / max |c|`, zero for an all-zero spectrum.
    pub fn symmetry_defect(&self) -> f64 {
        symmetry_defect(&self.grid, &self.coeffs)
    }
}

pub(crate) fn symmetry_defect(grid: &SpectralGrid, coeffs: &[Complex64]) -> f64 {
    let scale = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.norm()));
    if scale == 0.0 {
        return 0.0;
    }
    let worst = coeffs
        .par_iter()
        .enumerate()
        .map(|(i, c)| (c - coeffs[grid.mirror(i)].conj()).norm())
        .reduce(|| 0.0, f64::max);
    worst / scale
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Reusable 2D transform for a fixed `nx x ny` shape. Any sizes are accepted
/// here so that padded products can reuse it; [`SpectralGrid`] itself is
/// restricted to powers of two.
#[derive(Clone)]
pub struct Fft2d {
    nx: usize,
    ny: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2d {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2d")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .finish()
    }
}

impl Fft2d {
    pub fn new(nx: usize, ny: usize) -> Self {
        PLANNER.with(|p| {
            let mut p = p.borrow_mut();
            Self {
                nx,
                ny,
                row_fwd: p.plan_fft_forward(nx),
                row_inv: p.plan_fft_inverse(nx),
                col_fwd: p.plan_fft_forward(ny),
                col_inv: p.plan_fft_inverse(ny),
            }
        })
    }

    pub fn for_grid(grid: &SpectralGrid) -> Self {
        Self::new(grid.nx, grid.ny)
    }

    /// Unnormalized, origin-referenced forward transform in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.process(data, &self.row_fwd, &self.col_fwd);
        self.apply_origin_phase(data);
    }

    /// Inverse of [`Fft2d::forward`] in place, including the `1/(nx*ny)` factor.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.apply_origin_phase(data);
        self.process(data, &self.row_inv, &self.col_inv);
        let norm = 1.0 / (self.nx * self.ny) as f64;
        data.par_iter_mut().for_each(|v| *v *= norm);
    }

    /// `(-1)^(k1+k2)` for even sizes: shifts the phase reference from node 0
    /// (at `x = -lx`) to the origin.
    fn apply_origin_phase(&self, data: &mut [Complex64]) {
        let nx = self.nx;
        data.par_chunks_mut(nx).enumerate().for_each(|(k2, row)| {
            let start = k2 & 1;
            for v in row.iter_mut().skip(1 - start).step_by(2) {
                *v = -*v;
            }
        });
    }

    fn process(&self, data: &mut [Complex64], row: &Arc<dyn Fft<f64>>, col: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.nx * self.ny, "buffer does not match transform shape");
        run_rows(data, self.nx, row);
        let mut tmp = vec![Complex64::new(0.0, 0.0); data.len()];
        transpose(data, &mut tmp, self.ny, self.nx);
        run_rows(&mut tmp, self.ny, col);
        transpose(&tmp, data, self.nx, self.ny);
    }
}

fn run_rows(data: &mut [Complex64], len: usize, fft: &Arc<dyn Fft<f64>>) {
    let rows_per_task = (1 << 16) / len.max(1) + 1;
    data.par_chunks_mut(len * rows_per_task).for_each(|chunk| {
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(chunk, &mut scratch);
    });
}

/// `src` is `rows x cols` row-major; `dst` becomes `cols x rows`.
fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const BLOCK: usize = 16;
    dst.par_chunks_mut(rows * BLOCK)
        .enumerate()
        .for_each(|(b, out)| {
            let c0 = b * BLOCK;
            let width = BLOCK.min(cols - c0);
            for r0 in (0..rows).step_by(BLOCK) {
                let r1 = (r0 + BLOCK).min(rows);
                for c in 0..width {
                    let dst_row = &mut out[c * rows..(c + 1) * rows];
                    for r in r0..r1 {
                        dst_row[r] = src[r * cols + c0 + c];
                    }
                }
            }
        });
}

/// Inverse transform keeping only the real part, for spectra formed by
/// cancellation (residuals, differences) whose roundoff asymmetry is large
/// relative to their own tiny magnitude.
pub(crate) fn inverse_real_part(grid: &SpectralGrid, mut coeffs: Vec<Complex64>, fft: &Fft2d) -> Result<RealField> {
    fft.inverse(&mut coeffs);
    RealField::new(*grid, coeffs.into_iter().map(|z| z.re).collect())
}

pub(crate) fn to_complex(values: &[f64]) -> Vec<Complex64> {
    values.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

/// Forward transform of a real field.
pub fn forward_transform(f: &RealField) -> SpectralField {
    let mut coeffs = to_complex(&f.values);
    Fft2d::for_grid(&f.grid).forward(&mut coeffs);
    SpectralField {
        grid: f.grid,
        coeffs,
    }
}

/// Inverse transform of a conjugate-symmetric spectrum back to real samples.
pub fn inverse_transform(g: &SpectralField) -> Result<RealField> {
    inverse_to_real(&g.grid, g.coeffs.clone(), &Fft2d::for_grid(&g.grid))
}

/// Shared tail of every spectral operator: check symmetry, invert, check and
/// drop the imaginary residue.
pub(crate) fn inverse_to_real(
    grid: &SpectralGrid,
    mut coeffs: Vec<Complex64>,
    fft: &Fft2d,
) -> Result<RealField> {
    let defect = symmetry_defect(grid, &coeffs);
    if defect > SYMMETRY_TOL {
        return Err(FkpError::SymmetryViolation { defect });
    }
    fft.inverse(&mut coeffs);
    let (re_max, im_max) = coeffs
        .iter()
        .fold((0.0_f64, 0.0_f64), |(r, i), z| (r.max(z.re.abs()), i.max(z.im.abs())));
    if im_max > SYMMETRY_TOL * re_max.max(im_max) && im_max > 0.0 && re_max > 0.0 {
        return Err(FkpError::SymmetryViolation {
            defect: im_max / re_max,
        });
    }
    let values: Vec<f64> = coeffs.into_iter().map(|z| z.re).collect();
    RealField::new(*grid, values)
}
