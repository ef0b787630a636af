//! The convolution kernels behind the decay theory.
//!
//! A speed-1 lump satisfies `φ = ½ K_α ∗ φ²` with `K̂_α = m_α` and
//! `φ = ½ G_α ∗ (φ²)_x` with `Ĝ_α = −i h_α`. Since `h_α` is real and odd,
//! its inverse transform `H_α` is purely imaginary; the real, x-odd field
//! `G_α = −i H_α` is what [`build_kernel`] returns for [`KernelKind::H`].
//!
//! Kernels are sampled so that `∫ K(x − x') g(x') dx'` becomes the lattice
//! sum `Σ K(x − x_j) g(x_j) dA`, which [`convolve`] evaluates spectrally.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::analysis::{decay_profile_with_power, Axis, DecayProfile};
use crate::error::{FkpError, Result};
use crate::grid::{inverse_to_real, to_complex, Fft2d, RealField, SpectralGrid};
use crate::quadrature::integrate;
use crate::symbols::{apply_multiplier, dx, MultiplierField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    K,
    H,
}

/// Symbol whose integrability is probed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolKind {
    M,
    H,
}

impl SymbolKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SymbolKind::M => "m",
            SymbolKind::H => "h",
        }
    }
}

/// `ξ1² / (c ξ1² + ξ2² + |ξ1|^(α+2))`, continued by `1/c` at the origin.
fn m_speed(xi1: f64, xi2: f64, alpha: f64, c: f64) -> f64 {
    if xi1 == 0.0 {
        return if xi2 == 0.0 { 1.0 / c } else { 0.0 };
    }
    let a = xi1 * xi1;
    a / (c * a + xi2 * xi2 + xi1.abs().powf(alpha + 2.0))
}

/// `ξ1 / (c ξ1² + ξ2² + |ξ1|^(α+2))`, zero on the line `ξ1 = 0`.
fn h_speed(xi1: f64, xi2: f64, alpha: f64, c: f64) -> f64 {
    if xi1 == 0.0 {
        return 0.0;
    }
    xi1 / (c * xi1 * xi1 + xi2 * xi2 + xi1.abs().powf(alpha + 2.0))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(FkpError::config("alpha", "must be positive"));
    }
    Ok(())
}

pub fn build_kernel(grid: &SpectralGrid, alpha: f64, which: KernelKind) -> Result<RealField> {
    build_kernel_for_speed(grid, alpha, 1.0, which)
}

/// Kernel of the speed-`c` problem; `c = 1` gives `K_α`, `G_α` proper.
pub fn build_kernel_for_speed(
    grid: &SpectralGrid,
    alpha: f64,
    c: f64,
    which: KernelKind,
) -> Result<RealField> {
    check_alpha(alpha)?;
    if !(c.is_finite() && c > 0.0) {
        return Err(FkpError::config("c", "must be positive"));
    }
    let scale = 1.0 / grid.cell_area();
    let symbol = match which {
        KernelKind::K => MultiplierField::from_fn(*grid, |a, b| Complex64::new(scale * m_speed(a, b, alpha, c), 0.0)),
        KernelKind::H => MultiplierField::from_fn(*grid, |a, b| {
            Complex64::new(0.0, -scale * h_speed(a, b, alpha, c))
        })
        .without_nyquist_column(),
    };
    inverse_to_real(grid, symbol.values().to_vec(), &Fft2d::for_grid(grid))
}

/// `∫ kernel(x − x') g(x') dx'` on the periodic lattice.
pub fn convolve(kernel: &RealField, g: &RealField) -> Result<RealField> {
    let grid = *kernel.grid();
    if g.grid() != &grid {
        return Err(FkpError::GridMismatch(format!("kernel on {grid:?}, field on {:?}", g.grid())));
    }
    let fft = Fft2d::for_grid(&grid);
    let mut a = to_complex(kernel.values());
    let mut b = to_complex(g.values());
    fft.forward(&mut a);
    fft.forward(&mut b);
    let da = grid.cell_area();
    a.par_iter_mut().zip(b.par_iter()).for_each(|(x, y)| *x *= y * da);
    inverse_to_real(&grid, a, &fft)
}

/// `(‖φ − ½K∗φ²‖∞, ‖φ − φ̄ − ½G∗(φ²)_x‖∞)` for a speed-`c` lump, where `φ̄`
/// is the domain mean. `G∗(φ²)_x` has zero mean on the periodic box while a
/// computed lump carries a small mean fed by the DC mode of `φ²`.
pub fn convolution_defects(phi: &RealField, alpha: f64, c: f64) -> Result<(f64, f64)> {
    let grid = *phi.grid();
    let square = RealField::new(grid, phi.values().iter().map(|v| v * v).collect())?;
    let k = build_kernel_for_speed(&grid, alpha, c, KernelKind::K)?;
    let via_k = convolve(&k, &square)?.scaled(0.5);
    let square_x = apply_multiplier(&square, &dx(&grid))?;
    let g = build_kernel_for_speed(&grid, alpha, c, KernelKind::H)?;
    let via_g = convolve(&g, &square_x)?.scaled(0.5);
    let mean = phi.mean();
    let centred = RealField::new(grid, phi.values().iter().map(|v| v - mean).collect())?;
    Ok((phi.max_abs_diff(&via_k)?, centred.max_abs_diff(&via_g)?))
}

/// `r^power · kernel` along both positive half-axes.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelDecay {
    pub x: DecayProfile,
    pub y: DecayProfile,
}

pub fn kernel_decay(kernel: &RealField, power: f64) -> Result<KernelDecay> {
    if power != 1.0 && power != 2.0 {
        return Err(FkpError::config("power", "must be 1 or 2"));
    }
    Ok(KernelDecay {
        x: decay_profile_with_power(kernel, Axis::X, power),
        y: decay_profile_with_power(kernel, Axis::Y, power),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Converging,
    Diverging,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Converging => "converging",
            Verdict::Diverging => "diverging",
            Verdict::Inconclusive => "inconclusive",
        }
    }

    /// `< 1%` converging, `> 5%` diverging.
    pub fn from_increment(inc: f64) -> Verdict {
        if inc < 0.01 {
            Verdict::Converging
        } else if inc > 0.05 {
            Verdict::Diverging
        } else {
            Verdict::Inconclusive
        }
    }
}

/// Truncated `L^p` norms of `m_α` or `h_α` over `1/R ≤ |ξ1| ≤ R`, `ξ2 ∈ ℝ`,
/// by two independent routes.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrabilityProbe {
    pub alpha: f64,
    pub p: f64,
    pub which: SymbolKind,
    pub truncation_radii: Vec<f64>,
    /// 2D quadrature of `|s|^p`, reported as `(∫|s|^p)^(1/p)`.
    pub truncated_norms: Vec<f64>,
    /// The same norms from the separated 1D reduction.
    pub separated_norms: Vec<f64>,
    /// Relative growth of `∫|s|^p` over the last radius doubling.
    pub last_increment: f64,
    pub verdict: Verdict,
    /// Relative difference of the two routes at the largest radius.
    pub route_gap: f64,
}

/// Radii `2, 4, …, 2^PROBE_DOUBLINGS`.
pub const PROBE_DOUBLINGS: i32 = 40;

/// `∫_ℝ (1 + z²)^(−p) dz = √π Γ(p − ½) / Γ(p)`.
pub fn z_integral(p: f64) -> f64 {
    std::f64::consts::PI.sqrt() * libm::tgamma(p - 0.5) / libm::tgamma(p)
}

fn symbol_power(which: SymbolKind, alpha: f64, p: f64) -> impl Fn(f64, f64) -> f64 {
    move |a: f64, b: f64| {
        let s = match which {
            SymbolKind::M => {
                let a2 = a * a;
                a2 / (a2 + b * b + a.powf(alpha + 2.0))
            }
            SymbolKind::H => a / (a * a + b * b + a.powf(alpha + 2.0)),
        };
        s.abs().powf(p)
    }
}

/// `∫_ℝ |s(ξ1, ξ2)|^p dξ2` at `ξ1 > 0`, in `u = ln|ξ2|` on unit panels.
fn transverse_integral(f: &impl Fn(f64, f64) -> f64, xi1: f64) -> f64 {
    let g = |u: f64| {
        let b = u.exp();
        f(xi1, b) * b
    };
    let mut total = 0.0;
    for k in -120..130 {
        total += integrate(g, k as f64, k as f64 + 1.0, 1e-13, 0.0, 8);
    }
    2.0 * total
}

/// Separated integrand in `ξ1 > 0`, without the `Z(p)` factor.
fn separated_integrand(which: SymbolKind, alpha: f64, p: f64) -> impl Fn(f64) -> f64 {
    move |a: f64| {
        let core = (1.0 + a.powf(alpha)).powf(p - 0.5);
        match which {
            SymbolKind::M => a / core,
            SymbolKind::H => 1.0 / (a.powf(p - 1.0) * core),
        }
    }
}

/// `∫_{ln lo}^{ln hi} f(e^t) e^t dt`, twice, for both signs of `ξ1`.
fn shell(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, rel: f64) -> f64 {
    2.0 * integrate(|t: f64| f(t.exp()) * t.exp(), lo.ln(), hi.ln(), rel, 0.0, 64)
}

pub fn integrability_probe(alpha: f64, p: f64, which: SymbolKind) -> Result<IntegrabilityProbe> {
    check_alpha(alpha)?;
    if !(p.is_finite() && p > 0.5) {
        return Err(FkpError::InvalidExponent(p));
    }
    let two_d = symbol_power(which, alpha, p);
    let route_a = |a: f64| transverse_integral(&two_d, a);
    let sep = separated_integrand(which, alpha, p);
    let z = z_integral(p);

    let mut radii = Vec::new();
    let (mut acc_a, mut acc_b) = (0.0, 0.0);
    let (mut pow_a, mut pow_b) = (Vec::new(), Vec::new());
    for k in 1..=PROBE_DOUBLINGS {
        let r = 2f64.powi(k);
        let (inner, outer) = if k == 1 { ((0.5, 1.0), (1.0, 2.0)) } else { ((1.0 / r, 2.0 / r), (r / 2.0, r)) };
        for (lo, hi) in [inner, outer] {
            acc_a += shell(&route_a, lo, hi, 1e-10);
            acc_b += z * shell(&sep, lo, hi, 1e-12);
        }
        radii.push(r);
        pow_a.push(acc_a);
        pow_b.push(acc_b);
    }
    let n = pow_a.len();
    let last_increment = (pow_a[n - 1] - pow_a[n - 2]) / pow_a[n - 1];
    let route_gap = (pow_a[n - 1] - pow_b[n - 1]).abs() / pow_b[n - 1].abs();
    Ok(IntegrabilityProbe {
        alpha,
        p,
        which,
        truncation_radii: radii,
        truncated_norms: pow_a.iter().map(|v| v.powf(1.0 / p)).collect(),
        separated_norms: pow_b.iter().map(|v| v.powf(1.0 / p)).collect(),
        last_increment,
        verdict: Verdict::from_increment(last_increment),
        route_gap,
    })
}

/// Truncated lattice norms `(Σ_{|x|,|y| ≤ ρ} |K|^r dA)^(1/r)` for
/// `ρ = l/2^k` up to `ρ = l/2`, and the relative growth of `Σ|K|^r` over the
/// last doubling. Near-origin resolution limits this to a qualitative check.
pub fn lattice_norm_growth(kernel: &RealField, r: f64) -> (Vec<(f64, f64)>, f64) {
    let g = kernel.grid();
    let l = g.lx().min(g.ly());
    let mut rows = Vec::new();
    let mut sums = Vec::new();
    let mut rho = l / 64.0;
    while rho <= l / 2.0 * (1.0 + 1e-12) {
        let mut s = 0.0;
        for iy in 0..g.ny() {
            let y = g.y(iy);
            if y.abs() > rho {
                continue;
            }
            for ix in 0..g.nx() {
                if g.x(ix).abs() <= rho {
                    s += kernel.get(ix, iy).abs().powf(r);
                }
            }
        }
        s *= g.cell_area();
        sums.push(s);
        rows.push((rho, s.powf(1.0 / r)));
        rho *= 2.0;
    }
    let n = sums.len();
    let inc = if n >= 2 { (sums[n - 1] - sums[n - 2]) / sums[n - 1] } else { f64::NAN };
    (rows, inc)
}
