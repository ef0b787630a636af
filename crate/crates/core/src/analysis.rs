//! Post-hoc study of computed lumps: cross sections, reflection symmetry,
//! `r^k φ` decay plateaus and peak amplitudes.

use crate::error::{FkpError, Result};
use crate::grid::RealField;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
        }
    }
}

/// `r^power · φ` sampled along the positive half of one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayProfile {
    pub axis: Axis,
    pub power: f64,
    /// Half-width of the domain along the axis.
    pub half_width: f64,
    pub radii: Vec<f64>,
    pub products: Vec<f64>,
    /// Median of the products over the window `[l/4, l/2]`.
    pub plateau_value: f64,
    /// `max |p − plateau| / |plateau|` over the same window.
    pub plateau_rel_variation: f64,
    /// `max |p|` over the window.
    pub window_max_abs: f64,
}

impl DecayProfile {
    pub fn window(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let l = self.half_width;
        self.radii
            .iter()
            .copied()
            .zip(self.products.iter().copied())
            .filter(move |&(r, _)| r >= l / 4.0 && r <= l / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryReport {
    /// `max |φ(x,y) − φ(−x,y)| / ‖φ‖∞`
    pub x_defect: f64,
    /// `max |φ(x,y) − φ(x,−y)| / ‖φ‖∞`
    pub y_defect: f64,
}

/// All nodes on the grid line nearest to `offset`: for [`Axis::X`] the
/// section `φ(x, offset)` as `(x, value)` pairs, for [`Axis::Y`] the section
/// `φ(offset, y)` as `(y, value)` pairs.
pub fn cross_section(phi: &RealField, axis: Axis, offset: f64) -> Result<Vec<(f64, f64)>> {
    let g = phi.grid();
    let (l, h, n) = match axis {
        Axis::X => (g.ly(), g.dy(), g.ny()),
        Axis::Y => (g.lx(), g.dx(), g.nx()),
    };
    if !offset.is_finite() || offset.abs() > l {
        return Err(FkpError::OutOfRange(format!(
            "section offset {offset} outside [-{l}, {l}]"
        )));
    }
    let line = ((offset + l) / h).round() as usize % n;
    Ok(match axis {
        Axis::X => (0..g.nx()).map(|ix| (g.x(ix), phi.get(ix, line))).collect(),
        Axis::Y => (0..g.ny()).map(|iy| (g.y(iy), phi.get(line, iy))).collect(),
    })
}

/// Reflection defects. Node `j` sits at `-l + j·h`, so its mirror image is
/// node `(n - j) mod n`; the node at `-l` is its own periodic image.
pub fn symmetry_report(phi: &RealField) -> SymmetryReport {
    let g = phi.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let scale = phi.max_abs();
    if scale == 0.0 {
        return SymmetryReport {
            x_defect: 0.0,
            y_defect: 0.0,
        };
    }
    let mut dx = 0.0_f64;
    let mut dy = 0.0_f64;
    for iy in 0..ny {
        for ix in 0..nx {
            let v = phi.get(ix, iy);
            dx = dx.max((v - phi.get((nx - ix) % nx, iy)).abs());
            dy = dy.max((v - phi.get(ix, (ny - iy) % ny)).abs());
        }
    }
    SymmetryReport {
        x_defect: dx / scale,
        y_defect: dy / scale,
    }
}

/// `r² φ` along the positive half-axis through the origin.
pub fn decay_profile(phi: &RealField, axis: Axis) -> DecayProfile {
    decay_profile_with_power(phi, axis, 2.0)
}

pub fn decay_profile_with_power(phi: &RealField, axis: Axis, power: f64) -> DecayProfile {
    let g = phi.grid();
    let (n, l) = match axis {
        Axis::X => (g.nx(), g.lx()),
        Axis::Y => (g.ny(), g.ly()),
    };
    let centre = n / 2;
    let (mut radii, mut products) = (Vec::with_capacity(centre), Vec::with_capacity(centre));
    for j in centre + 1..n {
        let (r, v) = match axis {
            Axis::X => (g.x(j), phi.get(j, g.ny() / 2)),
            Axis::Y => (g.y(j), phi.get(g.nx() / 2, j)),
        };
        radii.push(r);
        products.push(r.powf(power) * v);
    }
    let mut window: Vec<f64> = radii
        .iter()
        .zip(&products)
        .filter(|(&r, _)| r >= l / 4.0 && r <= l / 2.0)
        .map(|(_, &p)| p)
        .collect();
    let window_max_abs = window.iter().fold(0.0_f64, |m, p| m.max(p.abs()));
    let plateau_value = median(&mut window);
    let plateau_rel_variation = window
        .iter()
        .map(|p| (p - plateau_value).abs())
        .fold(0.0_f64, f64::max)
        / plateau_value.abs();
    DecayProfile {
        axis,
        power,
        half_width: l,
        radii,
        products,
        plateau_value,
        plateau_rel_variation,
        window_max_abs,
    }
}

fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Peak amplitude `max φ` of each field, in input order.
pub fn peakedness(phis: &[(f64, RealField)]) -> Vec<(f64, f64)> {
    phis.iter().map(|(alpha, f)| (*alpha, f.max())).collect()
}
