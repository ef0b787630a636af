//! Pseudospectral computation and analysis of lump solutions of the
//! fractional KP-I equation
//!
//! ```text
//! -c φ + φ²/2 - D_x^α φ - ∂x⁻² φ_yy = 0
//! ```
//!
//! on a periodic box, by Petviashvili iteration, together with the kernel
//! symbols `m_α`, `h_α` that govern the spatial decay of the solutions.

pub mod analysis;
pub mod diagnostics;
pub mod error;
pub mod fieldfile;
pub mod grid;
pub mod kernels;
pub mod quadrature;
pub mod reference;
pub mod solver;
pub mod symbols;

pub use error::{FkpError, Result};
pub use grid::{forward_transform, inverse_transform, wavenumbers, RealField, SpectralField, SpectralGrid};
pub use solver::{solve, IterationRecord, IterationReport, SeedKind, SeedSpec, SolveStatus, SolverConfig};
pub use symbols::{Branch, MultiplierField, SymbolParams};
