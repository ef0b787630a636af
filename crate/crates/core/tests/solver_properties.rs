use fkp_core::diagnostics::residual;
use fkp_core::grid::{RealField, SpectralGrid};
use fkp_core::reference::{gaussian_seed, rescale_solution};
use fkp_core::solver::{petviashvili_step, solve, stabilizing_factor, SeedSpec, SolveStatus, SolverConfig};
use fkp_core::symbols::{apply_multiplier, denominator_at, MultiplierField, SymbolParams};
use fkp_core::FkpError;
use rustfft::num_complex::Complex64;

const TOL: f64 = 1e-5;

fn config(alpha: f64, c: f64, grid: SpectralGrid) -> SolverConfig {
    let mut cfg = SolverConfig::new(grid, SymbolParams::new(alpha, c));
    cfg.tol = TOL;
    cfg.max_iter = 400;
    cfg
}

fn small() -> SpectralGrid {
    SpectralGrid::square(128, 32.0).unwrap()
}

fn converged(cfg: &SolverConfig) -> RealField {
    let (phi, report) = solve(cfg).unwrap();
    assert_eq!(report.status, SolveStatus::Converged, "{:?}", report.last());
    phi
}

#[test]
fn converged_lump_is_a_fixed_point() {
    let p = SymbolParams::new(2.0, 1.0);
    let phi = converged(&config(2.0, 1.0, small()));
    let (next, m) = petviashvili_step(&phi, &p, 2.0).unwrap();
    assert!((m - 1.0).abs() <= 1e-8, "{m}");
    assert!(next.max_abs_diff(&phi).unwrap() <= 2.0 * TOL);
    let m2 = stabilizing_factor(&phi.scaled(2.0), &p).unwrap();
    assert!((m2 - 0.5).abs() <= 1e-8, "{m2}");
}

#[test]
fn stabilizing_factor_matches_physical_space_pairings() {
    // ⟨Dφ̂, φ̂⟩ / ⟨(φ²)^, φ̂⟩ equals Σ φ·(Dφ) / Σ φ³ by Parseval, with the
    // zero-mass line left out of D
    let grid = small();
    let p = SymbolParams::new(2.0, 1.0);
    let seed = gaussian_seed(&grid, 3.0, 2.0).unwrap();
    let d = MultiplierField::from_fn(grid, |a, b| {
        if a == 0.0 && b != 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            denominator_at(a, b, &p)
        }
    });
    let dphi = apply_multiplier(&seed, &d).unwrap();
    let quad: f64 = seed.values().iter().zip(dphi.values()).map(|(a, b)| a * b).sum();
    let cubic: f64 = seed.values().iter().map(|v| v * v * v).sum();
    let m = stabilizing_factor(&seed, &p).unwrap();
    assert!((m - quad / cubic).abs() <= 1e-10 * m.abs(), "{m} {}", quad / cubic);
}

#[test]
fn limit_does_not_depend_on_seed_amplitude() {
    let base = converged(&config(1.7, 1.0, small()));
    for amp in [1.5, 6.0] {
        let mut cfg = config(1.7, 1.0, small());
        cfg.seed = SeedSpec {
            amplitude: Some(amp),
            ..SeedSpec::default()
        };
        let other = converged(&cfg);
        assert!(other.max_abs_diff(&base).unwrap() <= 10.0 * TOL, "amplitude {amp}");
    }
}

#[test]
fn padded_product_changes_little() {
    let plain = converged(&config(2.0, 1.0, small()));
    let mut cfg = config(2.0, 1.0, small());
    cfg.dealias = true;
    let padded = converged(&cfg);
    let diff = padded.max_abs_diff(&plain).unwrap() / plain.max_abs();
    assert!(diff <= 1e-3, "{diff}");
}

#[test]
fn rescaled_solution_residual_scales_exactly() {
    // φ_c = c ψ(c^{1/α} x, c^{1/α+1/2} y) gives S[φ_c] = c^{2+2/α} S[ψ]
    // pointwise on grids whose nodes map onto each other
    let alpha = 1.5;
    let c: f64 = 2.0;
    let psi = converged(&config(alpha, 1.0, small()));
    let target = SpectralGrid::new(128, 128, 32.0 / c.powf(1.0 / alpha), 32.0 / c.powf(1.0 / alpha + 0.5)).unwrap();
    let phi = rescale_solution(&psi, alpha, c, &target).unwrap();
    let r1 = residual(&psi, &SymbolParams::new(alpha, 1.0)).unwrap();
    let r2 = residual(&phi, &SymbolParams::new(alpha, c)).unwrap();
    let factor = c.powf(2.0 + 2.0 / alpha);
    assert!((r2 / r1 - factor).abs() <= 1e-6 * factor, "{}", r2 / r1);
}

#[test]
fn configuration_errors_name_their_key() {
    let mut cfg = config(0.7, 1.0, small());
    match solve(&cfg) {
        Err(FkpError::InvalidConfig { key, .. }) => assert_eq!(key, "alpha"),
        other => panic!("{other:?}"),
    }
    cfg.allow_supercritical = true;
    cfg.max_iter = 3;
    assert!(solve(&cfg).is_ok());

    let mut cfg = config(2.0, 1.0, small());
    cfg.params.branch = fkp_core::Branch::KpII;
    assert!(matches!(solve(&cfg), Err(FkpError::UnsupportedEquation(_))));
}
