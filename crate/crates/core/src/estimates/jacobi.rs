//! The Jacobi inequality `Δ_g b ≥ ε|∇_g b|² − C` on solved instances.

use core::f64::consts::{FRAC_PI_2, PI};

use alloc::format;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::{grad_norm_g, laplace_beltrami, slope_field};
use crate::grid::{Region, ScalarField};
use crate::phase::PhaseField;
use crate::report::{EstimateReport, WorstDefect};
use crate::solver::{residual, PotentialField};

/// Residual sup-norm above which an input is not treated as a solution.
pub const SOLVED_TOL: f64 = 1e-8;

/// Node margin needed by the nested differences of `b`.
pub const JACOBI_MARGIN: usize = 3;

/// `(ε, C)` at a point with phase value `theta` and phase norms
/// `(‖DΘ‖, ‖D²Θ‖)`.
///
/// For `|Θ| < π/2`: `ε = sin|Θ|/4`, `C = 5π²/8 + ((5π+4)/2)‖D²Θ‖`.
/// Otherwise `ε = 3/8`, `C = 2‖DΘ‖² + 2‖D²Θ‖`.
pub fn jacobi_constant(theta: f64, norms: (f64, f64)) -> Result<(f64, f64)> {
    if !(theta.abs() < PI) {
        return Err(Error::PhaseRange { value: theta });
    }
    let (d1, d2) = norms;
    Ok(if theta.abs() < FRAC_PI_2 {
        (theta.abs().sin() / 4.0, 5.0 * PI * PI / 8.0 + (5.0 * PI + 4.0) / 2.0 * d2)
    } else {
        (3.0 / 8.0, 2.0 * d1 * d1 + 2.0 * d2)
    })
}

/// Per-node Jacobi defect and its summary.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiOutcome {
    pub report: EstimateReport,
    /// `Δ_g b − ε|∇_g b|² + C` on the region, zero elsewhere.
    pub defect: ScalarField,
}

/// Evaluates `Δ_g b − ε(Θ(x))|∇_g b|² + C(Θ(x))` on `region`, where `b` is
/// the slope of the differenced Hessian and the phase norms are taken over
/// the whole grid. The report passes when the minimum exceeds `−k·h`.
pub fn jacobi_report(u: &PotentialField, theta: &PhaseField, region: &Region, k: f64) -> Result<JacobiOutcome> {
    let grid = *u.grid();
    if grid != *theta.grid() || grid != *region.grid() {
        return Err(Error::GridMismatch);
    }
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    if region.nodes().iter().any(|&i| {
        let (a, b) = grid.ij(i);
        grid.margin_of(a, b) < JACOBI_MARGIN
    }) {
        return Err(Error::RegionOutsideGrid);
    }
    let res = residual(u, theta)?.max_abs();
    if !(res <= SOLVED_TOL) {
        return Err(Error::Unsolved { residual: res, tolerance: SOLVED_TOL });
    }
    let b = slope_field(u)?;
    let lap = laplace_beltrami(&b, u, theta)?;
    let grad = grad_norm_g(&b, u)?;
    let norms = (theta.norm_d1(), theta.norm_d2());
    let mut defect = alloc::vec![0.0; grid.len()];
    let mut worst = WorstDefect::new();
    for &i in region.nodes() {
        let (eps, c) = jacobi_constant(theta.value_at(i), norms)?;
        let lhs = eps * grad.values()[i];
        let rhs = lap.values()[i] + c;
        defect[i] = rhs - lhs;
        worst.push(lhs, rhs, grid.ij(i));
    }
    let report = worst
        .into_report("jacobi", k * grid.h())
        .with_note(format!("K = {k}, |DTheta| = {:e}, |D2Theta| = {:e}", norms.0, norms.1));
    Ok(JacobiOutcome { report, defect: ScalarField::new(grid, defect)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::phase::ConstantPhase;
    use crate::solver::PotentialPreset;

    #[test]
    fn constant_examples() {
        let (e, c) = jacobi_constant(0.0, (0.0, 0.0)).unwrap();
        assert_eq!(e, 0.0);
        assert!((c - 5.0 * PI * PI / 8.0).abs() < 1e-15);
        assert_eq!(jacobi_constant(FRAC_PI_2, (0.0, 0.0)).unwrap(), (0.375, 0.0));
        let (e, _) = jacobi_constant(PI / 6.0, (3.0, 7.0)).unwrap();
        assert!((e - 0.125).abs() < 1e-16);
        assert!(jacobi_constant(PI, (0.0, 0.0)).is_err());
    }

    #[test]
    fn epsilon_monotone_below_switch() {
        let mut prev = 0.0;
        for k in 0..=1000 {
            let t = -FRAC_PI_2 * (k as f64) / 1000.0 * 0.999_999;
            let (e, _) = jacobi_constant(t, (1.0, 1.0)).unwrap();
            assert!(e >= prev && e <= 0.25);
            prev = e;
        }
        assert_eq!(jacobi_constant(-FRAC_PI_2, (1.0, 1.0)).unwrap().0, 0.375);
    }

    #[test]
    fn harmonic_quadratic_defect_equals_constant() {
        let g = Grid::new([-1.0, -1.0], [2.0, 2.0], 33).unwrap();
        let u = PotentialField::new(PotentialField::from_analytic(g, &PotentialPreset::HARMONIC).unwrap().u().clone()).unwrap();
        let th = PhaseField::sample(g, &ConstantPhase(0.0)).unwrap();
        let region = Region::interior(&g, JACOBI_MARGIN).unwrap();
        let out = jacobi_report(&u, &th, &region, 1.0).unwrap();
        assert!(out.report.pass);
        assert!((out.report.worst_defect - 5.0 * PI * PI / 8.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_unsolved_and_thin_margin() {
        let g = Grid::new([-1.0, -1.0], [2.0, 2.0], 17).unwrap();
        let u = PotentialField::from_analytic(g, &PotentialPreset::HARMONIC).unwrap();
        let th = PhaseField::sample(g, &ConstantPhase(0.5)).unwrap();
        let region = Region::interior(&g, JACOBI_MARGIN).unwrap();
        assert!(matches!(jacobi_report(&u, &th, &region, 1.0), Err(Error::Unsolved { .. })));
        let th0 = PhaseField::sample(g, &ConstantPhase(0.0)).unwrap();
        let thin = Region::interior(&g, 1).unwrap();
        assert_eq!(jacobi_report(&u, &th0, &thin, 1.0), Err(Error::RegionOutsideGrid));
    }
}
