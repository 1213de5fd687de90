//! Field-level checks on solved instances.

mod cutoffs;
mod jacobi;
mod ledger;
mod volume;

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::slope_field;
use crate::grid::{ball_region, ball_region_inside, dist, diff, Grid, Region, ScalarField};
use crate::phase::PhaseField;
use crate::report::{EstimateReport, WorstDefect};
use crate::solver::{AnalyticPotential, PotentialField, PotentialJet};

pub use cutoffs::{
    build_cutoffs, c1, smoothstep, CutoffScan, CutoffSet, PhaseCutoff, RadialCutoff, CERTIFY_SAMPLES,
};
pub use jacobi::{jacobi_constant, jacobi_report, JacobiOutcome, JACOBI_MARGIN, SOLVED_TOL};
pub use ledger::{alpha_threshold, beta_window, choose_constants, ConstantLedger, LedgerCheck, NU, Q};
pub use volume::{volume_bound_report, VolumeBoundConstants, QUADRATURE_MARGIN};

/// Sup of `|2σ₂ − div(L_{σ₂}Du)|` over nodes at least 3 layers inside, with
/// `L_{σ₂}Du = (∂₂(u₂u₁) − ∂₁(u₂²), ∂₁(u₁u₂) − ∂₂(u₁²))` differenced from
/// the cached gradient.
pub fn sigma2_divergence_check(u: &PotentialField, tol: f64) -> Result<EstimateReport> {
    sigma2_divergence_on(u, &Region::interior(u.grid(), 3)?, tol)
}

/// [`sigma2_divergence_check`] restricted to `region`, which must keep three
/// nodes away from the boundary.
pub fn sigma2_divergence_on(u: &PotentialField, region: &Region, tol: f64) -> Result<EstimateReport> {
    let grid = *u.grid();
    if region.grid() != &grid {
        return Err(Error::GridMismatch);
    }
    if region.nodes().iter().any(|&k| {
        let (i, j) = grid.ij(k);
        grid.margin_of(i, j) < 3
    }) {
        return Err(Error::Domain("region reaches the stencil margin"));
    }
    let [u1, u2] = u.gradient();
    let prod = u1.zip_with(u2, |a, b| a * b)?;
    let sq1 = u1.map(|a| a * a);
    let sq2 = u2.map(|a| a * a);
    let f1 = diff(&prod, [0, 1])?.axpby(1.0, &diff(&sq2, [1, 0])?, -1.0)?;
    let f2 = diff(&prod, [1, 0])?.axpby(1.0, &diff(&sq1, [0, 1])?, -1.0)?;
    let div = diff(&f1, [1, 0])?.axpby(1.0, &diff(&f2, [0, 1])?, 1.0)?;
    let mut worst = WorstDefect::new();
    for &k in region.nodes() {
        let lhs = 2.0 * u.hessian_at(k).det();
        let rhs = div.values()[k];
        // identity: record −|difference| as the defect
        worst.push((lhs - rhs).abs(), 0.0, grid.ij(k));
    }
    let mut r = worst.into_report("sigma2_divergence", tol);
    if let Some((i, j)) = r.worst_location {
        let k = grid.index(i, j);
        r.lhs = 2.0 * u.hessian_at(k).det();
        r.rhs = div.values()[k];
    }
    Ok(r)
}

fn center_node(grid: &Grid, p: [f64; 2]) -> Result<usize> {
    grid.node_at(p).map(|(i, j)| grid.index(i, j)).ok_or(Error::Domain("point is not a grid node"))
}

/// `R·|Du(0)|` against `osc_{B_R} u·(1 + osc_{B_R} u)`; the ratio is reported
/// and must be finite.
pub fn gradient_estimate_report(u: &PotentialField, radius: f64) -> Result<EstimateReport> {
    let grid = *u.grid();
    let ball = ball_region_inside(&grid, [0.0, 0.0], radius, 1)?;
    let c = center_node(&grid, [0.0, 0.0])?;
    let g = u.gradient_at(c);
    let lhs = radius * g[0].hypot(g[1]);
    let (lo, hi) = u.u().min_max_on(&ball);
    let osc = hi - lo;
    let basis = osc * (1.0 + osc);
    let ratio = if lhs == 0.0 { 0.0 } else { lhs / basis };
    let r = EstimateReport::new("gradient_estimate", lhs, basis, 0.0, Some(grid.ij(c)), 0.0)
        .with_note(format!("ratio = {ratio:e}"));
    Ok(if ratio.is_finite() { r } else { r.fail("unbounded ratio") })
}

/// `lhs / max(rhs, 1)` of a doubling report.
pub fn doubling_ratio(report: &EstimateReport) -> f64 {
    report.lhs / report.rhs
}

/// `sup_{B_r(p)} b` against `max(sup_{B_{r/2}(p)} b, 1)`; the ratio is the
/// empirical doubling constant and must be finite.
pub fn doubling_report(u: &PotentialField, p: [f64; 2], r: f64) -> Result<EstimateReport> {
    let grid = *u.grid();
    let outer = ball_region_inside(&grid, p, r, 1)?;
    let inner = ball_region(&grid, p, 0.5 * r)?;
    let b = slope_field(u)?;
    let sup = |reg: &Region| reg.nodes().iter().fold(f64::NEG_INFINITY, |m, &k| m.max(b.values()[k]));
    let lhs = sup(&outer);
    let rhs = sup(&inner).max(1.0);
    let report = EstimateReport::new("doubling", lhs, rhs, 0.0, None, 0.0)
        .with_note(format!("ratio = {:e}", lhs / rhs));
    Ok(if (lhs / rhs).is_finite() { report } else { report.fail("non-finite ratio") })
}

/// `ũ(x) = u(c + r·x)/r²`, the rescaling that maps `B_r(c)` to the unit ball
/// and leaves the Hessian unchanged.
#[derive(Debug, Clone, Copy)]
pub struct Rescaled<'a, P: ?Sized> {
    pub inner: &'a P,
    pub center: [f64; 2],
    pub r: f64,
}

impl<P: AnalyticPotential + ?Sized> AnalyticPotential for Rescaled<'_, P> {
    fn jet(&self, x: [f64; 2]) -> PotentialJet {
        let r = self.r;
        let j = self.inner.jet([self.center[0] + r * x[0], self.center[1] + r * x[1]]);
        let t = j.third;
        PotentialJet {
            value: j.value / (r * r),
            grad: [j.grad[0] / r, j.grad[1] / r],
            hess: j.hess,
            third: crate::geometry::ThirdDerivs {
                d111: t.d111 * r,
                d112: t.d112 * r,
                d122: t.d122 * r,
                d222: t.d222 * r,
            },
            fourth: j.fourth.map(|v| v * r * r),
        }
    }
}

/// `Γ = 1 + sup|ũ| + sup|Dũ|` over the nodes of `B_r(center)` for the
/// rescaled potential `ũ`.
pub fn rescaled_c1_norm(u: &PotentialField, center: [f64; 2], r: f64) -> Result<f64> {
    let ball = ball_region(u.grid(), center, r)?;
    let mut su: f64 = 0.0;
    let mut sg: f64 = 0.0;
    for &k in ball.nodes() {
        su = su.max(u.u().values()[k].abs() / (r * r));
        let g = u.gradient_at(k);
        sg = sg.max(g[0].hypot(g[1]) / r);
    }
    Ok(1.0 + su + sg)
}

/// The doubling test function evaluated on the open unit ball of the
/// rescaled coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    /// `(node index, P)` for every node with `ρ > h/r`.
    pub values: Vec<(usize, f64)>,
    pub max: f64,
    pub argmax: (usize, usize),
    /// Whether the maximiser has a grid neighbour outside the evaluated set.
    pub on_outer_layer: bool,
}

/// `P = ν ln ρ + α(x·Dũ − ũ) + β|Dũ|²/2 + ln max(b̄, 1/γ)` with
/// `x = (y − center)/r`, `ρ = 1 − |x|²`, and `b̄ = b − max_{B_{1/2}} b`.
pub fn test_function_p(
    u: &PotentialField,
    theta: &PhaseField,
    ledger: &ConstantLedger,
    center: [f64; 2],
    r: f64,
) -> Result<TestFunction> {
    let grid = *u.grid();
    if grid != *theta.grid() {
        return Err(Error::GridMismatch);
    }
    ledger.validate()?;
    ball_region_inside(&grid, center, r, 1)?;
    let b = slope_field(u)?;
    let half = ball_region(&grid, center, 0.5 * r)?;
    let bmax = half.nodes().iter().fold(f64::NEG_INFINITY, |m, &k| m.max(b.values()[k]));
    let hr = grid.h() / r;
    let mut values = Vec::new();
    let mut inside = alloc::vec![false; grid.len()];
    for (k, flag) in inside.iter_mut().enumerate() {
        let y = grid.coord_of(k);
        let x = [(y[0] - center[0]) / r, (y[1] - center[1]) / r];
        let rho = 1.0 - (x[0] * x[0] + x[1] * x[1]);
        if rho <= hr {
            continue;
        }
        *flag = true;
        let ut = u.u().values()[k] / (r * r);
        let g = u.gradient_at(k);
        let dut = [g[0] / r, g[1] / r];
        let bbar = b.values()[k] - bmax;
        let p = ledger.nu * rho.ln()
            + ledger.alpha * (x[0] * dut[0] + x[1] * dut[1] - ut)
            + ledger.beta * (dut[0] * dut[0] + dut[1] * dut[1]) / 2.0
            + bbar.max(1.0 / ledger.gamma).ln();
        values.push((k, p));
    }
    let (kmax, max) = values
        .iter()
        .copied()
        .fold((usize::MAX, f64::NEG_INFINITY), |acc, (k, p)| if p > acc.1 { (k, p) } else { acc });
    if kmax == usize::MAX {
        return Err(Error::EmptyRegion);
    }
    let (i, j) = grid.ij(kmax);
    let n = grid.n();
    let on_outer_layer = [(i + 1, j), (i.wrapping_sub(1), j), (i, j + 1), (i, j.wrapping_sub(1))]
        .iter()
        .any(|&(a, c)| a >= n || c >= n || !inside[grid.index(a, c)]);
    Ok(TestFunction { values, max, argmax: (i, j), on_outer_layer })
}

/// Distance from `p` to the nearest node of `region`; used to locate
/// maximisers.
pub fn distance_to(region: &Region, p: [f64; 2]) -> f64 {
    region.nodes().iter().fold(f64::INFINITY, |m, &k| m.min(dist(region.grid().coord_of(k), p)))
}

/// Scalar field of `P` (with `fill` outside the evaluated ball).
pub fn test_function_field(t: &TestFunction, grid: Grid, fill: f64) -> Result<ScalarField> {
    let mut v = alloc::vec![fill; grid.len()];
    for &(k, p) in &t.values {
        v[k] = p;
    }
    ScalarField::new(grid, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::ConstantPhase;
    use crate::solver::PotentialPreset;
    use core::f64::consts::PI;

    fn grid(n: usize) -> Grid {
        Grid::new([-1.0, -1.0], [2.0, 2.0], n).unwrap()
    }

    #[test]
    fn sigma2_quadratic_is_exact() {
        let g = grid(33);
        let u = PotentialField::new(ScalarField::from_fn(g, |[x, y]| 0.7 * x * x / 2.0 - 1.3 * y * y / 2.0)).unwrap();
        let r = sigma2_divergence_check(&u, 1e-12).unwrap();
        assert!(r.pass, "{r:?}");
        assert!((r.lhs - 2.0 * 0.7 * -1.3).abs() < 1e-12);
    }

    #[test]
    fn sigma2_on_region_rejects_the_margin() {
        let g = grid(33);
        let u = PotentialField::new(ScalarField::from_fn(g, |[x, y]| x * x * y)).unwrap();
        assert!(sigma2_divergence_on(&u, &Region::interior(&g, 2).unwrap(), 1.0).is_err());
        let ball = ball_region(&g, [0.0, 0.0], 0.5).unwrap();
        let r = sigma2_divergence_on(&u, &ball, 1.0).unwrap();
        let full = sigma2_divergence_check(&u, 1.0).unwrap();
        assert!(r.worst_defect >= full.worst_defect);
    }

    fn sigma2_defect(n: usize, f: fn([f64; 2]) -> f64) -> f64 {
        let u = PotentialField::new(ScalarField::from_fn(grid(n), f)).unwrap();
        -sigma2_divergence_check(&u, 0.0).unwrap().worst_defect
    }

    #[test]
    fn sigma2_second_order() {
        let f1: fn([f64; 2]) -> f64 = |[x, y]| x * x * y;
        let f2: fn([f64; 2]) -> f64 = |[x, y]| (1.3 * x).sin() * (0.7 * y).cos() + (x - 0.4 * y).cos();
        for f in [f1, f2] {
            let ratio = sigma2_defect(33, f) / sigma2_defect(65, f);
            assert!((3.5..=4.5).contains(&ratio), "{ratio}");
        }
    }

    #[test]
    fn gradient_estimate_examples() {
        let g = grid(33);
        let u = PotentialField::from_analytic(g, &PotentialPreset::PARABOLOID).unwrap();
        let r = gradient_estimate_report(&u, 0.5).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.pass);
        let tilted = PotentialField::from_analytic(g, &PotentialPreset::PARABOLOID.tilted(0.3, 0.0)).unwrap();
        let r = gradient_estimate_report(&tilted, 0.5).unwrap();
        assert!(r.pass && r.lhs > 0.0);
    }

    #[test]
    fn rescaled_gradient_scaling() {
        let p = PotentialPreset { s: 0.2, ..PotentialPreset::PARABOLOID.tilted(0.3, -0.8) };
        for r in [0.25, 0.5, 2.0] {
            let s = Rescaled { inner: &p, center: [0.0, 0.0], r };
            let a = s.jet([0.0, 0.0]).grad;
            let b = p.jet([0.0, 0.0]).grad;
            assert!((a[0].hypot(a[1]) - b[0].hypot(b[1]) / r).abs() < 1e-12);
        }
    }

    #[test]
    fn doubling_constant_hessian_ratio_is_one() {
        let g = grid(33);
        let u = PotentialField::new(ScalarField::from_fn(g, |[x, y]| 1.5 * x * x + x * y + 2.0 * y * y)).unwrap();
        let r = doubling_report(&u, [0.0, 0.0], 0.6).unwrap();
        assert!((doubling_ratio(&r) - 1.0).abs() < 1e-12);
        // b < 1 everywhere: the floor kicks in and the ratio is b itself
        let u = PotentialField::from_analytic(g, &PotentialPreset::quadratic(0.2, 0.0, 0.1)).unwrap();
        let r = doubling_report(&u, [0.0, 0.0], 0.6).unwrap();
        assert!(r.lhs < 1.0 && (r.rhs - 1.0).abs() == 0.0);
    }

    #[test]
    fn test_function_on_harmonic_quadratic() {
        let g = grid(65);
        let u = PotentialField::from_analytic(g, &PotentialPreset::HARMONIC).unwrap();
        let th = PhaseField::sample(g, &ConstantPhase(0.0)).unwrap();
        let gam = rescaled_c1_norm(&u, [0.0, 0.0], 0.8).unwrap();
        let ledger = choose_constants(0.5, gam).unwrap();
        let t = test_function_p(&u, &th, &ledger, [0.0, 0.0], 0.8).unwrap();
        assert!(t.max.is_finite());
        assert!(!t.on_outer_layer);
        // b̄ ≡ 0 so the last term is ln(1/γ); ln ρ ≤ 0 and the α, β terms are tiny
        assert!((t.max - 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn test_function_bounded_along_family() {
        // Hessians grow tenfold; max P stays bounded by ln(1/γ) + tiny terms.
        let g = grid(65);
        let mut maxes = Vec::new();
        for m in [1.0, 3.0, 10.0] {
            let th = PhaseField::sample(g, &ConstantPhase(PI / 2.0)).unwrap();
            // exact solutions: arctan m + arctan(1/m) = π/2
            let exact = PotentialField::from_analytic(g, &PotentialPreset::quadratic(m, 0.0, 1.0 / m)).unwrap();
            let u = PotentialField::new(exact.u().clone()).unwrap();
            let gam = rescaled_c1_norm(&u, [0.0, 0.0], 0.8).unwrap();
            let ledger = choose_constants(0.5, gam).unwrap();
            let t = test_function_p(&u, &th, &ledger, [0.0, 0.0], 0.8).unwrap();
            assert!(!t.on_outer_layer);
            maxes.push(t.max);
        }
        assert!(maxes.iter().all(|&m| m < 2f64.ln() + 1e-6), "{maxes:?}");
    }
}
