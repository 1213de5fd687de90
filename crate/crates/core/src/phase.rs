//! Admissible phase fields.
//!
//! Phases are built from analytic formulas and carry their exact first and
//! second derivatives at every node; only the potential `u` is ever
//! differenced numerically.

use core::f64::consts::PI;

use alloc::format;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::Sym2;
use crate::grid::{dist, Grid, Region, ScalarField};
use crate::report::{EstimateReport, WorstDefect};

/// Value, gradient and Hessian of a scalar function at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet2 {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: Sym2,
}

/// A smooth scalar function with analytic derivatives up to order two.
pub trait AnalyticScalar {
    fn jet(&self, p: [f64; 2]) -> Jet2;
}

/// `c₀ + c_x·x + c_y·y + ½(c_xx·x² + 2c_xy·xy + c_yy·y²)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QuadraticForm {
    pub c0: f64,
    pub cx: f64,
    pub cy: f64,
    pub cxx: f64,
    pub cxy: f64,
    pub cyy: f64,
}

impl QuadraticForm {
    pub fn linear(c0: f64, cx: f64, cy: f64) -> Self {
        Self { c0, cx, cy, ..Default::default() }
    }
}

impl AnalyticScalar for QuadraticForm {
    fn jet(&self, p: [f64; 2]) -> Jet2 {
        let [x, y] = p;
        Jet2 {
            value: self.c0
                + self.cx * x
                + self.cy * y
                + 0.5 * (self.cxx * x * x + 2.0 * self.cxy * x * y + self.cyy * y * y),
            grad: [
                self.cx + self.cxx * x + self.cxy * y,
                self.cy + self.cxy * x + self.cyy * y,
            ],
            hess: Sym2::new(self.cxx, self.cxy, self.cyy),
        }
    }
}

/// Constant phase `Θ ≡ c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantPhase(pub f64);

impl AnalyticScalar for ConstantPhase {
    fn jet(&self, _: [f64; 2]) -> Jet2 {
        Jet2 { value: self.0, ..Default::default() }
    }
}

/// `Θ = amplitude·s³`, whose gradient `3·amplitude·s²·Ds` vanishes exactly
/// on `{s = 0} = {Θ = 0}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicPhase<S> {
    pub s: S,
    pub amplitude: f64,
}

impl<S: AnalyticScalar> AnalyticScalar for CubicPhase<S> {
    fn jet(&self, p: [f64; 2]) -> Jet2 {
        let sj = self.s.jet(p);
        let (s, ds, d2s) = (sj.value, sj.grad, sj.hess);
        let a = self.amplitude;
        let g = 3.0 * a * s * s;
        let outer = 6.0 * a * s;
        Jet2 {
            value: a * s * s * s,
            grad: [g * ds[0], g * ds[1]],
            hess: Sym2::new(
                outer * ds[0] * ds[0] + g * d2s.xx,
                outer * ds[0] * ds[1] + g * d2s.xy,
                outer * ds[1] * ds[1] + g * d2s.yy,
            ),
        }
    }
}

/// Node samples of a C² function with its gradient and Hessian.
#[derive(Debug, Clone, PartialEq)]
pub struct JetField {
    pub values: ScalarField,
    pub grad: [ScalarField; 2],
    /// `(f_xx, f_xy, f_yy)`.
    pub hess: [ScalarField; 3],
}

impl JetField {
    pub fn sample(grid: Grid, f: &dyn AnalyticScalar) -> Result<Self> {
        let mut v = alloc::vec![0.0; grid.len()];
        let mut gx = v.clone();
        let mut gy = v.clone();
        let mut hxx = v.clone();
        let mut hxy = v.clone();
        let mut hyy = v.clone();
        for k in 0..grid.len() {
            let j = f.jet(grid.coord_of(k));
            v[k] = j.value;
            gx[k] = j.grad[0];
            gy[k] = j.grad[1];
            hxx[k] = j.hess.xx;
            hxy[k] = j.hess.xy;
            hyy[k] = j.hess.yy;
        }
        Ok(Self {
            values: ScalarField::new(grid, v)?,
            grad: [ScalarField::new(grid, gx)?, ScalarField::new(grid, gy)?],
            hess: [
                ScalarField::new(grid, hxx)?,
                ScalarField::new(grid, hxy)?,
                ScalarField::new(grid, hyy)?,
            ],
        })
    }

    pub fn grid(&self) -> &Grid {
        self.values.grid()
    }

    #[inline]
    pub fn gradient_at(&self, k: usize) -> [f64; 2] {
        [self.grad[0].values()[k], self.grad[1].values()[k]]
    }

    #[inline]
    pub fn hessian_at(&self, k: usize) -> Sym2 {
        Sym2::new(
            self.hess[0].values()[k],
            self.hess[1].values()[k],
            self.hess[2].values()[k],
        )
    }

    /// `max |Df|` over the given node set.
    pub fn grad_norm_max(&self, nodes: impl Iterator<Item = usize>) -> f64 {
        nodes.fold(0.0, |m, k| {
            let g = self.gradient_at(k);
            m.max(g[0].hypot(g[1]))
        })
    }

    /// `max ‖D²f‖` (spectral norm) over the given node set.
    pub fn hess_norm_max(&self, nodes: impl Iterator<Item = usize>) -> f64 {
        nodes.fold(0.0, |m, k| m.max(self.hessian_at(k).spectral_norm()))
    }

    pub fn negated(&self) -> Self {
        Self {
            values: self.values.negated(),
            grad: [self.grad[0].negated(), self.grad[1].negated()],
            hess: [self.hess[0].negated(), self.hess[1].negated(), self.hess[2].negated()],
        }
    }

    /// `max(0, f)` with derivatives zeroed where `f ≤ 0`. This is C^{1,1}
    /// whenever `Df = 0` on `{f = 0}`.
    pub fn positive_part(&self) -> Self {
        let mask = |field: &ScalarField| {
            field
                .zip_with(&self.values, |d, v| if v > 0.0 { d } else { 0.0 })
                .expect("same grid")
        };
        Self {
            values: self.values.map(|v| v.max(0.0)),
            grad: [mask(&self.grad[0]), mask(&self.grad[1])],
            hess: [mask(&self.hess[0]), mask(&self.hess[1]), mask(&self.hess[2])],
        }
    }
}

/// Tolerance on `|DΘ|` at nodes with `|Θ| ≤ h²`.
pub fn tol_zero(h: f64) -> f64 {
    10.0 * h
}

/// Admissible phase: `−π < Θ < π` with analytic derivatives and the discrete
/// witness of `DΘ = 0` on `{Θ = 0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseField {
    jet: JetField,
    norm_d1: f64,
    norm_d2: f64,
}

impl PhaseField {
    /// Samples and validates an analytic phase.
    pub fn sample(grid: Grid, theta: &dyn AnalyticScalar) -> Result<Self> {
        Self::from_jet(JetField::sample(grid, theta)?)
    }

    /// Validates sampled phase data.
    pub fn from_jet(jet: JetField) -> Result<Self> {
        let grid = *jet.grid();
        for &v in jet.values.values() {
            if !(v.abs() < PI) {
                return Err(Error::PhaseRange { value: v });
            }
        }
        let h = grid.h();
        let tol = tol_zero(h);
        for k in 0..grid.len() {
            if jet.values.values()[k].abs() <= h * h {
                let g = jet.gradient_at(k);
                let gn = g[0].hypot(g[1]);
                if gn > tol {
                    return Err(Error::ZeroSetGradient { gradient: gn, tolerance: tol });
                }
            }
        }
        let norm_d1 = jet.grad_norm_max(0..grid.len());
        let norm_d2 = jet.hess_norm_max(0..grid.len());
        Ok(Self { jet, norm_d1, norm_d2 })
    }

    pub fn grid(&self) -> &Grid {
        self.jet.grid()
    }

    pub fn theta(&self) -> &ScalarField {
        &self.jet.values
    }

    pub fn jet(&self) -> &JetField {
        &self.jet
    }

    #[inline]
    pub fn value_at(&self, k: usize) -> f64 {
        self.jet.values.values()[k]
    }

    #[inline]
    pub fn gradient_at(&self, k: usize) -> [f64; 2] {
        self.jet.gradient_at(k)
    }

    #[inline]
    pub fn hessian_at(&self, k: usize) -> Sym2 {
        self.jet.hessian_at(k)
    }

    /// `‖DΘ‖∞` over the grid.
    pub fn norm_d1(&self) -> f64 {
        self.norm_d1
    }

    /// `‖D²Θ‖∞` over the grid (spectral norm per node).
    pub fn norm_d2(&self) -> f64 {
        self.norm_d2
    }

    /// `(‖DΘ‖∞, ‖D²Θ‖∞)` restricted to a region.
    pub fn norms_on(&self, region: &Region) -> (f64, f64) {
        (
            self.jet.grad_norm_max(region.nodes().iter().copied()),
            self.jet.hess_norm_max(region.nodes().iter().copied()),
        )
    }

    /// The reflected phase `−Θ`.
    pub fn negated(&self) -> Self {
        Self {
            jet: self.jet.negated(),
            norm_d1: self.norm_d1,
            norm_d2: self.norm_d2,
        }
    }
}

/// `Θ = amplitude·s³` sampled on `grid`.
pub fn build_phase_cubic<S: AnalyticScalar>(grid: Grid, s: S, amplitude: f64) -> Result<PhaseField> {
    PhaseField::sample(grid, &CubicPhase { s, amplitude })
}

/// Named phase families used by the test corpus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseKind {
    /// `Θ ≡ c`.
    Constant(f64),
    /// `Θ ≡ c` with `|c| ≥ π/2 + δ`.
    Supercritical { value: f64, delta: f64 },
    /// `Θ = amplitude·(x + y/2)³`, which changes sign across `x + y/2 = 0`.
    SignChangingCubic { amplitude: f64 },
}

/// Builds one member of a [`PhaseKind`] family.
pub fn build_phase_signed(grid: Grid, kind: PhaseKind) -> Result<PhaseField> {
    match kind {
        PhaseKind::Constant(c) => PhaseField::sample(grid, &ConstantPhase(c)),
        PhaseKind::Supercritical { value, delta } => {
            if !(delta > 0.0) || value.abs() < PI / 2.0 + delta {
                return Err(Error::Domain("supercritical phase needs |c| >= pi/2 + delta, delta > 0"));
            }
            PhaseField::sample(grid, &ConstantPhase(value))
        }
        PhaseKind::SignChangingCubic { amplitude } => {
            build_phase_cubic(grid, QuadraticForm::linear(0.0, 1.0, 0.5), amplitude)
        }
    }
}

/// Checks `|Df(x)|² ≤ 2·f(x)·‖D²f‖∞` at every node of `region`, with the sup
/// norm taken over the whole grid.
pub fn check_interpolation(f: &JetField, region: &Region) -> Result<EstimateReport> {
    if f.grid() != region.grid() {
        return Err(Error::GridMismatch);
    }
    for &k in region.nodes() {
        let v = f.values.values()[k];
        if v < 0.0 {
            return Err(Error::NegativeField { value: v });
        }
    }
    let grid = f.grid();
    let m = f.hess_norm_max(0..grid.len());
    let mut worst = WorstDefect::new();
    let mut scale: f64 = 1.0;
    for &k in region.nodes() {
        let g = f.gradient_at(k);
        let lhs = g[0] * g[0] + g[1] * g[1];
        let rhs = 2.0 * f.values.values()[k] * m;
        scale = scale.max(lhs).max(rhs);
        worst.push(lhs, rhs, grid.ij(k));
    }
    Ok(worst
        .into_report("interpolation", 1e-12 * scale)
        .with_note(format!("sup |D2f| = {m:e}")))
}

/// Boundary-weighted variant `|Dg|² ≤ g²/(1−|x|²) + 2‖D²g‖·g` for
/// `g(x) = f(center + radius·x)` on the open unit ball.
///
/// This is a diagnostic: it is not implied by the interior form near the
/// sphere (a nonnegative linear function vanishing on the sphere violates it).
pub fn check_interpolation_boundary(f: &JetField, center: [f64; 2], radius: f64) -> Result<EstimateReport> {
    if !(radius > 0.0) {
        return Err(Error::Domain("radius must be positive"));
    }
    let grid = *f.grid();
    let inside: alloc::vec::Vec<usize> = (0..grid.len())
        .filter(|&k| dist(grid.coord_of(k), center) < radius)
        .collect();
    if inside.is_empty() {
        return Err(Error::EmptyRegion);
    }
    for &k in &inside {
        let v = f.values.values()[k];
        if v < 0.0 {
            return Err(Error::NegativeField { value: v });
        }
    }
    let m = radius * radius * f.hess_norm_max(inside.iter().copied());
    let mut worst = WorstDefect::new();
    let mut scale: f64 = 1.0;
    for &k in &inside {
        let p = grid.coord_of(k);
        let r = dist(p, center) / radius;
        let g = f.gradient_at(k);
        let v = f.values.values()[k];
        let lhs = radius * radius * (g[0] * g[0] + g[1] * g[1]);
        let rhs = v * v / (1.0 - r * r) + 2.0 * m * v;
        scale = scale.max(lhs).max(rhs);
        worst.push(lhs, rhs, grid.ij(k));
    }
    Ok(worst.into_report("interpolation_boundary", 1e-12 * scale))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Grid {
        Grid::new([-1.0, -1.0], [2.0, 2.0], n).unwrap()
    }

    #[test]
    fn zero_phase_has_zero_norms() {
        let p = build_phase_cubic(grid(17), QuadraticForm::default(), 1.0).unwrap();
        assert_eq!(p.theta().max_abs(), 0.0);
        assert_eq!((p.norm_d1(), p.norm_d2()), (0.0, 0.0));
    }

    #[test]
    fn cubic_in_x_matches_analytic_derivative() {
        let g = grid(17);
        let p = build_phase_cubic(g, QuadraticForm::linear(0.0, 1.0, 0.0), 1.0).unwrap();
        for k in 0..g.len() {
            let [x, _] = g.coord_of(k);
            assert_eq!(p.value_at(k), x * x * x);
            assert_eq!(p.gradient_at(k), [3.0 * x * x, 0.0]);
            if x == 0.0 {
                assert_eq!(p.gradient_at(k), [0.0, 0.0]);
            }
        }
    }

    #[test]
    fn phase_range_violation() {
        assert!(matches!(
            build_phase_signed(grid(9), PhaseKind::Constant(PI)),
            Err(Error::PhaseRange { .. })
        ));
        assert!(build_phase_cubic(grid(9), QuadraticForm::linear(0.0, 2.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn zero_set_witness_rejects_linear_phase() {
        // Θ = x changes sign with nonzero slope.
        let lin = QuadraticForm::linear(0.0, 1.0, 0.0);
        assert!(matches!(
            PhaseField::sample(grid(33), &lin),
            Err(Error::ZeroSetGradient { .. })
        ));
    }

    #[test]
    fn signed_families() {
        let g = grid(33);
        let p = build_phase_signed(g, PhaseKind::Constant(PI / 2.0)).unwrap();
        assert_eq!((p.norm_d1(), p.norm_d2()), (0.0, 0.0));
        let p = build_phase_signed(g, PhaseKind::Constant(-3.0 * PI / 4.0)).unwrap();
        assert!(p.value_at(0) <= -PI / 2.0);
        assert!(build_phase_signed(g, PhaseKind::Supercritical { value: 1.7, delta: 0.1 }).is_ok());
        assert!(build_phase_signed(g, PhaseKind::Supercritical { value: 1.6, delta: 0.1 }).is_err());
        let p = build_phase_signed(g, PhaseKind::SignChangingCubic { amplitude: 0.5 }).unwrap();
        let (lo, hi) = p.theta().min_max_on(&Region::full(&g));
        assert!(lo < 0.0 && hi > 0.0);
    }

    #[test]
    fn interpolation_examples() {
        let g = grid(65);
        let region = Region::interior(&g, 3).unwrap();
        let c = JetField::sample(g, &ConstantPhase(0.7)).unwrap();
        let r = check_interpolation(&c, &region).unwrap();
        assert!(r.pass && r.worst_defect == 0.0);

        // f = x²: equality at every node.
        let sq = QuadraticForm { cxx: 2.0, ..Default::default() };
        let r = check_interpolation(&JetField::sample(g, &sq).unwrap(), &region).unwrap();
        assert!(r.pass);
        assert!(r.worst_defect.abs() < 1e-12, "{}", r.worst_defect);

        let cubic = build_phase_cubic(g, QuadraticForm::linear(0.0, 1.0, 0.0), 1.0).unwrap();
        let r = check_interpolation(&cubic.jet().positive_part(), &region).unwrap();
        assert!(r.pass);

        let s = build_phase_cubic(g, QuadraticForm::linear(0.0, 1.0, 0.5), 0.3).unwrap();
        for f in [s.jet().positive_part(), s.jet().negated().positive_part()] {
            assert!(check_interpolation(&f, &region).unwrap().pass);
        }
    }

    #[test]
    fn interpolation_rejects_negative_input() {
        let g = grid(17);
        let f = JetField::sample(g, &ConstantPhase(-1.0)).unwrap();
        assert!(check_interpolation(&f, &Region::full(&g)).is_err());
    }

    /// `|x − x₀|` smoothed at a scale far below `h`, kink between nodes.
    struct SmoothedKink {
        x0: f64,
        delta: f64,
    }

    impl AnalyticScalar for SmoothedKink {
        fn jet(&self, p: [f64; 2]) -> Jet2 {
            let d = p[0] - self.x0;
            let r = d.hypot(self.delta);
            Jet2 {
                value: r,
                grad: [d / r, 0.0],
                hess: Sym2::new(self.delta * self.delta / (r * r * r), 0.0, 0.0),
            }
        }
    }

    #[test]
    fn interpolation_negative_control() {
        let g = grid(65);
        let h = g.h();
        let kink = SmoothedKink { x0: 0.5 * h, delta: 0.1 * h };
        let f = JetField::sample(g, &kink).unwrap();
        let r = check_interpolation(&f, &Region::interior(&g, 3).unwrap()).unwrap();
        assert!(!r.pass);
    }

    #[test]
    fn boundary_variant_diagnostic() {
        let g = grid(65);
        let cubic = build_phase_cubic(g, QuadraticForm::linear(0.0, 1.0, 0.0), 1.0).unwrap();
        let r = check_interpolation_boundary(&cubic.jet().positive_part(), [0.0, 0.0], 0.9).unwrap();
        assert!(r.pass);
        // Linear function vanishing on the left edge of the ball.
        let lin = JetField::sample(g, &QuadraticForm::linear(0.9, 1.0, 0.0)).unwrap();
        let r = check_interpolation_boundary(&lin, [0.0, 0.0], 0.9).unwrap();
        assert!(!r.pass);
    }
}
