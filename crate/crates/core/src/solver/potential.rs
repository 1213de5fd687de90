//! Potentials `u` with cached derivatives, and analytic potentials used as
//! exact solutions.

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::Result;
use crate::geometry::{Sym2, ThirdDerivs};
use crate::grid::{diff, Grid, ScalarField};

/// A potential sampled on a grid together with its first, second and third
/// derivatives.
///
/// Derivatives come either from finite differences of `u`
/// ([`PotentialField::new`]) or from an analytic formula
/// ([`PotentialField::from_analytic`]).
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    u: ScalarField,
    du: [ScalarField; 2],
    /// `(u_xx, u_xy, u_yy)`.
    d2u: [ScalarField; 3],
    /// `(u_xxx, u_xxy, u_xyy, u_yyy)`.
    d3u: [ScalarField; 4],
}

impl PotentialField {
    /// Differentiates `u` numerically.
    pub fn new(u: ScalarField) -> Result<Self> {
        Ok(Self {
            du: [diff(&u, [1, 0])?, diff(&u, [0, 1])?],
            d2u: [diff(&u, [2, 0])?, diff(&u, [1, 1])?, diff(&u, [0, 2])?],
            d3u: [
                diff(&u, [3, 0])?,
                diff(&u, [2, 1])?,
                diff(&u, [1, 2])?,
                diff(&u, [0, 3])?,
            ],
            u,
        })
    }

    /// Samples an analytic potential and its exact derivatives.
    pub fn from_analytic(grid: Grid, p: &dyn AnalyticPotential) -> Result<Self> {
        let n = grid.len();
        let mut buf: [alloc::vec::Vec<f64>; 10] = core::array::from_fn(|_| alloc::vec![0.0; n]);
        for k in 0..n {
            let j = p.jet(grid.coord_of(k));
            let vals = [
                j.value, j.grad[0], j.grad[1], j.hess.xx, j.hess.xy, j.hess.yy, j.third.d111,
                j.third.d112, j.third.d122, j.third.d222,
            ];
            for (b, v) in buf.iter_mut().zip(vals) {
                b[k] = v;
            }
        }
        let [u, ux, uy, uxx, uxy, uyy, a, b, c, d] = buf.map(|v| ScalarField::new(grid, v));
        Ok(Self {
            u: u?,
            du: [ux?, uy?],
            d2u: [uxx?, uxy?, uyy?],
            d3u: [a?, b?, c?, d?],
        })
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    pub fn u(&self) -> &ScalarField {
        &self.u
    }

    /// `(u_x, u_y)` fields.
    pub fn gradient(&self) -> &[ScalarField; 2] {
        &self.du
    }

    #[inline]
    pub fn gradient_at(&self, k: usize) -> [f64; 2] {
        [self.du[0].values()[k], self.du[1].values()[k]]
    }

    #[inline]
    pub fn hessian_at(&self, k: usize) -> Sym2 {
        Sym2::new(
            self.d2u[0].values()[k],
            self.d2u[1].values()[k],
            self.d2u[2].values()[k],
        )
    }

    #[inline]
    pub fn third_at(&self, k: usize) -> ThirdDerivs {
        ThirdDerivs {
            d111: self.d3u[0].values()[k],
            d112: self.d3u[1].values()[k],
            d122: self.d3u[2].values()[k],
            d222: self.d3u[3].values()[k],
        }
    }

    /// The potential `−u`, which solves the equation with phase `−Θ`.
    pub fn negated(&self) -> Self {
        Self {
            u: self.u.negated(),
            du: self.du.each_ref().map(ScalarField::negated),
            d2u: self.d2u.each_ref().map(ScalarField::negated),
            d3u: self.d3u.each_ref().map(ScalarField::negated),
        }
    }
}

/// Value and derivatives up to fourth order of a potential at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PotentialJet {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: Sym2,
    pub third: ThirdDerivs,
    /// `(u_xxxx, u_xxxy, u_xxyy, u_xyyy, u_yyyy)`.
    pub fourth: [f64; 5],
}

/// A potential with closed-form derivatives through order four.
pub trait AnalyticPotential: Sync {
    fn jet(&self, p: [f64; 2]) -> PotentialJet;
}

/// `u = a·x²/2 + b·xy + c·y²/2 + p·x + q·y + s·sin x·sin y + r4·(x²+y²)²`
/// `+ k30·x³/6 + k21·x²y/2 + k12·xy²/2 + k03·y³/6 + w·ψ(x)·ψ(y)`.
///
/// `ψ(t) = t²/2 + t³/6 − t⁴/12 − t⁵/20` has `ψ″(±1) = 0`, so the `w` term leaves
/// the tangential second derivatives of the data at the corners of `[−1, 1]²`
/// untouched.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PotentialPreset {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub p: f64,
    pub q: f64,
    pub s: f64,
    pub r4: f64,
    /// `[k30, k21, k12, k03]`.
    pub cubic: [f64; 4],
    pub w: f64,
}

impl PotentialPreset {
    /// `(x² − y²)/2`.
    pub const HARMONIC: Self = Self::quadratic(1.0, 0.0, -1.0);
    /// `(x² + y²)/2`.
    pub const PARABOLOID: Self = Self::quadratic(1.0, 0.0, 1.0);
    /// `(x² + y²)/2 + 0.1·sin x·sin y`.
    pub const MANUFACTURED: Self = Self { s: 0.1, ..Self::PARABOLOID };

    pub const fn quadratic(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c, p: 0.0, q: 0.0, s: 0.0, r4: 0.0, cubic: [0.0; 4], w: 0.0 }
    }

    /// Same potential with an added linear tilt `p·x + q·y`.
    pub fn tilted(mut self, p: f64, q: f64) -> Self {
        self.p += p;
        self.q += q;
        self
    }
}

/// `k`-th derivative of `ψ`.
fn dpsi(t: f64, k: usize) -> f64 {
    let t2 = t * t;
    match k {
        0 => t2 / 2.0 + t2 * t / 6.0 - t2 * t2 / 12.0 - t2 * t2 * t / 20.0,
        1 => t + t2 / 2.0 - t2 * t / 3.0 - t2 * t2 / 4.0,
        2 => (1.0 + t) * (1.0 - t2),
        3 => 1.0 - 2.0 * t - 3.0 * t2,
        4 => -2.0 - 6.0 * t,
        _ => 0.0,
    }
}

/// `k`-th derivative of `sin`.
fn dsin(t: (f64, f64), k: usize) -> f64 {
    let (s, c) = t;
    match k % 4 {
        0 => s,
        1 => c,
        2 => -s,
        _ => -c,
    }
}

impl AnalyticPotential for PotentialPreset {
    fn jet(&self, pt: [f64; 2]) -> PotentialJet {
        let [x, y] = pt;
        let (sx, sy) = (x.sin_cos(), y.sin_cos());
        let tr = |m: usize, n: usize| self.s * dsin(sx, m) * dsin(sy, n) + self.w * dpsi(x, m) * dpsi(y, n);
        let r = self.r4;
        let [k30, k21, k12, k03] = self.cubic;
        let (x2, y2) = (x * x, y * y);
        PotentialJet {
            value: 0.5 * self.a * x2 + self.b * x * y + 0.5 * self.c * y2 + self.p * x + self.q * y
                + tr(0, 0)
                + r * (x2 + y2) * (x2 + y2)
                + (k30 * x2 * x + 3.0 * k21 * x2 * y + 3.0 * k12 * x * y2 + k03 * y2 * y) / 6.0,
            grad: [
                self.a * x + self.b * y + self.p + tr(1, 0) + 4.0 * r * x * (x2 + y2)
                    + 0.5 * k30 * x2 + k21 * x * y + 0.5 * k12 * y2,
                self.b * x + self.c * y + self.q + tr(0, 1) + 4.0 * r * y * (x2 + y2)
                    + 0.5 * k21 * x2 + k12 * x * y + 0.5 * k03 * y2,
            ],
            hess: Sym2::new(
                self.a + tr(2, 0) + r * (12.0 * x2 + 4.0 * y2) + k30 * x + k21 * y,
                self.b + tr(1, 1) + 8.0 * r * x * y + k21 * x + k12 * y,
                self.c + tr(0, 2) + r * (4.0 * x2 + 12.0 * y2) + k12 * x + k03 * y,
            ),
            third: ThirdDerivs {
                d111: tr(3, 0) + 24.0 * r * x + k30,
                d112: tr(2, 1) + 8.0 * r * y + k21,
                d122: tr(1, 2) + 8.0 * r * x + k12,
                d222: tr(0, 3) + 24.0 * r * y + k03,
            },
            fourth: [
                tr(4, 0) + 24.0 * r,
                tr(3, 1),
                tr(2, 2) + 8.0 * r,
                tr(1, 3),
                tr(0, 4) + 24.0 * r,
            ],
        }
    }
}
