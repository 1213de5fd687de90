//! The operator `F(D²u) = arctan λ₁ + arctan λ₂`, its residuals and
//! linearisation, and a damped Newton solver for the Dirichlet problem.

mod krylov;
mod potential;

use core::fmt;

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::{hessian_spectrum, inverse_metric, Sym2};
use crate::grid::{Grid, ScalarField};
use crate::phase::{AnalyticScalar, Jet2, PhaseField};

pub use krylov::{bicgstab, KrylovStats, LinearOperator};
pub use potential::{AnalyticPotential, PotentialField, PotentialJet, PotentialPreset};

/// `arctan λ₁ + arctan λ₂` for the eigenvalues of `h`. NaN for non-finite
/// input.
pub fn operator_f(h: Sym2) -> f64 {
    match hessian_spectrum(h) {
        Ok(s) => s.lambda1.atan() + s.lambda2.atan(),
        Err(_) => f64::NAN,
    }
}

/// Coefficients `g^{ab} = (I + H²)⁻¹` of the linearised operator.
pub fn linearized_coeffs(h: Sym2) -> Sym2 {
    inverse_metric(h)
}

fn check_grids(u: &PotentialField, theta: &PhaseField) -> Result<Grid> {
    if u.grid() != theta.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(*u.grid())
}

/// `F(D²u) − Θ` at interior nodes, zero on the boundary.
pub fn residual(u: &PotentialField, theta: &PhaseField) -> Result<ScalarField> {
    let grid = check_grids(u, theta)?;
    let mut out = vec![0.0; grid.len()];
    for (k, o) in out.iter_mut().enumerate() {
        let (i, j) = grid.ij(k);
        if !grid.is_boundary(i, j) {
            *o = operator_f(u.hessian_at(k)) - theta.value_at(k);
        }
    }
    ScalarField::new(grid, out)
}

/// `cos Θ·σ₁ + sin Θ·(σ₂ − 1)` at interior nodes, zero on the boundary.
///
/// Vanishes exactly where the residual does, including at `Θ = ±π/2`.
pub fn tan_form_residual(u: &PotentialField, theta: &PhaseField) -> Result<ScalarField> {
    let grid = check_grids(u, theta)?;
    let mut out = vec![0.0; grid.len()];
    for (k, o) in out.iter_mut().enumerate() {
        let (i, j) = grid.ij(k);
        if !grid.is_boundary(i, j) {
            let h = u.hessian_at(k);
            let (s, c) = theta.value_at(k).sin_cos();
            *o = c * h.trace() + s * (h.det() - 1.0);
        }
    }
    ScalarField::new(grid, out)
}

/// Newton and pseudo-time flow parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    /// Target for the interior residual sup-norm.
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Step reduction factor of the backtracking line search.
    pub damping: f64,
    /// Flow step as a multiple of `h²`.
    pub flow_dt: f64,
    pub flow_steps_max: usize,
    /// Relative residual for each linear solve.
    pub krylov_tol: f64,
    pub krylov_max_iter: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            newton_tol: 1e-10,
            max_newton: 50,
            damping: 0.5,
            flow_dt: 0.2,
            flow_steps_max: 5000,
            krylov_tol: 1e-10,
            krylov_max_iter: 20_000,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.newton_tol >= 0.0 && self.newton_tol.is_finite()) {
            return Err(Error::Domain("newton_tol must be finite and nonnegative"));
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::Domain("damping must lie in (0, 1)"));
        }
        if !(self.flow_dt > 0.0 && self.flow_dt <= 0.25) {
            return Err(Error::Domain("flow_dt must lie in (0, 0.25]"));
        }
        if !(self.krylov_tol > 0.0) {
            return Err(Error::Domain("krylov_tol must be positive"));
        }
        if self.max_newton == 0 || self.flow_steps_max == 0 || self.krylov_max_iter == 0 {
            return Err(Error::Domain("iteration caps must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolvePath {
    NewtonOnly,
    FlowThenNewton,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub u: PotentialField,
    pub residual_sup: f64,
    /// Newton iterations taken.
    pub iterations: usize,
    pub path: SolvePath,
    /// Residual sup-norm after the initial guess and after every Newton step
    /// or flow phase.
    pub history: Vec<f64>,
    pub krylov_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveError {
    Input(Error),
    NotConverged {
        residual: f64,
        tolerance: f64,
        iterations: usize,
        reason: &'static str,
        history: Vec<f64>,
    },
}

impl From<Error> for SolveError {
    fn from(e: Error) -> Self {
        SolveError::Input(e)
    }
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::Input(e) => write!(f, "{e}"),
            SolveError::NotConverged { residual, tolerance, iterations, reason, .. } => write!(
                f,
                "solver did not reach {tolerance:e} after {iterations} Newton steps \
                 (residual {residual:e}): {reason}"
            ),
        }
    }
}

impl core::error::Error for SolveError {}

/// Nine-point discretisation of `v ↦ g^{ab} ∂_ab v` with identity rows on the
/// boundary.
struct Linearization<'a> {
    n: usize,
    inv_h2: f64,
    coeffs: &'a [Sym2],
}

impl Linearization<'_> {
    #[inline]
    fn interior(&self, k: usize) -> bool {
        let (i, j) = (k % self.n, k / self.n);
        i > 0 && j > 0 && i + 1 < self.n && j + 1 < self.n
    }
}

impl LinearOperator for Linearization<'_> {
    fn dim(&self) -> usize {
        self.n * self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        for (k, yk) in y.iter_mut().enumerate() {
            if !self.interior(k) {
                *yk = x[k];
                continue;
            }
            let g = self.coeffs[k];
            let dxx = x[k + 1] - 2.0 * x[k] + x[k - 1];
            let dyy = x[k + n] - 2.0 * x[k] + x[k - n];
            let dxy = 0.25 * (x[k + n + 1] - x[k + n - 1] - x[k - n + 1] + x[k - n - 1]);
            *yk = (g.xx * dxx + 2.0 * g.xy * dxy + g.yy * dyy) * self.inv_h2;
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|k| {
                if self.interior(k) {
                    let g = self.coeffs[k];
                    -2.0 * (g.xx + g.yy) * self.inv_h2
                } else {
                    1.0
                }
            })
            .collect()
    }
}

/// Central-difference Hessian at an interior node.
#[inline]
fn fd_hessian(u: &[f64], n: usize, inv_h2: f64, k: usize) -> Sym2 {
    Sym2::new(
        (u[k + 1] - 2.0 * u[k] + u[k - 1]) * inv_h2,
        0.25 * (u[k + n + 1] - u[k + n - 1] - u[k - n + 1] + u[k - n - 1]) * inv_h2,
        (u[k + n] - 2.0 * u[k] + u[k - n]) * inv_h2,
    )
}

struct Nodal<'a> {
    grid: Grid,
    inv_h2: f64,
    theta: &'a [f64],
}

impl Nodal<'_> {
    fn interior(&self, k: usize) -> bool {
        let (i, j) = self.grid.ij(k);
        !self.grid.is_boundary(i, j)
    }

    /// Residual vector (zero on the boundary) and its sup-norm.
    fn residual(&self, u: &[f64], r: &mut [f64]) -> f64 {
        let n = self.grid.n();
        let mut sup: f64 = 0.0;
        for (k, rk) in r.iter_mut().enumerate() {
            *rk = if self.interior(k) {
                operator_f(fd_hessian(u, n, self.inv_h2, k)) - self.theta[k]
            } else {
                0.0
            };
            if rk.is_nan() {
                return f64::NAN;
            }
            sup = sup.max(rk.abs());
        }
        sup
    }

    fn coeffs(&self, u: &[f64], out: &mut [Sym2]) {
        let n = self.grid.n();
        for (k, c) in out.iter_mut().enumerate() {
            *c = if self.interior(k) {
                linearized_coeffs(fd_hessian(u, n, self.inv_h2, k))
            } else {
                Sym2::IDENTITY
            };
        }
    }
}

/// Solves `F(D²u) = Θ` in the interior with `u = boundary` on the boundary
/// nodes (interior values of `boundary` are ignored).
///
/// Starts from the Poisson problem `Δu = 2 tan(Θ/2)`, then runs damped Newton
/// with a backtracking line search. When a line search is exhausted, or three
/// consecutive steps fail to cut the residual by 10%, an explicit pseudo-time
/// flow `u ← u + dt·(F − Θ)` runs until the residual halves.
pub fn solve_dirichlet(
    theta: &PhaseField,
    boundary: &ScalarField,
    cfg: &SolveConfig,
) -> core::result::Result<SolveResult, SolveError> {
    cfg.validate()?;
    let grid = *theta.grid();
    if *boundary.grid() != grid {
        return Err(Error::GridMismatch.into());
    }
    if !boundary.all_finite() {
        return Err(Error::NonFinite("boundary data").into());
    }
    let len = grid.len();
    let h = grid.h();
    let inv_h2 = 1.0 / (h * h);
    let nodal = Nodal { grid, inv_h2, theta: theta.theta().values() };
    let mut krylov_iterations = 0;

    // Poisson initial guess.
    let mut u: Vec<f64> = (0..len)
        .map(|k| if nodal.interior(k) { 0.0 } else { boundary.values()[k] })
        .collect();
    {
        let ident = vec![Sym2::IDENTITY; len];
        let lap = Linearization { n: grid.n(), inv_h2, coeffs: &ident };
        let mut rhs = vec![0.0; len];
        lap.apply(&u, &mut rhs);
        for (k, r) in rhs.iter_mut().enumerate() {
            *r = if nodal.interior(k) {
                2.0 * (0.5 * nodal.theta[k]).tan() - *r
            } else {
                0.0
            };
        }
        let mut du = vec![0.0; len];
        let st = bicgstab(&lap, &rhs, &mut du, cfg.krylov_tol, cfg.krylov_max_iter);
        krylov_iterations += st.iterations;
        for (a, d) in u.iter_mut().zip(&du) {
            *a += d;
        }
    }

    let mut r = vec![0.0; len];
    let mut rsup = nodal.residual(&u, &mut r);
    let mut history = vec![rsup];
    let mut iterations = 0;
    let mut path = SolvePath::NewtonOnly;
    let mut stall = 0;
    let mut coeffs = vec![Sym2::IDENTITY; len];
    let mut delta = vec![0.0; len];
    let mut trial = vec![0.0; len];
    let mut r_trial = vec![0.0; len];

    let fail = |rsup: f64, iterations: usize, reason: &'static str, history: Vec<f64>| {
        SolveError::NotConverged { residual: rsup, tolerance: cfg.newton_tol, iterations, reason, history }
    };

    loop {
        if rsup.is_nan() {
            return Err(fail(rsup, iterations, "non-finite residual", history));
        }
        if rsup <= cfg.newton_tol {
            let field = ScalarField::new(grid, u).map_err(SolveError::Input)?;
            return Ok(SolveResult {
                u: PotentialField::new(field)?,
                residual_sup: rsup,
                iterations,
                path,
                history,
                krylov_iterations,
            });
        }
        if iterations >= cfg.max_newton {
            return Err(fail(rsup, iterations, "Newton iteration cap reached", history));
        }
        iterations += 1;

        nodal.coeffs(&u, &mut coeffs);
        let jac = Linearization { n: grid.n(), inv_h2, coeffs: &coeffs };
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        delta.iter_mut().for_each(|d| *d = 0.0);
        let st = bicgstab(&jac, &rhs, &mut delta, cfg.krylov_tol, cfg.krylov_max_iter);
        krylov_iterations += st.iterations;

        let mut accepted = false;
        let mut t = 1.0;
        for _ in 0..=MAX_HALVINGS {
            for k in 0..len {
                trial[k] = u[k] + t * delta[k];
            }
            let s = nodal.residual(&trial, &mut r_trial);
            if s < rsup {
                stall = if s > 0.9 * rsup { stall + 1 } else { 0 };
                core::mem::swap(&mut u, &mut trial);
                core::mem::swap(&mut r, &mut r_trial);
                rsup = s;
                history.push(rsup);
                accepted = true;
                break;
            }
            t *= cfg.damping;
        }

        if !accepted || stall >= 3 {
            if rsup <= cfg.newton_tol {
                continue;
            }
            stall = 0;
            path = SolvePath::FlowThenNewton;
            let dt = cfg.flow_dt * h * h;
            let target = 0.5 * rsup;
            for _ in 0..cfg.flow_steps_max {
                for k in 0..len {
                    u[k] += dt * r[k];
                }
                rsup = nodal.residual(&u, &mut r);
                if !(rsup > target) {
                    break;
                }
            }
            history.push(rsup);
            if rsup > target {
                return Err(fail(rsup, iterations, "pseudo-time flow failed to halve the residual", history));
            }
        }
    }
}

const MAX_HALVINGS: usize = 20;

/// Phase `Θ* = F(D²u*)` of an analytic potential, with derivatives by the
/// chain rule through `(I + H²)⁻¹`.
#[derive(Debug, Clone, Copy)]
pub struct ManufacturedPhase<'a, P: ?Sized>(pub &'a P);

type Mat = [[f64; 2]; 2];

fn matmul(a: Mat, b: Mat) -> Mat {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn full(s: Sym2) -> Mat {
    [[s.xx, s.xy], [s.xy, s.yy]]
}

/// `tr(AB)` for symmetric `A`, `B`.
fn tr_prod(a: Sym2, b: Sym2) -> f64 {
    a.xx * b.xx + 2.0 * a.xy * b.xy + a.yy * b.yy
}

impl<P: AnalyticPotential + ?Sized> AnalyticScalar for ManufacturedPhase<'_, P> {
    fn jet(&self, p: [f64; 2]) -> Jet2 {
        let j = self.0.jet(p);
        let h = j.hess;
        let t = j.third;
        let f = j.fourth;
        let hd = [Sym2::new(t.d111, t.d112, t.d122), Sym2::new(t.d112, t.d122, t.d222)];
        let hdd = [
            [Sym2::new(f[0], f[1], f[2]), Sym2::new(f[1], f[2], f[3])],
            [Sym2::new(f[1], f[2], f[3]), Sym2::new(f[2], f[3], f[4])],
        ];
        let ginv = inverse_metric(h);
        let grad = [tr_prod(ginv, hd[0]), tr_prod(ginv, hd[1])];
        // ∂_l G⁻¹ = −G⁻¹ (H_l H + H H_l) G⁻¹
        let dginv = hd.map(|hl| {
            let hh = matmul(full(hl), full(h));
            let m = Sym2::symmetrize([[2.0 * hh[0][0], hh[0][1] + hh[1][0]], [hh[1][0] + hh[0][1], 2.0 * hh[1][1]]]);
            let g = full(ginv);
            Sym2::symmetrize(matmul(matmul(g, full(m)), g)).neg()
        });
        let second = |k: usize, l: usize| tr_prod(dginv[l], hd[k]) + tr_prod(ginv, hdd[k][l]);
        let xy = 0.5 * (second(0, 1) + second(1, 0));
        Jet2 {
            value: operator_f(h),
            grad,
            hess: Sym2::new(second(0, 0), xy, second(1, 1)),
        }
    }
}

/// Phase and boundary data for which `u*` is the exact solution.
///
/// The returned boundary field is the trace of `u*` at every node.
pub fn manufactured_problem(grid: Grid, u_star: &dyn AnalyticPotential) -> Result<(PhaseField, ScalarField)> {
    let phase = PhaseField::sample(grid, &ManufacturedPhase(u_star))?;
    let boundary = ScalarField::new(grid, (0..grid.len()).map(|k| u_star.jet(grid.coord_of(k)).value).collect())?;
    Ok((phase, boundary))
}
