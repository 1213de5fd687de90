//! Mean of the volume form over a ball, against explicit constants.

use core::f64::consts::PI;

use alloc::format;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::volume_field;
use crate::grid::{average, ball_region, ball_region_inside};
use crate::phase::PhaseField;
use crate::report::EstimateReport;
use crate::solver::PotentialField;

use super::cutoffs::c1;

/// Relative slack allowed for quadrature error.
pub const QUADRATURE_MARGIN: f64 = 0.01;

/// `C₁ = 2/√(2−√2)`, `C₂ = 2/R² + (48/π²)‖DΘ‖² + (4/π)‖D²Θ‖`,
/// `C₃ = 1/R + (8/π)‖DΘ‖`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeBoundConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl VolumeBoundConstants {
    pub fn new(radius: f64, d1: f64, d2: f64) -> Result<Self> {
        if !(radius > 0.0 && d1 >= 0.0 && d2 >= 0.0) {
            return Err(Error::Domain("need R > 0 and nonnegative phase norms"));
        }
        Ok(Self {
            c1: c1(),
            c2: 2.0 / (radius * radius) + 48.0 / (PI * PI) * d1 * d1 + 4.0 / PI * d2,
            c3: 1.0 / radius + 8.0 / PI * d1,
        })
    }

    /// `12·C₁·(1 + C₂·g² + C₃·g)` for gradient bound `g`.
    pub fn bound(&self, grad_sup: f64) -> f64 {
        12.0 * self.c1 * (1.0 + self.c2 * grad_sup * grad_sup + self.c3 * grad_sup)
    }
}

/// Compares the average of `V` over `B_R(0)` with `12C₁(1 + C₂‖Du‖² + C₃‖Du‖)`,
/// all sup norms taken over the nodes of `B_{2R}(0)`.
pub fn volume_bound_report(u: &PotentialField, theta: &PhaseField, radius: f64) -> Result<EstimateReport> {
    let grid = *u.grid();
    if grid != *theta.grid() {
        return Err(Error::GridMismatch);
    }
    let outer = ball_region_inside(&grid, [0.0, 0.0], 2.0 * radius, 0)?;
    let inner = ball_region(&grid, [0.0, 0.0], radius)?;
    let v = volume_field(u)?;
    let lhs = average(&v, &inner)?;
    let grad_sup = outer.nodes().iter().fold(0.0f64, |m, &k| {
        let g = u.gradient_at(k);
        m.max(g[0].hypot(g[1]))
    });
    let (d1, d2) = theta.norms_on(&outer);
    let consts = VolumeBoundConstants::new(radius, d1, d2)?;
    let rhs = consts.bound(grad_sup);
    let allowed = rhs * (1.0 + QUADRATURE_MARGIN);
    Ok(EstimateReport::new("volume_bound", lhs, rhs, allowed - lhs, grid.center_ij().into(), 0.0).with_note(format!(
        "C1 = {:.10}, C2 = {:e}, C3 = {:e}, |Du| = {:e}",
        consts.c1, consts.c2, consts.c3, grad_sup
    )))
}
