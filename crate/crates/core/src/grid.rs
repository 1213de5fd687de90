//! Uniform square grids, finite differences and quadrature.
//!
//! Nodes are stored row-major: node `(i, j)` sits at
//! `origin + (i·h, j·h)` and has flat index `j·n + i`, so `i` runs along the
//! first coordinate axis.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Uniform grid on a square with an odd number of nodes per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    origin: [f64; 2],
    extent: f64,
    n: usize,
    h: f64,
}

impl Grid {
    /// Builds a grid over `[origin, origin + extent]`.
    ///
    /// `n` must be odd and at least 9 so the centre of the square is a node
    /// and every stencil has room near the boundary.
    pub fn new(origin: [f64; 2], extent: [f64; 2], n: usize) -> Result<Self> {
        if n < 9 {
            return Err(Error::InvalidGrid("need at least 9 nodes per axis"));
        }
        if n % 2 == 0 {
            return Err(Error::InvalidGrid("node count per axis must be odd"));
        }
        if !(origin[0].is_finite() && origin[1].is_finite()) {
            return Err(Error::NonFinite("grid origin"));
        }
        if !(extent[0] > 0.0 && extent[0].is_finite()) {
            return Err(Error::InvalidGrid("extent must be positive"));
        }
        if extent[0] != extent[1] {
            return Err(Error::InvalidGrid("extent must be square"));
        }
        Ok(Self {
            origin,
            extent: extent[0],
            n,
            h: extent[0] / (n - 1) as f64,
        })
    }

    /// Square grid centred at `center` with side `2·half_width`.
    pub fn centered(center: [f64; 2], half_width: f64, n: usize) -> Result<Self> {
        Self::new(
            [center[0] - half_width, center[1] - half_width],
            [2.0 * half_width, 2.0 * half_width],
            n,
        )
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }

    #[inline]
    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    #[inline]
    pub fn extent(&self) -> f64 {
        self.extent
    }

    /// Total number of nodes.
    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        j * self.n + i
    }

    #[inline]
    pub fn ij(&self, idx: usize) -> (usize, usize) {
        (idx % self.n, idx / self.n)
    }

    #[inline]
    pub fn coord(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + i as f64 * self.h,
            self.origin[1] + j as f64 * self.h,
        ]
    }

    #[inline]
    pub fn coord_of(&self, idx: usize) -> [f64; 2] {
        let (i, j) = self.ij(idx);
        self.coord(i, j)
    }

    /// Centre node index pair.
    pub fn center_ij(&self) -> (usize, usize) {
        (self.n / 2, self.n / 2)
    }

    pub fn center(&self) -> [f64; 2] {
        [
            self.origin[0] + 0.5 * self.extent,
            self.origin[1] + 0.5 * self.extent,
        ]
    }

    /// Node whose coordinates coincide with `p` up to `1e-9·h`, if any.
    pub fn node_at(&self, p: [f64; 2]) -> Option<(usize, usize)> {
        let fi = (p[0] - self.origin[0]) / self.h;
        let fj = (p[1] - self.origin[1]) / self.h;
        let (ri, rj) = (fi.round(), fj.round());
        if (fi - ri).abs() > 1e-9 || (fj - rj).abs() > 1e-9 {
            return None;
        }
        if ri < 0.0 || rj < 0.0 || ri >= self.n as f64 || rj >= self.n as f64 {
            return None;
        }
        Some((ri as usize, rj as usize))
    }

    /// Number of node layers between `(i, j)` and the nearest grid edge.
    #[inline]
    pub fn margin_of(&self, i: usize, j: usize) -> usize {
        let last = self.n - 1;
        i.min(j).min(last - i).min(last - j)
    }

    /// Distance from a point to the grid boundary (negative outside).
    pub fn boundary_distance(&self, p: [f64; 2]) -> f64 {
        let lo = [p[0] - self.origin[0], p[1] - self.origin[1]];
        let hi = [self.extent - lo[0], self.extent - lo[1]];
        lo[0].min(lo[1]).min(hi[0]).min(hi[1])
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        self.margin_of(i, j) == 0
    }
}

/// Node values on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("scalar field"));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: alloc::vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self {
            grid,
            values: alloc::vec![c; grid.len()],
        }
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: Grid, mut f: impl FnMut([f64; 2]) -> f64) -> Self {
        let values = (0..grid.len()).map(|k| f(grid.coord_of(k))).collect();
        Self { grid, values }
    }

    /// Wraps raw values without the finiteness scan. Used internally where
    /// values come from arithmetic on finite fields.
    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    /// `a·self + b·other`.
    pub fn axpby(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.zip_with(other, |x, y| a * x + b * y)
    }

    pub fn negated(&self) -> Self {
        self.map(|v| -v)
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Maximum of `|value|` over all nodes.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Maximum of `|value|` over the nodes of `region`.
    pub fn max_abs_on(&self, region: &Region) -> f64 {
        region
            .nodes()
            .iter()
            .fold(0.0, |m, &k| m.max(self.values[k].abs()))
    }

    /// `(min, max)` over the nodes of `region`.
    pub fn min_max_on(&self, region: &Region) -> (f64, f64) {
        region
            .nodes()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &k| {
                (lo.min(self.values[k]), hi.max(self.values[k]))
            })
    }

    /// First-order or higher partial derivative; see [`diff`].
    pub fn diff(&self, order: [u8; 2]) -> Result<Self> {
        diff(self, order)
    }
}

/// Which geometric shape a [`Region`] was rasterised from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegionShape {
    Disk { center: [f64; 2], radius: f64 },
    Annulus { center: [f64; 2], inner: f64, outer: f64 },
    Rectangle,
    /// All nodes at least `margin` layers from the grid edge.
    Interior { margin: usize },
}

/// Set of node indices together with the shape it came from.
///
/// Node indices are always sorted ascending (row-major order).
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    grid: Grid,
    nodes: Vec<usize>,
    shape: RegionShape,
}

impl Region {
    fn from_predicate(grid: &Grid, shape: RegionShape, keep: impl Fn(usize, usize) -> bool) -> Result<Self> {
        let mut nodes = Vec::new();
        for j in 0..grid.n() {
            for i in 0..grid.n() {
                if keep(i, j) {
                    nodes.push(grid.index(i, j));
                }
            }
        }
        if nodes.is_empty() {
            return Err(Error::EmptyRegion);
        }
        Ok(Self {
            grid: *grid,
            nodes,
            shape,
        })
    }

    /// Every node of the grid.
    pub fn full(grid: &Grid) -> Self {
        Self {
            grid: *grid,
            nodes: (0..grid.len()).collect(),
            shape: RegionShape::Rectangle,
        }
    }

    /// Nodes at least `margin` layers away from the grid boundary.
    pub fn interior(grid: &Grid, margin: usize) -> Result<Self> {
        Self::from_predicate(grid, RegionShape::Interior { margin }, |i, j| {
            grid.margin_of(i, j) >= margin
        })
    }

    /// Nodes with `inner ≤ |x − center| ≤ outer`.
    pub fn annulus(grid: &Grid, center: [f64; 2], inner: f64, outer: f64) -> Result<Self> {
        if !(inner >= 0.0 && outer >= inner) {
            return Err(Error::Domain("annulus radii must satisfy 0 <= inner <= outer"));
        }
        Self::from_predicate(grid, RegionShape::Annulus { center, inner, outer }, |i, j| {
            let d = dist(grid.coord(i, j), center);
            d >= inner && d <= outer
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn shape(&self) -> RegionShape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Quadrature weight of node `idx` (in units of `h²`).
    ///
    /// The full rectangle uses trapezoid weights (½ on edges, ¼ at corners) so
    /// it integrates over exactly the square; every other region weights its
    /// nodes by 1.
    #[inline]
    pub fn weight(&self, idx: usize) -> f64 {
        match self.shape {
            RegionShape::Rectangle => {
                let (i, j) = self.grid.ij(idx);
                let last = self.grid.n() - 1;
                let w = |k: usize| if k == 0 || k == last { 0.5 } else { 1.0 };
                w(i) * w(j)
            }
            _ => 1.0,
        }
    }

    /// Discrete area `h²·Σ weights`, the denominator used for averages.
    pub fn area(&self) -> f64 {
        let w: f64 = self.nodes.iter().map(|&k| self.weight(k)).sum();
        self.grid.h() * self.grid.h() * w
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.nodes.binary_search(&idx).is_ok()
    }

    /// Keeps only nodes at least `margin` layers from the grid boundary.
    pub fn restrict_margin(&self, margin: usize) -> Result<Self> {
        let nodes: Vec<usize> = self
            .nodes
            .iter()
            .copied()
            .filter(|&k| {
                let (i, j) = self.grid.ij(k);
                self.grid.margin_of(i, j) >= margin
            })
            .collect();
        if nodes.is_empty() {
            return Err(Error::EmptyRegion);
        }
        Ok(Self {
            grid: self.grid,
            nodes,
            shape: self.shape,
        })
    }
}

#[inline]
pub(crate) fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Nodes of the closed disk `|x − center| ≤ radius`.
pub fn ball_region(grid: &Grid, center: [f64; 2], radius: f64) -> Result<Region> {
    if !(radius >= 0.0) || !radius.is_finite() {
        return Err(Error::Domain("ball radius must be finite and nonnegative"));
    }
    // Absorb rounding in node coordinates so radius 0 at a node is a singleton.
    let slack = 1e-12 * grid.h();
    Region::from_predicate(grid, RegionShape::Disk { center, radius }, |i, j| {
        dist(grid.coord(i, j), center) <= radius + slack
    })
}

/// Disk that must keep `margin` node layers between itself and the grid edge.
pub fn ball_region_inside(grid: &Grid, center: [f64; 2], radius: f64, margin: usize) -> Result<Region> {
    if grid.boundary_distance(center) < radius + margin as f64 * grid.h() - 1e-12 * grid.h() {
        return Err(Error::RegionOutsideGrid);
    }
    ball_region(grid, center, radius)
}

/// Midpoint-rule sum `h²·Σ w·f` over the nodes of `region`, with the node
/// weights of [`Region::weight`].
pub fn integrate(field: &ScalarField, region: &Region) -> Result<f64> {
    if field.grid() != region.grid() {
        return Err(Error::GridMismatch);
    }
    let h = field.grid().h();
    let sum: f64 = region
        .nodes()
        .iter()
        .map(|&k| region.weight(k) * field.values()[k])
        .sum();
    Ok(h * h * sum)
}

/// `integrate(field, region) / region.area()`.
pub fn average(field: &ScalarField, region: &Region) -> Result<f64> {
    Ok(integrate(field, region)? / region.area())
}

/// Partial derivative of multi-index `order = (a, b)`, i.e. `∂ˣᵃ ∂ʸᵇ f`.
///
/// Interior nodes use central differences; nodes too close to the edge for
/// the central stencil use one-sided second-order formulas. Mixed derivatives
/// compose the one-dimensional stencils axis by axis.
pub fn diff(field: &ScalarField, order: [u8; 2]) -> Result<ScalarField> {
    let total = order[0] as usize + order[1] as usize;
    if total == 0 || total > 3 {
        return Err(Error::InvalidOrder(order));
    }
    let mut out = field.clone();
    if order[0] > 0 {
        out = diff_axis(&out, 0, order[0]);
    }
    if order[1] > 0 {
        out = diff_axis(&out, 1, order[1]);
    }
    Ok(out)
}

fn diff_axis(field: &ScalarField, axis: usize, order: u8) -> ScalarField {
    let grid = *field.grid();
    let n = grid.n();
    let (stride, step) = if axis == 0 { (n, 1) } else { (1, n) };
    let mut out = alloc::vec![0.0; grid.len()];
    let mut line = alloc::vec![0.0; n];
    let mut dline = alloc::vec![0.0; n];
    for l in 0..n {
        let base = l * stride;
        for (k, v) in line.iter_mut().enumerate() {
            *v = field.values()[base + k * step];
        }
        diff_line(&line, grid.h(), order, &mut dline);
        for (k, v) in dline.iter().enumerate() {
            out[base + k * step] = *v;
        }
    }
    ScalarField::from_raw(grid, out)
}

/// One-dimensional stencil application along a line of `n ≥ 6` samples.
pub(crate) fn diff_line(f: &[f64], h: f64, order: u8, out: &mut [f64]) {
    let n = f.len();
    debug_assert!(n >= 6 && out.len() == n);
    match order {
        1 => {
            let s = 1.0 / (2.0 * h);
            out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) * s;
            for i in 1..n - 1 {
                out[i] = (f[i + 1] - f[i - 1]) * s;
            }
            out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) * s;
        }
        2 => {
            let s = 1.0 / (h * h);
            out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) * s;
            for i in 1..n - 1 {
                out[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) * s;
            }
            out[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) * s;
        }
        3 => {
            let s = 1.0 / (2.0 * h * h * h);
            for i in 0..n {
                out[i] = if i < 2 {
                    (-5.0 * f[i] + 18.0 * f[i + 1] - 24.0 * f[i + 2] + 14.0 * f[i + 3]
                        - 3.0 * f[i + 4])
                        * s
                } else if i + 2 >= n {
                    (5.0 * f[i] - 18.0 * f[i - 1] + 24.0 * f[i - 2] - 14.0 * f[i - 3]
                        + 3.0 * f[i - 4])
                        * s
                } else {
                    (f[i + 2] - 2.0 * f[i + 1] + 2.0 * f[i - 1] - f[i - 2]) * s
                };
            }
        }
        _ => unreachable!("orders are validated by diff"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn unit_grid(n: usize) -> Grid {
        Grid::new([-1.0, -1.0], [2.0, 2.0], n).unwrap()
    }

    #[test]
    fn make_grid_rejects_bad_parameters() {
        assert!(Grid::new([-1.0, -1.0], [2.0, 2.0], 5).is_err());
        assert!(Grid::new([-1.0, -1.0], [2.0, 2.0], 10).is_err());
        assert!(Grid::new([-1.0, -1.0], [2.0, 3.0], 9).is_err());
        assert!(Grid::new([-1.0, -1.0], [0.0, 0.0], 9).is_err());
    }

    #[test]
    fn make_grid_spacing() {
        assert_eq!(unit_grid(9).h(), 0.25);
        let g = Grid::new([-2.0, -2.0], [4.0, 4.0], 129).unwrap();
        assert_eq!(g.h(), 0.03125);
        let (ci, cj) = g.center_ij();
        assert_eq!(g.coord(ci, cj), [0.0, 0.0]);
        assert_eq!(g.center(), [0.0, 0.0]);
    }

    #[test]
    fn diff_rejects_orders() {
        let f = ScalarField::zeros(unit_grid(9));
        assert!(diff(&f, [0, 0]).is_err());
        assert!(diff(&f, [2, 2]).is_err());
        assert!(diff(&f, [4, 0]).is_err());
    }

    #[test]
    fn second_derivative_exact_on_quadratic() {
        let g = unit_grid(17);
        let f = ScalarField::from_fn(g, |p| p[0] * p[0]);
        let d = diff(&f, [2, 0]).unwrap();
        for &v in d.values() {
            assert!((v - 2.0).abs() < 1e-11, "{v}");
        }
    }

    #[test]
    fn third_derivative_exact_on_cubic() {
        let g = unit_grid(17);
        let f = ScalarField::from_fn(g, |p| p[0] * p[0] * p[0]);
        let d = diff(&f, [3, 0]).unwrap();
        for &v in d.values() {
            assert!((v - 6.0).abs() < 1e-9, "{v}");
        }
        let f = ScalarField::from_fn(g, |p| p[1] * p[1] * p[1]);
        let d = diff(&f, [0, 3]).unwrap();
        for &v in d.values() {
            assert!((v - 6.0).abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn mixed_derivatives_exact_on_polynomials() {
        let g = unit_grid(13);
        let f = ScalarField::from_fn(g, |p| p[0] * p[0] * p[1] + 3.0 * p[0] * p[1]);
        let dxy = diff(&f, [1, 1]).unwrap();
        let dxxy = diff(&f, [2, 1]).unwrap();
        for k in 0..g.len() {
            let [x, _] = g.coord_of(k);
            assert!((dxy.values()[k] - (2.0 * x + 3.0)).abs() < 1e-11);
            assert!((dxxy.values()[k] - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn first_derivative_is_second_order() {
        // Error of d/dx sin x against cos x drops by ~4 when h halves.
        let mut errs = [0.0; 2];
        for (e, n) in errs.iter_mut().zip([33, 65]) {
            let g = unit_grid(n);
            let f = ScalarField::from_fn(g, |p| p[0].sin());
            let d = diff(&f, [1, 0]).unwrap();
            let interior = Region::interior(&g, 3).unwrap();
            *e = interior
                .nodes()
                .iter()
                .map(|&k| (d.values()[k] - g.coord_of(k)[0].cos()).abs())
                .fold(0.0, f64::max);
        }
        let ratio = errs[0] / errs[1];
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn ball_region_edge_cases() {
        let g = unit_grid(9);
        let single = ball_region(&g, [0.0, 0.0], 0.0).unwrap();
        assert_eq!(single.len(), 1);
        let all = ball_region(&g, [0.0, 0.0], 3.0).unwrap();
        assert_eq!(all.len(), g.len());
        assert!(ball_region(&g, [10.0, 10.0], 0.5).is_err());
    }

    #[test]
    fn unit_disk_area_fraction() {
        let g = unit_grid(129);
        let disk = ball_region(&g, [0.0, 0.0], 1.0).unwrap();
        let frac = disk.len() as f64 / g.len() as f64;
        assert!((frac / (PI / 4.0) - 1.0).abs() < 0.02, "{frac}");
    }

    #[test]
    fn quadrature_examples() {
        let g = unit_grid(129);
        let full = Region::full(&g);
        let one = ScalarField::constant(g, 1.0);
        let total = integrate(&one, &full).unwrap();
        assert!((total - 4.0).abs() <= 4.0 * 2.0 * g.h());
        assert_eq!(average(&one, &full).unwrap(), 1.0);
        let disk = ball_region(&g, [0.0, 0.0], 0.5).unwrap();
        assert_eq!(average(&one, &disk).unwrap(), 1.0);

        let x = ScalarField::from_fn(g, |p| p[0]);
        let disk = ball_region(&g, [0.0, 0.0], 0.7).unwrap();
        assert!(integrate(&x, &disk).unwrap().abs() < 1e-14);

        let x2 = ScalarField::from_fn(g, |p| p[0] * p[0]);
        let approx = integrate(&x2, &full).unwrap();
        assert!((approx - 4.0 / 3.0).abs() < 1e-3, "{approx}");
    }

    #[test]
    fn diff_is_linear() {
        let g = unit_grid(17);
        let f = ScalarField::from_fn(g, |p| (p[0] * 1.3).sin() * p[1].exp());
        let h = ScalarField::from_fn(g, |p| p[0] * p[1] * p[1] - p[1].cos());
        let (a, b) = (0.7, -2.1);
        let combo = f.axpby(a, &h, b).unwrap();
        for order in [[1, 0], [0, 2], [1, 1], [2, 1], [0, 3]] {
            let lhs = diff(&combo, order).unwrap();
            let rhs = diff(&f, order).unwrap().axpby(a, &diff(&h, order).unwrap(), b).unwrap();
            // rounding grows like h^{-|order|}
            let total = (order[0] + order[1]) as i32;
            let scale = (a.abs() * f.max_abs() + b.abs() * h.max_abs()) / g.h().powi(total);
            for (x, y) in lhs.values().iter().zip(rhs.values()) {
                assert!((x - y).abs() <= 1e-13 * scale);
            }
        }
    }
}
