//! Pointwise geometry of the gradient graph `(x, Du(x))`.
//!
//! At a node the Hessian `H = D²u` is diagonalised, giving eigenvalues
//! `λ₁ ≥ λ₂`, the inverse metric `g^{ii} = 1/(1+λᵢ²)`, the volume form
//! `V = √((1+λ₁²)(1+λ₂²))` and the slope `b = log V`. When third derivatives
//! are supplied they are rotated into the eigenframe and scaled into the
//! second fundamental form `h_ijk = √g^{ii} √g^{jj} √g^{kk} u_ijk`.

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::{diff, ScalarField};
use crate::phase::PhaseField;
use crate::solver::PotentialField;

/// Symmetric 2×2 matrix `[[xx, xy], [xy, yy]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Sym2 {
    pub const IDENTITY: Sym2 = Sym2 { xx: 1.0, xy: 0.0, yy: 1.0 };

    pub const fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Self { xx, xy, yy }
    }

    pub fn diag(a: f64, b: f64) -> Self {
        Self::new(a, 0.0, b)
    }

    /// Symmetrises a general 2×2 matrix given row-major.
    pub fn symmetrize(m: [[f64; 2]; 2]) -> Self {
        Self::new(m[0][0], 0.5 * (m[0][1] + m[1][0]), m[1][1])
    }

    pub fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.xy.is_finite() && self.yy.is_finite()
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(s * self.xx, s * self.xy, s * self.yy)
    }

    pub fn neg(&self) -> Self {
        Self::new(-self.xx, -self.xy, -self.yy)
    }

    /// Matrix product of two symmetric matrices, returned row-major.
    pub fn mul(&self, o: &Sym2) -> [[f64; 2]; 2] {
        [
            [self.xx * o.xx + self.xy * o.xy, self.xx * o.xy + self.xy * o.yy],
            [self.xy * o.xx + self.yy * o.xy, self.xy * o.xy + self.yy * o.yy],
        ]
    }

    /// `M v`.
    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.xx * v[0] + self.xy * v[1], self.xy * v[0] + self.yy * v[1]]
    }

    /// `vᵀ M w`.
    pub fn bilinear(&self, v: [f64; 2], w: [f64; 2]) -> f64 {
        let mw = self.apply(w);
        v[0] * mw[0] + v[1] * mw[1]
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> f64 {
        let mean = 0.5 * (self.xx + self.yy);
        let r = (0.5 * (self.xx - self.yy)).hypot(self.xy);
        mean.abs() + r
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.xx.abs().max(self.xy.abs()).max(self.yy.abs())
    }
}

/// Ordered eigenvalues of a symmetric 2×2 matrix with the rotation angle of
/// its eigenframe: `e₁ = (cos angle, sin angle)` belongs to `lambda1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HessianSpectrum {
    pub lambda1: f64,
    pub lambda2: f64,
    pub angle: f64,
}

impl HessianSpectrum {
    /// `R(angle)·diag(λ₁, λ₂)·R(angle)ᵀ`.
    pub fn reconstruct(&self) -> Sym2 {
        let (s, c) = self.angle.sin_cos();
        let (l1, l2) = (self.lambda1, self.lambda2);
        Sym2::new(
            l1 * c * c + l2 * s * s,
            (l1 - l2) * c * s,
            l1 * s * s + l2 * c * c,
        )
    }

    /// True when the eigenvalues are too close for a meaningful frame.
    pub fn is_near_degenerate(&self) -> bool {
        (self.lambda1 - self.lambda2).abs() < 1e-9 * (1.0 + self.lambda1.abs())
    }
}

/// Closed-form eigen-decomposition of a symmetric 2×2 matrix.
///
/// Returns `λ₁ ≥ λ₂` and an angle in `(−π/2, π/2]`; repeated eigenvalues get
/// angle 0.
pub fn hessian_spectrum(h: Sym2) -> Result<HessianSpectrum> {
    if !h.is_finite() {
        return Err(Error::NonFinite("Hessian entries"));
    }
    let mean = 0.5 * (h.xx + h.yy);
    let half_diff = 0.5 * (h.xx - h.yy);
    let r = half_diff.hypot(h.xy);
    let angle = if r == 0.0 {
        0.0
    } else {
        0.5 * (2.0 * h.xy).atan2(h.xx - h.yy)
    };
    Ok(HessianSpectrum {
        lambda1: mean + r,
        lambda2: mean - r,
        angle,
    })
}

/// Metric quantities at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricData {
    /// `(g^{11}, g^{22}) = (1/(1+λ₁²), 1/(1+λ₂²))`.
    pub gii: [f64; 2],
    /// Volume form `V`.
    pub volume: f64,
    /// Slope `b = log V`.
    pub slope: f64,
    pub sigma1: f64,
    pub sigma2: f64,
}

pub fn metric_data(spec: &HessianSpectrum) -> MetricData {
    let (l1, l2) = (spec.lambda1, spec.lambda2);
    MetricData {
        gii: [1.0 / (1.0 + l1 * l1), 1.0 / (1.0 + l2 * l2)],
        volume: 1.0.hypot(l1) * 1.0.hypot(l2),
        slope: slope_from_eigenvalues(l1, l2),
        sigma1: l1 + l2,
        sigma2: l1 * l2,
    }
}

/// `b = ½·(log(1+λ₁²) + log(1+λ₂²))`, finite for |λ| up to ~1e150.
#[inline]
pub fn slope_from_eigenvalues(l1: f64, l2: f64) -> f64 {
    0.5 * ((l1 * l1).ln_1p() + (l2 * l2).ln_1p())
}

/// Exact inverse of `I₂ + H²`.
///
/// These are the coefficients `g^{ab}` of the linearised operator; the matrix
/// is symmetric positive definite with eigenvalues `1/(1+λᵢ²)`.
pub fn inverse_metric(h: Sym2) -> Sym2 {
    let sq = Sym2::new(h.xx * h.xx + h.xy * h.xy, h.xy * (h.xx + h.yy), h.xy * h.xy + h.yy * h.yy);
    let g = Sym2::new(1.0 + sq.xx, sq.xy, 1.0 + sq.yy);
    let det = g.det();
    Sym2::new(g.yy / det, -g.xy / det, g.xx / det)
}

/// Third derivatives `(u₁₁₁, u₁₁₂, u₁₂₂, u₂₂₂)` of a function in some frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ThirdDerivs {
    pub d111: f64,
    pub d112: f64,
    pub d122: f64,
    pub d222: f64,
}

impl ThirdDerivs {
    /// Component `T_{ijk}` for indices in `{0, 1}`.
    fn component(&self, count_of_twos: usize) -> f64 {
        match count_of_twos {
            0 => self.d111,
            1 => self.d112,
            2 => self.d122,
            _ => self.d222,
        }
    }

    /// Expresses the tensor in the frame `e₁ = (cos a, sin a)`,
    /// `e₂ = (−sin a, cos a)` using the three-index transformation law.
    pub fn rotated(&self, angle: f64) -> ThirdDerivs {
        let (s, c) = angle.sin_cos();
        // frame[a][i] = i-th Cartesian component of e_a
        let frame = [[c, s], [-s, c]];
        let comp = |a: usize, b: usize, cc: usize| -> f64 {
            let mut acc = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        acc += frame[a][i] * frame[b][j] * frame[cc][k] * self.component(i + j + k);
                    }
                }
            }
            acc
        };
        ThirdDerivs {
            d111: comp(0, 0, 0),
            d112: comp(0, 0, 1),
            d122: comp(0, 1, 1),
            d222: comp(1, 1, 1),
        }
    }
}

/// Second fundamental form components in the Hessian eigenframe.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FrameData {
    pub h111: f64,
    pub h112: f64,
    pub h122: f64,
    pub h222: f64,
}

/// Scales frame third derivatives by `√g^{ii} √g^{jj} √g^{kk}`.
///
/// `third` must already be expressed in the eigenframe of `spec`.
pub fn second_fundamental_form(third: &ThirdDerivs, spec: &HessianSpectrum) -> FrameData {
    let s1 = 1.0 / 1.0.hypot(spec.lambda1);
    let s2 = 1.0 / 1.0.hypot(spec.lambda2);
    FrameData {
        h111: s1 * s1 * s1 * third.d111,
        h112: s1 * s1 * s2 * third.d112,
        h122: s1 * s2 * s2 * third.d122,
        h222: s2 * s2 * s2 * third.d222,
    }
}

/// Everything the frame-level checks need at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryFrame {
    pub spectrum: HessianSpectrum,
    pub metric: MetricData,
    pub frame: Option<FrameData>,
}

impl GeometryFrame {
    /// Builds the frame from Cartesian Hessian and (optionally) Cartesian
    /// third derivatives. Near-degenerate spectra reuse angle 0 for the
    /// rotation.
    pub fn new(hessian: Sym2, third: Option<ThirdDerivs>) -> Result<Self> {
        let spectrum = hessian_spectrum(hessian)?;
        let metric = metric_data(&spectrum);
        let frame = third.map(|t| {
            let angle = if spectrum.is_near_degenerate() { 0.0 } else { spectrum.angle };
            second_fundamental_form(&t.rotated(angle), &spectrum)
        });
        Ok(Self { spectrum, metric, frame })
    }

    /// `∂ᵢb` in the eigenframe from the second fundamental form:
    /// `∂ᵢb = Σⱼ λⱼ h_jji / √g^{ii}`.
    pub fn slope_gradient(&self) -> Option<[f64; 2]> {
        let f = self.frame?;
        let (l1, l2) = (self.spectrum.lambda1, self.spectrum.lambda2);
        let r1 = 1.0.hypot(l1);
        let r2 = 1.0.hypot(l2);
        Some([
            (l1 * f.h111 + l2 * f.h122) * r1,
            (l1 * f.h112 + l2 * f.h222) * r2,
        ])
    }

    /// `|∇_g b|² = Σ g^{ii}(∂ᵢb)²` assembled from frame quantities.
    pub fn slope_gradient_norm_sq(&self) -> Option<f64> {
        let d = self.slope_gradient()?;
        Some(self.metric.gii[0] * d[0] * d[0] + self.metric.gii[1] * d[1] * d[1])
    }
}

/// Slope `b` of the potential at every node.
pub fn slope_field(u: &PotentialField) -> Result<ScalarField> {
    let grid = *u.grid();
    let mut out = alloc::vec![0.0; grid.len()];
    for (k, o) in out.iter_mut().enumerate() {
        let s = hessian_spectrum(u.hessian_at(k))?;
        *o = slope_from_eigenvalues(s.lambda1, s.lambda2);
    }
    ScalarField::new(grid, out)
}

/// Volume form `V` at every node.
pub fn volume_field(u: &PotentialField) -> Result<ScalarField> {
    let grid = *u.grid();
    let mut out = alloc::vec![0.0; grid.len()];
    for (k, o) in out.iter_mut().enumerate() {
        let s = hessian_spectrum(u.hessian_at(k))?;
        *o = metric_data(&s).volume;
    }
    ScalarField::new(grid, out)
}

/// `Δ_g v = g^{ij} v_ij − g^{jp} u_pq (∂_qΘ) v_j` with the full inverse metric
/// of `D²u` at each node.
pub fn laplace_beltrami(v: &ScalarField, u: &PotentialField, phase: &PhaseField) -> Result<ScalarField> {
    let grid = *v.grid();
    if grid != *u.grid() || grid != *phase.grid() {
        return Err(Error::GridMismatch);
    }
    let vx = diff(v, [1, 0])?;
    let vy = diff(v, [0, 1])?;
    let vxx = diff(v, [2, 0])?;
    let vxy = diff(v, [1, 1])?;
    let vyy = diff(v, [0, 2])?;
    let mut out = alloc::vec![0.0; grid.len()];
    for (k, o) in out.iter_mut().enumerate() {
        let hess = u.hessian_at(k);
        let ginv = inverse_metric(hess);
        let second = ginv.xx * vxx.values()[k] + 2.0 * ginv.xy * vxy.values()[k] + ginv.yy * vyy.values()[k];
        // drift vector w_j = g^{jp} u_pq Θ_q
        let w = ginv.apply(hess.apply(phase.gradient_at(k)));
        *o = second - (w[0] * vx.values()[k] + w[1] * vy.values()[k]);
    }
    ScalarField::new(grid, out)
}

/// `|∇_g v|² = g^{ij} v_i v_j` at each node.
pub fn grad_norm_g(v: &ScalarField, u: &PotentialField) -> Result<ScalarField> {
    let grid = *v.grid();
    if grid != *u.grid() {
        return Err(Error::GridMismatch);
    }
    let vx = diff(v, [1, 0])?;
    let vy = diff(v, [0, 1])?;
    let mut out = alloc::vec![0.0; grid.len()];
    for (k, o) in out.iter_mut().enumerate() {
        let ginv = inverse_metric(u.hessian_at(k));
        let dv = [vx.values()[k], vy.values()[k]];
        *o = ginv.bilinear(dv, dv).max(0.0);
    }
    ScalarField::new(grid, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{FRAC_PI_4, LN_2, SQRT_2};

    #[test]
    fn spectrum_examples() {
        let s = hessian_spectrum(Sym2::diag(1.0, 1.0)).unwrap();
        assert_eq!((s.lambda1, s.lambda2, s.angle), (1.0, 1.0, 0.0));

        let s = hessian_spectrum(Sym2::new(0.0, 1.0, 0.0)).unwrap();
        assert_eq!((s.lambda1, s.lambda2), (1.0, -1.0));
        assert!((s.angle - FRAC_PI_4).abs() < 1e-15);

        // Roots of t² − 5t + 5 from the quadratic formula.
        let h = Sym2::new(2.0, 1.0, 3.0);
        let s = hessian_spectrum(h).unwrap();
        let disc = 5.0f64.sqrt();
        assert!((s.lambda1 - (5.0 + disc) / 2.0).abs() < 1e-14);
        assert!((s.lambda2 - (5.0 - disc) / 2.0).abs() < 1e-14);
        let r = s.reconstruct();
        assert!((r.xx - h.xx).abs().max((r.xy - h.xy).abs()).max((r.yy - h.yy).abs()) <= 1e-14 * 4.0);
    }

    #[test]
    fn spectrum_rejects_nan() {
        assert!(hessian_spectrum(Sym2::new(f64::NAN, 0.0, 1.0)).is_err());
    }

    #[test]
    fn angle_range_and_ordering() {
        let s = hessian_spectrum(Sym2::diag(-1.0, 2.0)).unwrap();
        assert_eq!(s.lambda1, 2.0);
        assert!((s.angle - core::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn metric_examples() {
        let m = metric_data(&hessian_spectrum(Sym2::diag(0.0, 0.0)).unwrap());
        assert_eq!((m.volume, m.slope, m.sigma1, m.sigma2), (1.0, 0.0, 0.0, 0.0));

        let m = metric_data(&hessian_spectrum(Sym2::diag(1.0, 1.0)).unwrap());
        assert!((m.volume - 2.0).abs() < 1e-15);
        assert!((m.slope - LN_2).abs() < 1e-15);
        assert_eq!((m.sigma1, m.sigma2), (2.0, 1.0));

        // Θ = π/4 branch: V = sec(π/4)·|1 − σ₂|.
        let m = metric_data(&hessian_spectrum(Sym2::diag(1.0, 0.0)).unwrap());
        let via_sec = (1.0 / FRAC_PI_4.cos()) * (1.0 - m.sigma2).abs();
        assert!((m.volume - SQRT_2).abs() < 1e-15);
        assert!((via_sec - SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn slope_stays_finite_for_huge_eigenvalues() {
        let m = metric_data(&hessian_spectrum(Sym2::diag(1e8, -1e8)).unwrap());
        assert!((m.slope - 2.0 * (1e8f64).ln()).abs() < 1e-9);
    }

    #[test]
    fn inverse_metric_examples() {
        assert_eq!(inverse_metric(Sym2::diag(0.0, 0.0)), Sym2::IDENTITY);
        let g = inverse_metric(Sym2::diag(1.0, 1.0));
        assert_eq!(g, Sym2::diag(0.5, 0.5));
        let h = Sym2::new(2.0, 1.0, 3.0);
        let hh = h.mul(&h);
        let gmat = Sym2::new(1.0 + hh[0][0], hh[0][1], 1.0 + hh[1][1]);
        let p = gmat.mul(&inverse_metric(h));
        assert!((p[0][0] - 1.0).abs() < 1e-14 && (p[1][1] - 1.0).abs() < 1e-14);
        assert!(p[0][1].abs() < 1e-14 && p[1][0].abs() < 1e-14);
    }

    #[test]
    fn second_fundamental_form_examples() {
        let flat = hessian_spectrum(Sym2::diag(0.0, 0.0)).unwrap();
        assert_eq!(second_fundamental_form(&ThirdDerivs::default(), &flat), FrameData::default());
        let t = ThirdDerivs { d111: 1.0, d112: -2.0, d122: 0.5, d222: 3.0 };
        let h = second_fundamental_form(&t, &flat);
        assert_eq!((h.h111, h.h112, h.h122, h.h222), (1.0, -2.0, 0.5, 3.0));

        // u = x³/6 at x = 1: λ = (1, 0), u₁₁₁ = 1, h₁₁₁ = 1/2^{3/2}.
        let s = hessian_spectrum(Sym2::diag(1.0, 0.0)).unwrap();
        let h = second_fundamental_form(&ThirdDerivs { d111: 1.0, ..Default::default() }, &s);
        assert!((h.h111 - 1.0 / 2.0f64.powf(1.5)).abs() < 1e-15);
    }

    #[test]
    fn rotation_round_trip() {
        let t = ThirdDerivs { d111: 0.3, d112: -1.2, d122: 2.0, d222: 0.7 };
        let back = t.rotated(0.37).rotated(-0.37);
        assert!((back.d111 - t.d111).abs() < 1e-14);
        assert!((back.d112 - t.d112).abs() < 1e-14);
        assert!((back.d122 - t.d122).abs() < 1e-14);
        assert!((back.d222 - t.d222).abs() < 1e-14);
        // Quarter turn swaps the axes: e₁ = y, e₂ = −x.
        let q = t.rotated(core::f64::consts::FRAC_PI_2);
        assert!((q.d111 - t.d222).abs() < 1e-14);
        assert!((q.d112 + t.d122).abs() < 1e-14);
    }
}
