//! Grid-free certification of the frame identities behind the Jacobi
//! inequality and of the one-variable arctan inequalities.
//!
//! All frame quantities are expressed in the eigenframe of `D²u`, where
//! `g^{ii} = 1/(1+λᵢ²)` and `h_{ijk} = √g^{ii}√g^{jj}√g^{kk} u_{ijk}`.

mod appendix;
mod suites;

use core::f64::consts::FRAC_PI_2;

#[allow(unused_imports)]
use num_traits::Float;

pub use appendix::{
    appendix_c, appendix_g, appendix_g_decreasing, appendix_lambda1_check, appendix_lambda2_check, appendix_profile1,
    appendix_profile2, appendix_x_star, chain_to_b_check, mvt_lemma_check, ChainReport, MvtProfile,
};
pub use suites::{
    case1_certificate_suite, case2_certificate_suite, case4_certificate_suite, discriminant_scan,
    dpsi_control_suite, reflection_suite, three_way_suite, SampleSuite, SamplerConfig, CERTIFICATE_TOL, SMALL_THETA,
    THREE_WAY_TOL,
};

/// Point data for the frame identities.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FrameSample {
    pub lambda1: f64,
    pub lambda2: f64,
    pub h111: f64,
    pub h112: f64,
    pub h122: f64,
    pub h222: f64,
    pub theta: f64,
    /// `(Θ_{x₁}, Θ_{x₂})`.
    pub dtheta: [f64; 2],
    /// `(Θ_{x₁x₁}, Θ_{x₂x₂})`.
    pub d2theta_diag: [f64; 2],
}

/// Running sum that also accumulates absolute values, for relative error
/// scales.
#[derive(Debug, Clone, Copy, Default)]
struct Acc {
    sum: f64,
    abs: f64,
}

impl Acc {
    fn add(&mut self, x: f64) {
        self.sum += x;
        self.abs += x.abs();
    }
}

impl FrameSample {
    /// `(g^{11}, g^{22})`.
    pub fn gii(&self) -> [f64; 2] {
        [1.0 / (1.0 + self.lambda1 * self.lambda1), 1.0 / (1.0 + self.lambda2 * self.lambda2)]
    }

    fn sqrt_gii(&self) -> [f64; 2] {
        [1.0 / 1.0.hypot(self.lambda1), 1.0 / 1.0.hypot(self.lambda2)]
    }

    /// Replaces `h111`, `h222` by the values the constraint
    /// `h_{11i} + h_{22i} = √g^{ii} Θ_{x_i}` forces.
    pub fn constrained(mut self) -> Self {
        let s = self.sqrt_gii();
        self.h111 = s[0] * self.dtheta[0] - self.h122;
        self.h222 = s[1] * self.dtheta[1] - self.h112;
        self
    }

    /// The sample seen by the solution `−u` of the equation with phase `−Θ`:
    /// `λ₁ → −λ₂`, `λ₂ → −λ₁`, `Θ → −Θ`, with the frame axes swapped.
    pub fn reflected(&self) -> Self {
        Self {
            lambda1: -self.lambda2,
            lambda2: -self.lambda1,
            h111: -self.h222,
            h112: -self.h122,
            h122: -self.h112,
            h222: -self.h111,
            theta: -self.theta,
            dtheta: [-self.dtheta[1], -self.dtheta[0]],
            d2theta_diag: [-self.d2theta_diag[1], -self.d2theta_diag[0]],
        }
    }

    /// `h_{abc}` with indices in `{0, 1}`.
    fn h(&self, a: usize, b: usize, c: usize) -> f64 {
        match a + b + c {
            0 => self.h111,
            1 => self.h112,
            2 => self.h122,
            _ => self.h222,
        }
    }

    fn lambda(&self, i: usize) -> f64 {
        if i == 0 { self.lambda1 } else { self.lambda2 }
    }

    pub fn sigma1(&self) -> f64 {
        self.lambda1 + self.lambda2
    }

    pub fn sigma2(&self) -> f64 {
        self.lambda1 * self.lambda2
    }

    /// `∂ᵢb = Σⱼ λⱼ h_{jji} / √g^{ii}`.
    pub fn slope_gradient(&self) -> [f64; 2] {
        let s = self.sqrt_gii();
        let d = |i: usize| (self.lambda1 * self.h(0, 0, i) + self.lambda2 * self.h(1, 1, i)) / s[i];
        [d(0), d(1)]
    }

    /// `|∇_g b|² = Σ g^{ii}(∂ᵢb)²`.
    pub fn slope_gradient_norm_sq(&self) -> f64 {
        let g = self.gii();
        let d = self.slope_gradient();
        g[0] * d[0] * d[0] + g[1] * d[1] * d[1]
    }

    /// `|DΘ|²` at the point.
    pub fn dtheta_sq(&self) -> f64 {
        self.dtheta[0] * self.dtheta[0] + self.dtheta[1] * self.dtheta[1]
    }

    /// Pointwise `|D²Θ|`, taken as the larger diagonal entry.
    pub fn d2theta_norm(&self) -> f64 {
        self.d2theta_diag[0].abs().max(self.d2theta_diag[1].abs())
    }
}

fn lemma31_acc(s: &FrameSample) -> Acc {
    let mut acc = Acc::default();
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                let h = s.h(a, b, c);
                acc.add((1.0 + s.lambda(b) * s.lambda(c)) * h * h);
            }
        }
    }
    let g = s.gii();
    let db = s.slope_gradient();
    for i in 0..2 {
        acc.add(g[i] * s.lambda(i) * s.d2theta_diag[i]);
        acc.add(-g[i] * s.lambda(i) * s.dtheta[i] * db[i]);
    }
    acc
}

/// `Σ(1 + λ_bλ_c)h_{abc}² + Σ g^{ii}λᵢ∂ᵢᵢΘ − Σ g^{ii}λᵢ(∂ᵢΘ)∂ᵢb`.
pub fn lemma31_direct(s: &FrameSample) -> f64 {
    lemma31_acc(s).sum
}

fn gradnorm_acc(s: &FrameSample) -> Acc {
    let g = s.gii();
    let r = s.sqrt_gii();
    let (l1, l2) = (s.lambda1, s.lambda2);
    let [t1, t2] = s.dtheta;
    let mut acc = Acc::default();
    acc.add((s.h112 * s.h112 + s.h122 * s.h122) * (l1 - l2) * (l1 - l2));
    acc.add(g[0] * l1 * l1 * t1 * t1);
    acc.add(g[1] * l2 * l2 * t2 * t2);
    acc.add(2.0 * s.h122 * l1 * (l2 - l1) * r[0] * t1);
    acc.add(2.0 * s.h112 * l2 * (l1 - l2) * r[1] * t2);
    acc
}

/// Expansion of `|∇_g b|²` in `h112`, `h122` and `DΘ`, valid on
/// constrained samples.
pub fn gradnorm_direct(s: &FrameSample) -> f64 {
    gradnorm_acc(s).sum
}

fn case1_acc(s: &FrameSample, eps: f64) -> Acc {
    let g = s.gii();
    let r = s.sqrt_gii();
    let (l1, l2) = (s.lambda1, s.lambda2);
    let [t1, t2] = s.dtheta;
    let mut acc = Acc::default();
    acc.add((s.h112 * s.h112 + s.h122 * s.h122) * (4.0 + (l1 + l2) * (l1 + l2) - eps * (l1 - l2) * (l1 - l2)));
    acc.add(r[0] * t1 * s.h122 * (-(1.0 - 2.0 * eps) * l1 * l1 - (1.0 + 2.0 * eps) * l1 * l2 - 2.0));
    acc.add(r[1] * t2 * s.h112 * (-(1.0 - 2.0 * eps) * l2 * l2 - (1.0 + 2.0 * eps) * l1 * l2 - 2.0));
    acc.add(g[0] * t1 * t1 * (1.0 - eps * l1 * l1));
    acc.add(g[1] * t2 * t2 * (1.0 - eps * l2 * l2));
    acc.add(g[0] * l1 * s.d2theta_diag[0]);
    acc.add(g[1] * l2 * s.d2theta_diag[1]);
    acc
}

/// Assembled right-hand side for `Δ_g b − ε|∇_g b|²` in terms of `h112`,
/// `h122`, valid on constrained samples.
pub fn case1_assembled(s: &FrameSample, eps: f64) -> f64 {
    case1_acc(s, eps).sum
}

/// `|case1_assembled − (lemma31_direct − ε·gradnorm_direct)|` and the sum of
/// absolute summands of all three expansions.
pub fn three_way_defect(s: &FrameSample, eps: f64) -> (f64, f64) {
    let a = case1_acc(s, eps);
    let l = lemma31_acc(s);
    let g = gradnorm_acc(s);
    ((a.sum - (l.sum - eps * g.sum)).abs(), a.abs + l.abs + eps.abs() * g.abs)
}

/// `h_{11i} + h_{22i} − √g^{ii}Θ_{x_i}` for `i = 1, 2`.
pub fn dpsi_residual(s: &FrameSample) -> [f64; 2] {
    let r = s.sqrt_gii();
    [
        s.h111 + s.h122 - r[0] * s.dtheta[0],
        s.h112 + s.h222 - r[1] * s.dtheta[1],
    ]
}

/// Result of [`discriminant_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discriminant {
    /// `23 − 8 sin Θ − 15 sin² Θ`.
    pub quartic: f64,
    /// `|4(1−s)(3+5s/2) − (25/4)cos²Θ − quartic/4|`.
    pub factored_defect: f64,
    /// `cot²Θ(η + 6ε)²` and `4(1 − 2ε − η/2)(3 + η + 6ε)` at `ε = sinΘ/4`,
    /// `η = sinΘ`.
    pub cot_lhs: f64,
    pub cot_rhs: f64,
    pub ok: bool,
}

/// Certificate that `ε = sinΘ/4`, `η = sinΘ` make the quadratic in `σ₁`
/// nonnegative.
pub fn discriminant_check(theta: f64) -> crate::Result<Discriminant> {
    if !(theta > 0.0 && theta <= FRAC_PI_2) {
        return Err(crate::Error::Domain("theta must lie in (0, pi/2]"));
    }
    let (s, c) = theta.sin_cos();
    let quartic = 23.0 - 8.0 * s - 15.0 * s * s;
    let factored = 4.0 * (1.0 - s) * (3.0 + 2.5 * s) - 6.25 * c * c;
    let factored_defect = (factored - quartic / 4.0).abs();
    let (eps, eta) = (s / 4.0, s);
    let cot = c / s;
    let cot_lhs = cot * cot * (eta + 6.0 * eps) * (eta + 6.0 * eps);
    let cot_rhs = 4.0 * (1.0 - 2.0 * eps - eta / 2.0) * (3.0 + eta + 6.0 * eps);
    let slack = 1e-12;
    let ok = quartic >= -slack
        && factored_defect <= slack
        && cot_lhs <= cot_rhs + slack
        && 1.0 - 2.0 * eps - eta / 2.0 >= -slack;
    Ok(Discriminant { quartic, factored_defect, cot_lhs, cot_rhs, ok })
}

/// One pointwise certificate evaluation: `lhs ≥ rhs` up to `tol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    pub lhs: f64,
    pub rhs: f64,
    /// Rounding scale of the evaluation.
    pub scale: f64,
}

impl Certificate {
    pub fn defect(&self) -> f64 {
        self.lhs - self.rhs
    }

    pub fn holds(&self, rel_tol: f64) -> bool {
        self.defect() >= -rel_tol * self.scale
    }
}

/// Reduces `Θ < 0` samples to the positive case.
fn positive(s: &FrameSample) -> FrameSample {
    if s.theta < 0.0 { s.reflected() } else { *s }
}

fn lhs_with_eps(s: &FrameSample, eps: f64) -> (f64, f64) {
    let l = lemma31_acc(s);
    let gn = s.slope_gradient_norm_sq();
    (l.sum - eps * gn, l.abs + eps * gn)
}

/// `Δ_g b − (sinΘ/4)|∇_g b|² ≥ −|DΘ|²(3/2 + cscΘ) + g^{11}λ₁Θ₁₁ + g^{22}λ₂Θ₂₂`
/// for `0 < |Θ| ≤ π/2` in the sign regime `σ₁ ≥ 0`, `σ₂ ≤ 0`.
pub fn case1_certificate(s: &FrameSample) -> Certificate {
    let p = positive(s);
    let th = p.theta;
    let (lhs, scale) = lhs_with_eps(&p, th.sin() / 4.0);
    let g = p.gii();
    let curv = g[0] * p.lambda1 * p.d2theta_diag[0] + g[1] * p.lambda2 * p.d2theta_diag[1];
    let rhs = -p.dtheta_sq() * (1.5 + 1.0 / th.sin()) + curv;
    Certificate { lhs, rhs, scale: scale + rhs.abs() }
}

/// `Δ_g b ≥ (3/8)|∇_g b|² − 2|DΘ|² − 2|D²Θ|` for `π/2 < |Θ| < π`, with the
/// pointwise phase derivatives.
pub fn case2_certificate(s: &FrameSample) -> Certificate {
    let p = positive(s);
    let (lhs, scale) = lhs_with_eps(&p, 3.0 / 8.0);
    let rhs = -2.0 * p.dtheta_sq() - 2.0 * p.d2theta_norm();
    Certificate { lhs, rhs, scale: scale + rhs.abs() }
}

/// The intermediate bound `½|∇_g b|² ≤ h₁₁₁²λ₁² + h₁₁₂²λ₁² + h₁₂₂²λ₂² + h₂₂₂²λ₂²`.
pub fn case2_half_gradient(s: &FrameSample) -> Certificate {
    let (l1, l2) = (s.lambda1 * s.lambda1, s.lambda2 * s.lambda2);
    let rhs_sum = s.h111 * s.h111 * l1 + s.h112 * s.h112 * l1 + s.h122 * s.h122 * l2 + s.h222 * s.h222 * l2;
    let half = 0.5 * s.slope_gradient_norm_sq();
    Certificate { lhs: rhs_sum, rhs: half, scale: rhs_sum + half }
}

/// `Δ_g b − (sin|Θ|/4)|∇_g b|² ≥ −2|D²Θ|` at (near-)zero phase with
/// `DΘ = 0`.
pub fn case4_certificate(s: &FrameSample) -> Certificate {
    let (lhs, scale) = lhs_with_eps(s, s.theta.abs().sin() / 4.0);
    let rhs = -2.0 * s.d2theta_norm();
    Certificate { lhs, rhs, scale: scale + rhs.abs() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FrameSample {
        FrameSample {
            lambda1: 3.0,
            lambda2: -0.4,
            h111: 0.0,
            h112: 1.3,
            h122: -0.7,
            h222: 0.0,
            theta: 0.6,
            dtheta: [0.8, -1.1],
            d2theta_diag: [0.5, -2.0],
        }
        .constrained()
    }

    #[test]
    fn lemma31_zero_and_flat() {
        assert_eq!(lemma31_direct(&FrameSample::default()), 0.0);
        let s = FrameSample { h111: 1.0, h112: 2.0, h122: 3.0, h222: 4.0, ..Default::default() };
        assert_eq!(lemma31_direct(&s), 1.0 + 3.0 * 4.0 + 3.0 * 9.0 + 16.0);
    }

    #[test]
    fn three_way_identity() {
        let s = sample();
        for eps in [0.0, 0.6f64.sin() / 4.0, 0.3] {
            let (d, scale) = three_way_defect(&s, eps);
            assert!(d <= 1e-13 * scale, "{d} {scale}");
        }
    }

    #[test]
    fn case1_reduces_without_dtheta() {
        let mut s = sample();
        s.dtheta = [0.0, 0.0];
        let s = s.constrained();
        let expect = (s.h112 * s.h112 + s.h122 * s.h122) * (4.0 + s.sigma1() * s.sigma1())
            + s.gii()[0] * s.lambda1 * s.d2theta_diag[0]
            + s.gii()[1] * s.lambda2 * s.d2theta_diag[1];
        assert!((case1_assembled(&s, 0.0) - expect).abs() < 1e-12);
    }

    #[test]
    fn gradnorm_matches_frame_formula() {
        let s = sample();
        assert!((gradnorm_direct(&s) - s.slope_gradient_norm_sq()).abs() < 1e-12);
    }

    #[test]
    fn reflection_preserves_values() {
        let s = sample();
        let r = s.reflected();
        assert_eq!(r.reflected(), s);
        assert!((lemma31_direct(&s) - lemma31_direct(&r)).abs() < 1e-12);
        assert!((s.slope_gradient_norm_sq() - r.slope_gradient_norm_sq()).abs() < 1e-12);
        let eps = 0.1;
        assert!((case1_assembled(&s, eps) - case1_assembled(&r, eps)).abs() < 1e-12);
        assert_eq!(dpsi_residual(&r).map(|v| v.abs() < 1e-15), [true, true]);
    }

    #[test]
    fn dpsi_examples() {
        assert_eq!(dpsi_residual(&sample()).map(|v| v.abs() < 1e-15), [true, true]);
        let s = FrameSample { h111: 0.4, h122: -0.4, h112: 2.0, h222: -2.0, lambda1: 5.0, ..Default::default() };
        assert_eq!(dpsi_residual(&s), [0.0, 0.0]);
        let s = sample();
        let bad = FrameSample { h111: s.h111 + 1.0, ..s };
        assert!(dpsi_residual(&bad)[0].abs() > 0.1);
    }

    #[test]
    fn discriminant_examples() {
        let d = discriminant_check(FRAC_PI_2).unwrap();
        assert!(d.quartic.abs() < 1e-12 && d.ok);
        let d = discriminant_check(core::f64::consts::FRAC_PI_6).unwrap();
        assert!((d.quartic - 15.25).abs() < 1e-12 && d.ok);
        assert!(discriminant_check(0.0).is_err());
    }

    #[test]
    fn half_gradient_bound() {
        let c = case2_half_gradient(&sample());
        assert!(c.holds(1e-14));
    }
}
