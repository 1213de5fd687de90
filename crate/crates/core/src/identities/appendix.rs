//! The two arctan inequalities and the closing chain to `b`.

use core::f64::consts::{FRAC_PI_4, PI};

#[allow(unused_imports)]
use num_traits::Float;

const SLACK: f64 = 1e-14;

/// `√(4/π − 1)`, the interior maximum of `atan x − (π/4)x`.
pub fn appendix_x_star() -> f64 {
    (4.0 / PI - 1.0).sqrt()
}

/// `atan x − (π/4)x` and its derivative.
pub fn appendix_profile1(x: f64) -> (f64, f64) {
    (x.atan() - FRAC_PI_4 * x, 1.0 / (1.0 + x * x) - FRAC_PI_4)
}

/// `C(p) = 2^{p/2}π/p`.
pub fn appendix_c(p: f64) -> f64 {
    2f64.powf(p / 2.0) * PI / p
}

/// `C yᵖ/(1+y²)^{p/2} − atan y` and its derivative, with `C = C(p)`.
pub fn appendix_profile2(y: f64, p: f64) -> (f64, f64) {
    let c = appendix_c(p);
    let w = 1.0 + y * y;
    let f = c * y.powf(p) / w.powf(p / 2.0) - y.atan();
    let df = if y > 0.0 { (appendix_g(y, p) - 1.0) / w } else { f64::INFINITY };
    (f, df)
}

/// `g(y) = pC/(y^{1−p}(1+y²)^{p/2})`.
pub fn appendix_g(y: f64, p: f64) -> f64 {
    p * appendix_c(p) / (y.powf(1.0 - p) * (1.0 + y * y).powf(p / 2.0))
}

/// `atan x ≥ (π/4)x` on `(0, 1]`, together with the sign of the derivative
/// on either side of [`appendix_x_star`].
pub fn appendix_lambda2_check(x: f64) -> bool {
    if !(x > 0.0 && x <= 1.0) {
        return false;
    }
    let (f, df) = appendix_profile1(x);
    let xs = appendix_x_star();
    let sign_ok = if (x - xs).abs() < 1e-9 {
        df.abs() < 1e-8
    } else if x < xs {
        df > 0.0
    } else {
        df < 0.0
    };
    f >= -SLACK && sign_ok
}

/// `C yᵖ/(1+y²)^{p/2} ≥ atan y` on `[0, 1]`, with both sufficient
/// conditions on `C`.
pub fn appendix_lambda1_check(y: f64, p: f64) -> bool {
    if !((0.0..=1.0).contains(&y) && p > 0.0 && p <= 1.0) {
        return false;
    }
    let c = appendix_c(p);
    let half = 2f64.powf(p / 2.0);
    let (f, _) = appendix_profile2(y, p);
    f >= -SLACK && c > half * PI / 4.0 && p * c / half > 1.0
}

/// Strict decrease of `g` over `n` equispaced points of `(0, 1]`.
pub fn appendix_g_decreasing(p: f64, n: usize) -> bool {
    let mut prev = f64::INFINITY;
    for k in 1..=n {
        let g = appendix_g(k as f64 / n as f64, p);
        if !(g < prev) {
            return false;
        }
        prev = g;
    }
    true
}

/// Functions the mean-value lemma is applied to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MvtProfile {
    Profile1,
    Profile2 { p: f64 },
    Zero,
}

impl MvtProfile {
    fn eval(&self, x: f64) -> (f64, f64) {
        match *self {
            Self::Profile1 => appendix_profile1(x),
            Self::Profile2 { p } => appendix_profile2(x, p),
            Self::Zero => (0.0, 0.0),
        }
    }
}

/// Dense scan of the lemma on `[a, b]`: `f(a) = 0`, `f′ ≥ 0` inside, and the
/// conclusion `f ≥ f(a)` at every scan point.
pub fn mvt_lemma_check(f: MvtProfile, interval: (f64, f64), n: usize) -> bool {
    let (a, b) = interval;
    if !(b > a) || n < 2 {
        return false;
    }
    let (fa, _) = f.eval(a);
    if fa.abs() > SLACK {
        return false;
    }
    (1..=n).all(|k| {
        let x = a + (b - a) * k as f64 / n as f64;
        let (v, dv) = f.eval(x);
        let interior = k < n;
        v >= fa - SLACK && (!interior || dv >= -SLACK)
    })
}

/// Link-by-link evaluation of the closing chain. Links that do not apply at
/// the point are `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainReport {
    pub c: f64,
    /// `V = √((1+λ₁²)(1+λ₂²))` and `b = ln V`.
    pub v: f64,
    pub b: f64,
    /// `atan(1/λ₁) < C/(1+λ₁²)^{p/2}`.
    pub link1: bool,
    /// `C/(1+λ₁²)^{p/2} ≤ C/V^{p/2}`.
    pub link2: bool,
    /// `C/V^{p/2} ≤ C/V^{p/8}`.
    pub link3: bool,
    /// `C/V^{p/8} ≤ C/b`, only where `ln V ≤ V^{p/8}`.
    pub link4: Option<bool>,
    /// `atan(1/λ₁) ≤ C/b` evaluated directly.
    pub link5: bool,
    pub holds: bool,
}

/// Evaluates the chain bounding `atan(1/λ₁)` by `C/b`.
pub fn chain_to_b_check(lambda1: f64, lambda2: f64, p: f64) -> crate::Result<ChainReport> {
    if !(lambda1 > 1.0) || !lambda2.is_finite() || !lambda1.is_finite() {
        return Err(crate::Error::Domain("chain requires lambda1 > 1"));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(crate::Error::Domain("p must lie in (0, 1]"));
    }
    let c = appendix_c(p);
    let w1 = 1.0 + lambda1 * lambda1;
    let w2 = 1.0 + lambda2 * lambda2;
    let v = (w1 * w2).sqrt();
    let b = v.ln();
    let lhs = (1.0 / lambda1).atan();
    let t1 = c / w1.powf(p / 2.0);
    let t2 = c / v.powf(p / 2.0);
    let t3 = c / v.powf(p / 8.0);
    let t4 = c / b;
    let link1 = lhs < t1;
    let link2 = t1 <= t2 * (1.0 + SLACK);
    let link3 = t2 <= t3 * (1.0 + SLACK);
    let link4 = (b <= v.powf(p / 8.0)).then_some(t3 <= t4 * (1.0 + SLACK));
    let link5 = lhs <= t4;
    let holds = link1 && link2 && link3 && link4.unwrap_or(true) && link5;
    Ok(ChainReport { c, v, b, link1, link2, link3, link4, link5, holds })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda2_examples() {
        assert!(appendix_profile1(1.0).0.abs() < 1e-15);
        let xs = appendix_x_star();
        assert!((xs - 0.5227).abs() < 1e-4);
        assert!(appendix_profile1(xs).1.abs() < 1e-12);
        assert!(0.5f64.atan() >= PI / 8.0);
        assert!((0.5f64.atan() - 0.46365).abs() < 1e-5);
        for x in [1e-6, 0.1, 0.5, xs, 0.9, 1.0] {
            assert!(appendix_lambda2_check(x), "{x}");
        }
        assert!(!appendix_lambda2_check(0.0));
        assert!(!appendix_lambda2_check(1.5));
    }

    #[test]
    fn lambda1_examples() {
        assert!((appendix_c(1.0) - 2f64.sqrt() * PI).abs() < 1e-14);
        let (f1, _) = appendix_profile2(1.0, 1.0);
        assert!((f1 - (PI - FRAC_PI_4)).abs() < 1e-14);
        assert_eq!(appendix_profile2(0.0, 0.5).0, 0.0);
        assert!(appendix_lambda1_check(0.3, 0.25));
        assert!(appendix_g_decreasing(0.5, 1000));
        assert!(appendix_g_decreasing(1.0, 1000));
        assert!(!appendix_lambda1_check(0.3, 0.0));
    }

    #[test]
    fn mvt_profiles() {
        assert!(mvt_lemma_check(MvtProfile::Profile1, (0.0, appendix_x_star()), 10_000));
        assert!(mvt_lemma_check(MvtProfile::Profile2 { p: 0.5 }, (0.0, 1.0), 10_000));
        assert!(mvt_lemma_check(MvtProfile::Zero, (0.0, 1.0), 10));
        // derivative turns negative past the maximum
        assert!(!mvt_lemma_check(MvtProfile::Profile1, (0.0, 1.0), 10_000));
    }

    #[test]
    fn chain_examples() {
        let r = chain_to_b_check(10.0, 10.0, 1.0).unwrap();
        assert_eq!(r.link4, None);
        assert!(r.link1 && r.link2 && r.link3 && r.link5 && r.holds);
        let r = chain_to_b_check(2.0, 0.0, 1.0).unwrap();
        assert!((r.v - 5f64.sqrt()).abs() < 1e-15);
        assert!((r.b - 0.8047).abs() < 1e-4);
        assert_eq!(r.link4, Some(true));
        assert!(r.holds);
        assert!(chain_to_b_check(1.0, 0.0, 1.0).is_err());
    }
}
