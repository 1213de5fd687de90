//! Constants of the doubling test function and their feasibility chain.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Exponent `ν` of the `ln ρ` term.
pub const NU: f64 = 6.0;
/// Exponent `q` of the Hessian power.
pub const Q: f64 = 2.0 / 3.0;

/// Constants `(ν, q, α, β, γ, Γ)` of the test function
/// `P = ν ln ρ + α(x·Du − u) + β|Du|²/2 + ln max(b̄, 1/γ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantLedger {
    pub nu: f64,
    pub q: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// `Γ = 1 + ‖u‖_{C¹}`.
    pub big_gamma: f64,
}

/// One named inequality of the ledger together with its outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerCheck {
    pub family: &'static str,
    pub holds: bool,
}

impl ConstantLedger {
    /// Unvalidated ledger with `ν = 6`, `q = 2/3`.
    pub fn new(alpha: f64, beta: f64, gamma: f64, big_gamma: f64) -> Self {
        Self { nu: NU, q: Q, alpha, beta, gamma, big_gamma }
    }

    /// `ε(Θ) = sin Θ / 4`.
    pub fn epsilon(theta: f64) -> f64 {
        theta.sin() / 4.0
    }

    /// `η(Θ) = sin Θ`.
    pub fn eta(theta: f64) -> f64 {
        theta.sin()
    }

    /// Evaluates every ledger inequality verbatim.
    pub fn checks(&self) -> Vec<LedgerCheck> {
        let (a, b, g, gg) = (self.alpha.abs(), self.beta, self.gamma, self.big_gamma);
        let a43 = a.powf(4.0 / 3.0);
        let g23 = g.powf(2.0 / 3.0);
        let bg43 = (b * gg).powf(4.0 / 3.0);
        let s43 = 16f64.powf(4.0 / 3.0);
        let all = |c: &[bool]| c.iter().all(|&x| x);
        let mut out = Vec::new();
        let mut push = |family, holds| out.push(LedgerCheck { family, holds });
        push(
            "basic",
            all(&[a > 0.0, a < 1.0, b > 0.0, b < 1.0, self.nu > 1.0, g > 0.0, g < 1.0]),
        );
        push("ogalbet", all(&[a43 / b < g / 292.0, 16.0 * gg < a / b]));
        push(
            "albet",
            all(&[
                a * a < (b / 292.0) * g23,
                (b / 292.0) * g23 < b / 32.0,
                b * gg * gg < g23 / 292.0,
                g23 / 292.0 < 1.0 / 32.0,
            ]),
        );
        push("albet2", b * gg < a / 16.0);
        push("albet3", all(&[a43 < (b / 292.0) * g23, bg43 < (b / 292.0) * g23]));
        push("albet4", all(&[a43 < (b / 292.0) * g, bg43 < (b / 292.0) * g]));
        push("interval", all(&[a43 < b, b < a]));
        let p32 = 292f64.powf(1.5);
        push(
            "implication_chain",
            all(&[
                bg43 < a43 / s43,
                a43 / s43 < b * g / (s43 * 292.0),
                b * g / (s43 * 292.0) < b * g / 292.0,
                b * g / 292.0 < b * g23 / 292.0,
                a * a < (b * g).powf(1.5) / p32,
                (b * g).powf(1.5) / p32 < b * g / 292.0,
            ]),
        );
        out
    }

    /// Fails with the first violated family.
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.beta.is_finite() && self.gamma.is_finite() && self.big_gamma.is_finite()) {
            return Err(Error::NonFinite("ledger constants"));
        }
        match self.checks().into_iter().find(|c| !c.holds) {
            Some(c) => Err(Error::Ledger(c.family)),
            None => Ok(()),
        }
    }
}

/// `(γ/(4672Γ))³`: `α` must lie strictly below this for the ogalbet pair to
/// admit any `β`.
pub fn alpha_threshold(gamma: f64, big_gamma: f64) -> f64 {
    (gamma / (4672.0 * big_gamma)).powi(3)
}

/// Open interval `(292α^{4/3}/γ, α/(16Γ))` of admissible `β`, or `None`
/// when it is empty.
pub fn beta_window(alpha: f64, gamma: f64, big_gamma: f64) -> Option<(f64, f64)> {
    let a = alpha.abs();
    let lo = 292.0 * a.powf(4.0 / 3.0) / gamma;
    let hi = a / (16.0 * big_gamma);
    (lo < hi).then_some((lo, hi))
}

/// Picks `α = ½(γ/(4672Γ))³` and `β` as the geometric mean of the admissible
/// window, then validates the whole ledger.
pub fn choose_constants(gamma: f64, big_gamma: f64) -> Result<ConstantLedger> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Domain("gamma must lie in (0, 1)"));
    }
    if !(big_gamma >= 1.0 && big_gamma.is_finite()) {
        return Err(Error::Domain("Gamma must be finite and at least 1"));
    }
    let alpha = 0.5 * alpha_threshold(gamma, big_gamma);
    let (lo, hi) = beta_window(alpha, gamma, big_gamma).ok_or(Error::Ledger("empty beta window"))?;
    let ledger = ConstantLedger::new(alpha, (lo * hi).sqrt(), gamma, big_gamma);
    ledger.validate()?;
    Ok(ledger)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_half_two() {
        let l = choose_constants(0.5, 2.0).unwrap();
        let thr = alpha_threshold(0.5, 2.0);
        assert!((thr / 1.53e-13 - 1.0).abs() < 0.01, "{thr:e}");
        assert!((l.alpha / 7.66e-14 - 1.0).abs() < 0.01);
        assert!(l.alpha.powf(4.0 / 3.0) < l.beta && l.beta < l.alpha);
        assert!(l.checks().iter().all(|c| c.holds));
    }

    #[test]
    fn near_one() {
        let l = choose_constants(1.0 - 1e-12, 1.0).unwrap();
        assert!(l.validate().is_ok());
    }

    #[test]
    fn alpha_above_threshold_is_infeasible() {
        let (g, gg) = (0.3, 4.0);
        let a = 2.0 * alpha_threshold(g, gg);
        assert!(beta_window(a, g, gg).is_none());
        // any β fails one half of the ogalbet pair
        for b in [a.powf(4.0 / 3.0) * 1.01, a / (16.0 * gg), 1e-30, 0.5 * a] {
            assert_eq!(ConstantLedger::new(a, b, g, gg).validate(), Err(Error::Ledger("ogalbet")));
        }
    }

    #[test]
    fn precondition_rejection() {
        assert!(choose_constants(0.0, 2.0).is_err());
        assert!(choose_constants(0.5, 0.5).is_err());
        assert!(choose_constants(1.0, 2.0).is_err());
    }

    #[test]
    fn eps_eta() {
        assert!((ConstantLedger::epsilon(core::f64::consts::FRAC_PI_6) - 0.125).abs() < 1e-16);
        assert_eq!(ConstantLedger::eta(0.0), 0.0);
    }
}
