//! Cutoff functions in the phase variable and in space.
//!
//! Every transition uses the quintic smoothstep `S(t) = 6t⁵ − 15t⁴ + 10t³`,
//! which is C² with `S'` and `S''` vanishing at both ends.

use core::f64::consts::PI;

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::Sym2;
use crate::report::EstimateReport;

/// `(S, S', S'')` at `t`, clamped outside `[0, 1]`.
pub fn smoothstep(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        (0.0, 0.0, 0.0)
    } else if t >= 1.0 {
        (1.0, 0.0, 0.0)
    } else {
        let t2 = t * t;
        (
            t2 * t * (10.0 + t * (-15.0 + 6.0 * t)),
            30.0 * t2 * (1.0 - t) * (1.0 - t),
            60.0 * t * (1.0 - t) * (1.0 - 2.0 * t),
        )
    }
}

/// A one-dimensional bump equal to 1 on `plateau` and vanishing outside
/// `support`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseCutoff {
    pub support: (f64, f64),
    pub plateau: (f64, f64),
}

impl PhaseCutoff {
    /// `(ρ, ρ', ρ'')` at `theta`.
    pub fn eval(&self, theta: f64) -> (f64, f64, f64) {
        let (s0, s1) = self.support;
        let (p0, p1) = self.plateau;
        if theta < p0 {
            let w = p0 - s0;
            let (v, d, dd) = smoothstep((theta - s0) / w);
            (v, d / w, dd / (w * w))
        } else if theta > p1 {
            let w = s1 - p1;
            let (v, d, dd) = smoothstep((s1 - theta) / w);
            (v, -d / w, dd / (w * w))
        } else {
            (1.0, 0.0, 0.0)
        }
    }
}

/// Radial cutoff `χ(x) = 1 − S(|x| − 1)`: 1 on `B₁`, zero outside `B₂`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RadialCutoff;

impl RadialCutoff {
    /// `(χ, Dχ, D²χ)` at `x`.
    pub fn eval(&self, x: [f64; 2]) -> (f64, [f64; 2], Sym2) {
        let r = x[0].hypot(x[1]);
        let (s, ds, dds) = smoothstep(r - 1.0);
        if ds == 0.0 && dds == 0.0 {
            return (1.0 - s, [0.0; 2], Sym2::default());
        }
        // χ = f(r): Dχ = f'·x/r, D²χ = f''·x̂x̂ᵀ + (f'/r)(I − x̂x̂ᵀ)
        let (f1, f2) = (-ds, -dds);
        let e = [x[0] / r, x[1] / r];
        let t = f1 / r;
        (
            1.0 - s,
            [f1 * e[0], f1 * e[1]],
            Sym2::new(
                f2 * e[0] * e[0] + t * (1.0 - e[0] * e[0]),
                (f2 - t) * e[0] * e[1],
                f2 * e[1] * e[1] + t * (1.0 - e[1] * e[1]),
            ),
        )
    }
}

/// `χ` and the five phase cutoffs `ρ₁ … ρ₅`.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffSet {
    pub chi: RadialCutoff,
    pub rho: [PhaseCutoff; 5],
}

/// `2/√(2 − √2)`, equal to `sec(3π/8)` and `csc(π/8)`.
pub fn c1() -> f64 {
    2.0 / (2.0 - 2f64.sqrt()).sqrt()
}

/// Points sampled per cutoff in [`CutoffSet::certify`].
pub const CERTIFY_SAMPLES: usize = 10_000;

const RHO_D1_BOUND: f64 = 8.0 / PI;
const RHO_D2_BOUND: f64 = 64.0 / (PI * PI);
const CHI_D1_BOUND: f64 = 1.0;
const CHI_D2_BOUND: f64 = 2.0;
const MARGIN: f64 = 1e-9;

/// Builds `χ, ρ₁, …, ρ₅` with the listed supports and plateaus and checks
/// their structure: plateau inside support, values in `[0, 1]`,
/// `Σρⱼ ≥ 1` on `(−π, π)`, and `|sec Θ|` (resp. `|csc Θ|`) at most `C₁` on the
/// supports of `ρ₁, ρ₃, ρ₅` (resp. `ρ₂, ρ₄`).
///
/// Derivative bounds are measured by [`CutoffSet::certify`], not enforced
/// here.
pub fn build_cutoffs() -> Result<CutoffSet> {
    let e = PI / 8.0;
    let set = CutoffSet {
        chi: RadialCutoff,
        rho: [
            PhaseCutoff { support: (-9.0 * e, -5.0 * e), plateau: (-PI, -6.0 * e) },
            PhaseCutoff { support: (-7.0 * e, -e), plateau: (-6.0 * e, -2.0 * e) },
            PhaseCutoff { support: (-3.0 * e, 3.0 * e), plateau: (-2.0 * e, 2.0 * e) },
            PhaseCutoff { support: (e, 7.0 * e), plateau: (2.0 * e, 6.0 * e) },
            PhaseCutoff { support: (5.0 * e, 9.0 * e), plateau: (6.0 * e, PI) },
        ],
    };
    for r in &set.rho {
        if !(r.support.0 < r.plateau.0 && r.plateau.0 < r.plateau.1 && r.plateau.1 < r.support.1) {
            return Err(Error::Cutoff("plateau must sit strictly inside the support"));
        }
    }
    let scan = set.scan(CERTIFY_SAMPLES);
    if !scan.values_in_unit_interval {
        return Err(Error::Cutoff("value outside [0, 1]"));
    }
    if scan.min_partition_sum < 1.0 {
        return Err(Error::Cutoff("cutoffs do not cover (-pi, pi)"));
    }
    if scan.max_sec_csc > c1() * (1.0 + 1e-12) {
        return Err(Error::Cutoff("sec/csc exceeds C1 on a support"));
    }
    Ok(set)
}

/// Sampled extrema of a cutoff set.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffScan {
    pub max_rho_d1: [f64; 5],
    pub max_rho_d2: [f64; 5],
    pub max_chi_d1: f64,
    pub max_chi_d2: f64,
    pub min_partition_sum: f64,
    pub max_sec_csc: f64,
    pub values_in_unit_interval: bool,
    /// Largest `|ρⱼ|` outside the support, largest `|1 − ρⱼ|` on the plateau.
    pub support_leak: f64,
    pub plateau_gap: f64,
}

/// `k`-th of `n` interior points of `(a, b)`.
fn open_sample(a: f64, b: f64, k: usize, n: usize) -> f64 {
    a + (b - a) * (k as f64 + 0.5) / n as f64
}

impl CutoffSet {
    /// Samples each cutoff at `n` points.
    pub fn scan(&self, n: usize) -> CutoffScan {
        let mut out = CutoffScan {
            max_rho_d1: [0.0; 5],
            max_rho_d2: [0.0; 5],
            max_chi_d1: 0.0,
            max_chi_d2: 0.0,
            min_partition_sum: f64::INFINITY,
            max_sec_csc: 0.0,
            values_in_unit_interval: true,
            support_leak: 0.0,
            plateau_gap: 0.0,
        };
        for (j, r) in self.rho.iter().enumerate() {
            let (s0, s1) = r.support;
            let (p0, p1) = r.plateau;
            // extend one ramp width past the support on both sides
            let (lo, hi) = (s0 - (p0 - s0), s1 + (s1 - p1));
            for k in 0..n {
                let t = open_sample(lo, hi, k, n);
                let (v, d, dd) = r.eval(t);
                out.max_rho_d1[j] = out.max_rho_d1[j].max(d.abs());
                out.max_rho_d2[j] = out.max_rho_d2[j].max(dd.abs());
                out.values_in_unit_interval &= (0.0..=1.0).contains(&v);
                if t <= s0 || t >= s1 {
                    out.support_leak = out.support_leak.max(v.abs());
                }
                if t >= p0 && t <= p1 {
                    out.plateau_gap = out.plateau_gap.max((1.0 - v).abs());
                }
            }
            // sec for ρ₁, ρ₃, ρ₅ and csc for ρ₂, ρ₄ on support ∩ (−π, π)
            let (a, b) = (s0.max(-PI), s1.min(PI));
            for k in 0..n {
                let t = open_sample(a, b, k, n);
                let v = if j % 2 == 0 { 1.0 / t.cos() } else { 1.0 / t.sin() };
                out.max_sec_csc = out.max_sec_csc.max(v.abs());
            }
        }
        for k in 0..n {
            let t = open_sample(-PI, PI, k, n);
            let s: f64 = self.rho.iter().map(|r| r.eval(t).0).sum();
            out.min_partition_sum = out.min_partition_sum.min(s);
        }
        // χ is radial: sample along a ray and rotate to a generic direction
        let (sn, cs) = 0.7f64.sin_cos();
        for k in 0..n {
            let r = open_sample(0.0, 2.5, k, n);
            let (v, g, h) = self.chi.eval([r * cs, r * sn]);
            out.values_in_unit_interval &= (0.0..=1.0).contains(&v);
            out.max_chi_d1 = out.max_chi_d1.max(g[0].hypot(g[1]));
            out.max_chi_d2 = out.max_chi_d2.max(h.spectral_norm());
            if r >= 2.0 {
                out.support_leak = out.support_leak.max(v.abs());
            }
            if r <= 1.0 {
                out.plateau_gap = out.plateau_gap.max((1.0 - v).abs());
            }
        }
        out
    }

    /// Certifies the cutoff requirements on a dense sample: support and
    /// plateau lists, `Σρⱼ ≥ 1`, `|ρ'| ≤ 8/π`, `|ρ''| ≤ 64/π²`, `|Dχ| < 1`,
    /// `|D²χ| < 2`, and the `C₁` bounds on sec/csc.
    pub fn certify(&self, samples: usize) -> Vec<EstimateReport> {
        let s = self.scan(samples);
        let max1 = s.max_rho_d1.iter().cloned().fold(0.0, f64::max);
        let max2 = s.max_rho_d2.iter().cloned().fold(0.0, f64::max);
        let bound = |name: &str, lhs: f64, rhs: f64, tol: f64| EstimateReport::new(name, lhs, rhs, rhs - lhs, None, tol);
        let strict = |name: &str, lhs: f64, rhs: f64| {
            let r = bound(name, lhs, rhs, 0.0);
            if lhs < rhs { r } else { r.fail("strict bound not met") }
        };
        let mut out = alloc::vec![
            bound("cutoff_support", s.support_leak, 0.0, 0.0),
            bound("cutoff_plateau", s.plateau_gap, 0.0, 0.0),
            bound("cutoff_partition", 1.0, s.min_partition_sum, 0.0),
            bound("cutoff_sec_csc", s.max_sec_csc, c1(), 1e-12 * c1()),
            bound("cutoff_rho_d1", max1, RHO_D1_BOUND, MARGIN),
            bound("cutoff_rho_d2", max2, RHO_D2_BOUND, MARGIN),
            strict("cutoff_chi_d1", s.max_chi_d1, CHI_D1_BOUND),
            strict("cutoff_chi_d2", s.max_chi_d2, CHI_D2_BOUND),
        ];
        out[4] = out[4].clone().with_note(format!("per-cutoff max |rho'| = {:?}", s.max_rho_d1));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothstep_profile() {
        assert_eq!(smoothstep(0.0), (0.0, 0.0, 0.0));
        assert_eq!(smoothstep(1.0), (1.0, 0.0, 0.0));
        let (v, d, _) = smoothstep(0.5);
        assert!((v - 0.5).abs() < 1e-15 && (d - 15.0 / 8.0).abs() < 1e-15);
        // derivative oracle
        let e = 1e-6;
        for t in [0.1, 0.37, 0.8] {
            let (_, d, dd) = smoothstep(t);
            assert!(((smoothstep(t + e).0 - smoothstep(t - e).0) / (2.0 * e) - d).abs() < 1e-8);
            assert!(((smoothstep(t + e).1 - smoothstep(t - e).1) / (2.0 * e) - dd).abs() < 1e-7);
        }
    }

    #[test]
    fn cutoff_examples() {
        let set = build_cutoffs().unwrap();
        let rho3 = set.rho[2];
        assert_eq!(rho3.eval(0.0).0, 1.0);
        assert_eq!(rho3.eval(3.0 * PI / 8.0).0, 0.0);
        assert_eq!(rho3.eval(-3.0 * PI / 8.0).0, 0.0);
        let s: f64 = set.rho.iter().map(|r| r.eval(-PI / 4.0).0).sum();
        assert!(s >= 1.0);
    }

    #[test]
    fn c1_value() {
        assert!((c1() - 2.613_125_929_752_753).abs() < 1e-10);
        assert!((c1() - 1.0 / (3.0 * PI / 8.0).cos()).abs() < 1e-12);
        assert!((c1() - 1.0 / (PI / 8.0).sin()).abs() < 1e-12);
    }

    #[test]
    fn structural_certificates_pass() {
        let reps = build_cutoffs().unwrap().certify(CERTIFY_SAMPLES);
        for r in &reps[..4] {
            assert!(r.pass, "{r:?}");
        }
    }

    /// Any ramp from 0 to 1 over width π/8 has slope ≥ 8/π somewhere, so
    /// the quintic ramp's maximum slope is 15/8 of that value.
    #[test]
    fn ramp_slope_is_forced_above_eight_over_pi() {
        let s = build_cutoffs().unwrap().scan(CERTIFY_SAMPLES);
        for m in s.max_rho_d1 {
            assert!((m / (15.0 / PI) - 1.0).abs() < 1e-5, "{m}");
        }
        assert!((s.max_chi_d1 - 15.0 / 8.0).abs() < 1e-4);
    }

    #[test]
    fn radial_derivatives_match_differences() {
        let e = 1e-6;
        for p in [[1.3, 0.2], [0.9, -1.1], [-0.4, 1.6]] {
            let (_, g, h) = RadialCutoff.eval(p);
            let f = |x: f64, y: f64| RadialCutoff.eval([x, y]);
            let gx = (f(p[0] + e, p[1]).0 - f(p[0] - e, p[1]).0) / (2.0 * e);
            let hxy = (f(p[0], p[1] + e).1[0] - f(p[0], p[1] - e).1[0]) / (2.0 * e);
            let hyy = (f(p[0], p[1] + e).1[1] - f(p[0], p[1] - e).1[1]) / (2.0 * e);
            assert!((gx - g[0]).abs() < 1e-7);
            assert!((hxy - h.xy).abs() < 1e-6 && (hyy - h.yy).abs() < 1e-6);
        }
    }
}
