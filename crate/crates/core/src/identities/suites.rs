//! Seeded randomized suites over [`FrameSample`]s.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[allow(unused_imports)]
use num_traits::Float;

use super::{
    case1_certificate, case2_certificate, case2_half_gradient, case4_certificate, discriminant_check,
    dpsi_residual, gradnorm_direct, lemma31_direct, three_way_defect, case1_assembled, FrameSample,
};
use crate::report::EstimateReport;

/// Relative tolerance of the three-way identity.
pub const THREE_WAY_TOL: f64 = 1e-11;
/// Relative slack of the pointwise certificates.
pub const CERTIFICATE_TOL: f64 = 1e-12;
/// Samples below this phase go to the zero-phase certificate.
pub const SMALL_THETA: f64 = 1e-6;

const LAMBDA_MIN: f64 = 1e-3;
const LAMBDA_MAX: f64 = 1e3;
const H_SCALE: f64 = 10.0;
const H_MAX: f64 = 100.0;
const DTHETA_MAX: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub seed: u64,
    pub samples: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { seed: 0x5eed, samples: 100_000 }
    }
}

/// Outcome of a randomized suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSuite {
    pub name: &'static str,
    pub seed: u64,
    pub samples: usize,
    pub failures: usize,
    /// Largest relative violation seen (negative means every sample had room).
    pub worst: f64,
    pub first_failure: Option<FrameSample>,
}

impl SampleSuite {
    fn new(name: &'static str, cfg: &SamplerConfig) -> Self {
        Self { name, seed: cfg.seed, samples: 0, failures: 0, worst: f64::NEG_INFINITY, first_failure: None }
    }

    /// Records `violation` (relative, `> 0` is a failure).
    fn record(&mut self, s: &FrameSample, violation: f64) {
        self.samples += 1;
        if violation.is_nan() || violation > 0.0 {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(*s);
            }
        }
        if violation > self.worst || violation.is_nan() {
            self.worst = violation;
        }
    }

    pub fn pass(&self) -> bool {
        self.failures == 0 && self.samples > 0
    }

    pub fn to_report(&self) -> EstimateReport {
        let mut r = EstimateReport::new(self.name, self.failures as f64, 0.0, -(self.failures as f64), None, 0.0)
            .with_note(format!("seed={} samples={} worst={:e}", self.seed, self.samples, self.worst));
        if let Some(s) = &self.first_failure {
            r = r.with_note(format!("first failure: {s:?}"));
        }
        if self.samples == 0 {
            r.pass = false;
        }
        r
    }
}

struct Sampler {
    rng: ChaCha8Rng,
    normal: Normal<f64>,
}

impl Sampler {
    fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed), normal: Normal::new(0.0, H_SCALE).unwrap() }
    }

    fn log_uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let t: f64 = self.rng.random_range(0.0..=1.0);
        (lo.ln() + t * (hi.ln() - lo.ln())).exp()
    }

    fn signed_lambda(&mut self) -> f64 {
        let m = self.log_uniform(LAMBDA_MIN, LAMBDA_MAX);
        if self.rng.random_bool(0.5) { m } else { -m }
    }

    fn h(&mut self) -> f64 {
        self.normal.sample(&mut self.rng).clamp(-H_MAX, H_MAX)
    }

    fn dtheta(&mut self) -> [f64; 2] {
        let r = self.rng.random_range(0.0..=DTHETA_MAX);
        let a = self.rng.random_range(0.0..2.0 * PI);
        [r * a.cos(), r * a.sin()]
    }

    /// Third derivatives and phase derivatives around a given spectrum.
    fn fill(&mut self, lambda1: f64, lambda2: f64, theta: f64) -> FrameSample {
        FrameSample {
            lambda1,
            lambda2,
            h111: self.h(),
            h112: self.h(),
            h122: self.h(),
            h222: self.h(),
            theta,
            dtheta: self.dtheta(),
            d2theta_diag: [self.h(), self.h()],
        }
    }

    fn free(&mut self) -> FrameSample {
        let (l1, l2) = (self.signed_lambda(), self.signed_lambda());
        self.fill(l1, l2, l1.atan() + l2.atan())
    }

    /// `0 < Θ < π/2` with `λ₁ ≥ tanΘ`, so that `σ₁ ≥ 0 ≥ σ₂`.
    fn case1(&mut self) -> FrameSample {
        let theta = self.rng.random_range(SMALL_THETA..FRAC_PI_2);
        let lo = theta.tan().max(LAMBDA_MIN);
        let l1 = self.log_uniform(lo, LAMBDA_MAX.max(10.0 * lo));
        let l2 = (theta - l1.atan()).tan().min(0.0);
        self.fill(l1, l2, theta).constrained()
    }

    /// `π/2 < Θ < π` with `atan λ₁ ∈ [Θ/2, π/2)`.
    fn case2(&mut self) -> FrameSample {
        let theta = self.rng.random_range(FRAC_PI_2..PI);
        let theta = if theta == FRAC_PI_2 { FRAC_PI_2 + 1e-9 } else { theta };
        let a1 = self.rng.random_range(theta / 2.0..FRAC_PI_2);
        let (l1, l2) = (a1.tan(), (theta - a1).tan());
        self.fill(l1, l2, theta).constrained()
    }

    /// `|Θ| < 1e-6` with `DΘ = 0`.
    fn case4(&mut self) -> FrameSample {
        let theta = self.rng.random_range(-SMALL_THETA..SMALL_THETA);
        let l1 = self.signed_lambda();
        let l2 = (theta - l1.atan()).tan();
        let mut s = self.fill(l1, l2, theta);
        s.dtheta = [0.0, 0.0];
        s.constrained()
    }
}

fn relative_violation(defect: f64, scale: f64, tol: f64) -> f64 {
    defect / scale.max(f64::MIN_POSITIVE) - tol
}

/// `case1_assembled = lemma31_direct − ε·gradnorm_direct` with
/// `ε = sin|Θ|/4`, relative to the sum of absolute summands.
pub fn three_way_suite(cfg: &SamplerConfig) -> SampleSuite {
    let mut sampler = Sampler::new(cfg.seed);
    let mut suite = SampleSuite::new("three_way_identity", cfg);
    for _ in 0..cfg.samples {
        let s = sampler.free().constrained();
        let (d, scale) = three_way_defect(&s, s.theta.abs().sin() / 4.0);
        suite.record(&s, relative_violation(d, scale, THREE_WAY_TOL));
    }
    suite
}

fn certificate_suite(
    name: &'static str,
    cfg: &SamplerConfig,
    draw: fn(&mut Sampler) -> FrameSample,
    check: fn(&FrameSample) -> super::Certificate,
) -> SampleSuite {
    let mut sampler = Sampler::new(cfg.seed);
    let mut suite = SampleSuite::new(name, cfg);
    for _ in 0..cfg.samples {
        let s = draw(&mut sampler);
        let c = check(&s);
        suite.record(&s, relative_violation(-c.defect(), c.scale, CERTIFICATE_TOL));
    }
    suite
}

pub fn case1_certificate_suite(cfg: &SamplerConfig) -> SampleSuite {
    certificate_suite("case1_certificate", cfg, Sampler::case1, case1_certificate)
}

/// The final `(3/8)` bound and the intermediate half-gradient display.
pub fn case2_certificate_suite(cfg: &SamplerConfig) -> SampleSuite {
    let mut sampler = Sampler::new(cfg.seed);
    let mut suite = SampleSuite::new("case2_certificate", cfg);
    for _ in 0..cfg.samples {
        let s = sampler.case2();
        let v = [case2_certificate(&s), case2_half_gradient(&s)]
            .iter()
            .map(|c| relative_violation(-c.defect(), c.scale, CERTIFICATE_TOL))
            .fold(f64::NEG_INFINITY, f64::max);
        suite.record(&s, v);
    }
    suite
}

pub fn case4_certificate_suite(cfg: &SamplerConfig) -> SampleSuite {
    certificate_suite("case4_certificate", cfg, Sampler::case4, case4_certificate)
}

/// Values entering the certificates agree on a sample and its reflection,
/// and each certificate passes on both or on neither.
pub fn reflection_suite(cfg: &SamplerConfig) -> SampleSuite {
    let mut sampler = Sampler::new(cfg.seed);
    let mut suite = SampleSuite::new("reflection_invariance", cfg);
    for k in 0..cfg.samples {
        let s = match k % 3 {
            0 => sampler.case1(),
            1 => sampler.case2(),
            _ => sampler.free().constrained(),
        };
        let r = s.reflected();
        let eps = s.theta.abs().sin() / 4.0;
        let pairs = [
            (lemma31_direct(&s), lemma31_direct(&r)),
            (gradnorm_direct(&s), gradnorm_direct(&r)),
            (s.slope_gradient_norm_sq(), r.slope_gradient_norm_sq()),
            (case1_assembled(&s, eps), case1_assembled(&r, eps)),
        ];
        let (_, scale) = three_way_defect(&s, eps);
        let mut v = pairs
            .iter()
            .map(|(a, b)| relative_violation((a - b).abs(), scale, THREE_WAY_TOL))
            .fold(f64::NEG_INFINITY, f64::max);
        let d = dpsi_residual(&r);
        if d[0].abs().max(d[1].abs()) > 1e-9 * (1.0 + scale.sqrt()) {
            v = v.max(1.0);
        }
        let check: Option<fn(&FrameSample) -> super::Certificate> = match k % 3 {
            0 => Some(case1_certificate),
            1 => Some(case2_certificate),
            _ => None,
        };
        if let Some(check) = check {
            let mut flipped = r;
            flipped.theta = -flipped.theta.abs();
            if check(&s).holds(CERTIFICATE_TOL) != check(&flipped).holds(CERTIFICATE_TOL) {
                v = v.max(1.0);
            }
        }
        suite.record(&s, v);
    }
    suite
}

/// Negative control: unconstrained samples violate the constraint.
/// Returns the fraction of samples with a residual above `1e-8`.
pub fn dpsi_control_suite(cfg: &SamplerConfig) -> f64 {
    let mut sampler = Sampler::new(cfg.seed);
    let hits = (0..cfg.samples)
        .filter(|_| {
            let d = dpsi_residual(&sampler.free());
            d[0].abs().max(d[1].abs()) > 1e-8
        })
        .count();
    hits as f64 / cfg.samples.max(1) as f64
}

/// Scan of the discriminant certificate at `Θₖ = kπ/(2n)`, `k = 1..=n`.
/// `lhs` is the minimum quartic, `rhs` its value at `π/2`.
pub fn discriminant_scan(n: usize) -> EstimateReport {
    let mut min_q = f64::INFINITY;
    let mut at = None;
    let mut all_ok = true;
    let mut endpoint = f64::NAN;
    let thetas: Vec<f64> = (1..=n).map(|k| FRAC_PI_2 * k as f64 / n as f64).collect();
    for (k, &t) in thetas.iter().enumerate() {
        let d = match discriminant_check(t) {
            Ok(d) => d,
            Err(_) => {
                all_ok = false;
                continue;
            }
        };
        all_ok &= d.ok;
        if d.quartic < min_q {
            min_q = d.quartic;
            at = Some((k + 1, 0));
        }
        if k + 1 == n {
            endpoint = d.quartic;
        }
    }
    let tol = 1e-12;
    let mut r = EstimateReport::new("discriminant", min_q, endpoint, min_q.min(0.0), at, tol);
    if !all_ok || endpoint.abs() > tol || n == 0 {
        r = r.fail("quartic or cot inequality violated");
    }
    r.with_note(format!("points={n} min_quartic={min_q:e} quartic(pi/2)={endpoint:e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(samples: usize) -> SamplerConfig {
        SamplerConfig { seed: 7, samples }
    }

    #[test]
    fn suites_pass_small() {
        for s in [
            three_way_suite(&cfg(2000)),
            case1_certificate_suite(&cfg(2000)),
            case2_certificate_suite(&cfg(2000)),
            case4_certificate_suite(&cfg(2000)),
            reflection_suite(&cfg(2000)),
        ] {
            assert!(s.pass(), "{s:?}");
            assert_eq!(s.samples, 2000);
        }
    }

    #[test]
    fn suites_are_deterministic() {
        assert_eq!(three_way_suite(&cfg(300)), three_way_suite(&cfg(300)));
        let a = Sampler::new(1).free();
        let b = Sampler::new(1).free();
        let c = Sampler::new(2).free();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn samplers_respect_regimes() {
        let mut s = Sampler::new(3);
        for _ in 0..500 {
            let a = s.case1();
            assert!(a.sigma1() >= 0.0 && a.sigma2() <= 0.0 && a.theta > 0.0);
            assert!(a.lambda1.abs() <= 1e4);
            let b = s.case2();
            assert!(b.lambda1 > 0.0 && b.lambda2 > 0.0 && b.theta > FRAC_PI_2);
            let c = s.case4();
            assert_eq!(c.dtheta, [0.0, 0.0]);
        }
    }

    #[test]
    fn unconstrained_control_fails() {
        assert!(dpsi_control_suite(&cfg(1000)) > 0.99);
    }

    #[test]
    fn discriminant_scan_passes() {
        let r = discriminant_scan(10_000);
        assert!(r.pass, "{r:?}");
        assert!(r.lhs >= 0.0 && r.rhs.abs() < 1e-12);
    }

    #[test]
    fn broken_certificate_is_caught() {
        // dropping the |DΘ|² allowance breaks the first-case bound
        let suite = certificate_suite("negative", &cfg(2000), Sampler::case1, |s| {
            let mut c = case1_certificate(s);
            let g = s.gii();
            c.rhs = g[0] * s.lambda1 * s.d2theta_diag[0] + g[1] * s.lambda2 * s.d2theta_diag[1];
            c
        });
        assert!(suite.failures > 0);
        assert!(suite.first_failure.is_some());
    }
}
