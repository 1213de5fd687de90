//! Solve and check every configured instance.

use std::f64::consts::{FRAC_PI_4, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use lmc_core::estimates::{
    alpha_threshold, beta_window, build_cutoffs, choose_constants, doubling_report, gradient_estimate_report,
    jacobi_report, rescaled_c1_norm, sigma2_divergence_check, sigma2_divergence_on, test_function_p, volume_bound_report, ConstantLedger,
    CERTIFY_SAMPLES, JACOBI_MARGIN,
};
use lmc_core::geometry::{slope_field, volume_field};
use lmc_core::grid::{ball_region, Region, ScalarField};
use lmc_core::identities::{
    appendix_c, appendix_g_decreasing, appendix_lambda1_check, appendix_lambda2_check, appendix_profile1,
    appendix_profile2, appendix_x_star, case1_certificate_suite, case2_certificate_suite, case4_certificate_suite,
    chain_to_b_check, discriminant_scan, dpsi_control_suite, mvt_lemma_check, reflection_suite, three_way_suite,
    MvtProfile, SampleSuite, SamplerConfig,
};
use lmc_core::phase::{build_phase_signed, check_interpolation, ConstantPhase, PhaseField, PhaseKind};
use lmc_core::solver::{
    manufactured_problem, residual, solve_dirichlet, AnalyticPotential, PotentialField, SolveError, SolvePath,
};
use lmc_core::EstimateReport;

use crate::config::{InstanceConfig, PhaseName, RunConfig};

/// Instance id used for checks that do not belong to an instance.
pub const GLOBAL: &str = "global";

/// Checks run on every solved grid, in row order.
pub const INSTANCE_CHECKS: [&str; 9] = [
    "jacobi",
    "volume_bound",
    "sigma2_divergence",
    "doubling",
    "test_function",
    "gradient_estimate",
    "interpolation_pos",
    "interpolation_neg",
    "reflection",
];

const DERIVATIVE_BOUNDS: [&str; 4] = ["cutoff_rho_d1", "cutoff_rho_d2", "cutoff_chi_d1", "cutoff_chi_d2"];

/// Exit status of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Pass,
    Config,
    Solver,
    Checker,
}

impl Stage {
    pub fn exit_code(self) -> u8 {
        match self {
            Stage::Pass => 0,
            Stage::Config => 1,
            Stage::Solver => 2,
            Stage::Checker => 3,
        }
    }
}

/// One row of the check table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub instance: String,
    pub n: Option<usize>,
    pub check: String,
    pub lhs: f64,
    pub rhs: f64,
    pub defect: f64,
    pub location: Option<(usize, usize)>,
    pub tolerance: f64,
    pub pass: bool,
    pub notes: Vec<String>,
}

impl CheckRow {
    fn from_report(instance: &str, n: Option<usize>, check: &str, r: EstimateReport) -> Self {
        Self {
            instance: instance.into(),
            n,
            check: check.into(),
            lhs: r.lhs,
            rhs: r.rhs,
            defect: r.worst_defect,
            location: r.worst_location,
            tolerance: r.tolerance,
            pass: r.pass,
            notes: r.notes,
        }
    }

    fn error(instance: &str, n: Option<usize>, check: &str, e: impl std::fmt::Display) -> Self {
        Self {
            instance: instance.into(),
            n,
            check: check.into(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            defect: f64::NAN,
            location: None,
            tolerance: 0.0,
            pass: false,
            notes: vec![format!("error: {e}")],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveSummary {
    pub instance: String,
    pub n: usize,
    pub h: f64,
    pub converged: bool,
    pub residual_sup: f64,
    pub iterations: usize,
    pub krylov_iterations: usize,
    pub path: Option<String>,
    pub history: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub instance: String,
    pub n: usize,
    pub h: f64,
    /// `exact` or `richardson` (difference to the next finer grid).
    pub reference: &'static str,
    pub error: Option<f64>,
    /// `log₂(e_h / e_{h/2})`.
    pub order: Option<f64>,
}

/// Everything written to `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub seed: u64,
    pub solves: Vec<SolveSummary>,
    pub checks: Vec<CheckRow>,
    pub convergence: Vec<ConvergenceRow>,
    pub pass: bool,
    pub stage: Stage,
    pub messages: Vec<String>,
}

/// A solved grid, kept in memory for field dumps and further analysis.
#[derive(Debug, Clone)]
pub struct Solved {
    pub instance: String,
    pub n: usize,
    pub u: PotentialField,
    pub theta: PhaseField,
    pub jacobi_defect: Option<ScalarField>,
}

impl Solved {
    /// `(name, field)` pairs for the plain-text dumps.
    pub fn fields(&self) -> Vec<(&'static str, ScalarField)> {
        let mut out = vec![("u", self.u.u().clone()), ("theta", self.theta.theta().clone())];
        if let Ok(v) = volume_field(&self.u) {
            out.push(("V", v));
        }
        if let Ok(b) = slope_field(&self.u) {
            out.push(("b", b));
        }
        if let Some(d) = &self.jacobi_defect {
            out.push(("jacobi", d.clone()));
        }
        out
    }
}

pub struct RunOutcome {
    pub report: RunReport,
    pub solved: Vec<Solved>,
}

/// Which checks run: config toggles narrowed by an optional `--only` name.
#[derive(Debug, Clone)]
struct Filter<'a> {
    cfg: &'a RunConfig,
    only: Option<&'a str>,
}

impl Filter<'_> {
    fn toggle(&self, name: &str) -> bool {
        let c = &self.cfg.checks;
        match name {
            "jacobi" => c.jacobi,
            "volume_bound" => c.volume,
            "sigma2_divergence" => c.sigma2,
            "doubling" => c.doubling,
            "test_function" => c.test_function,
            "gradient_estimate" => c.gradient,
            "interpolation_pos" | "interpolation_neg" => c.interpolation,
            "reflection" => c.reflection,
            _ => true,
        }
    }

    fn on(&self, name: &str) -> bool {
        self.toggle(name) && self.only.map_or(true, |o| o == name)
    }

    fn keep_row(&self, group: &str, row: &str) -> bool {
        self.only.map_or(true, |o| o == group || o == row)
    }
}

struct Task<'a> {
    inst: &'a InstanceConfig,
    n: usize,
}

struct TaskResult {
    summary: Option<SolveSummary>,
    checks: Vec<CheckRow>,
    solved: Option<Solved>,
    exact: Option<ScalarField>,
    build_error: Option<String>,
}

fn build_problem(cfg: &RunConfig, inst: &InstanceConfig, n: usize) -> lmc_core::Result<(PhaseField, ScalarField, Option<ScalarField>)> {
    let grid = cfg.grid_for(n).map_err(|_| lmc_core::Error::InvalidGrid("grid size"))?;
    let preset = inst.preset();
    let boundary = || ScalarField::from_fn(grid, |p| preset.jet(p).value);
    Ok(match inst.phase {
        PhaseName::Constant => {
            let v = inst.constant_value().ok_or(lmc_core::Error::Domain("missing phase value"))?;
            (PhaseField::sample(grid, &ConstantPhase(v))?, boundary(), None)
        }
        PhaseName::Cubic => {
            let amplitude = inst.amplitude.ok_or(lmc_core::Error::Domain("missing amplitude"))?;
            (build_phase_signed(grid, PhaseKind::SignChangingCubic { amplitude })?, boundary(), None)
        }
        PhaseName::Manufactured => {
            let (theta, exact) = manufactured_problem(grid, &preset)?;
            (theta, exact.clone(), Some(exact))
        }
    })
}

fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(1.0)
}

fn run_task(cfg: &RunConfig, filter: &Filter, task: &Task) -> TaskResult {
    let (inst, n) = (task.inst, task.n);
    let id = inst.id.as_str();
    let (theta, boundary, exact) = match build_problem(cfg, inst, n) {
        Ok(p) => p,
        Err(e) => {
            return TaskResult {
                summary: None,
                checks: vec![],
                solved: None,
                exact: None,
                build_error: Some(format!("instance {id} at n = {n}: {e}")),
            }
        }
    };
    let h = theta.grid().h();
    let solved = match solve_dirichlet(&theta, &boundary, &cfg.solver.resolve()) {
        Ok(s) => s,
        Err(e) => {
            let history = match &e {
                SolveError::NotConverged { history, .. } => history.clone(),
                SolveError::Input(_) => vec![],
            };
            let residual_sup = history.last().copied().unwrap_or(f64::NAN);
            let summary = SolveSummary {
                instance: id.into(),
                n,
                h,
                converged: false,
                residual_sup,
                iterations: 0,
                krylov_iterations: 0,
                path: None,
                history,
                error: Some(e.to_string()),
            };
            return TaskResult { summary: Some(summary), checks: vec![], solved: None, exact, build_error: None };
        }
    };
    let summary = SolveSummary {
        instance: id.into(),
        n,
        h,
        converged: true,
        residual_sup: solved.residual_sup,
        iterations: solved.iterations,
        krylov_iterations: solved.krylov_iterations,
        path: Some(
            match solved.path {
                SolvePath::NewtonOnly => "newton",
                SolvePath::FlowThenNewton => "flow_then_newton",
            }
            .into(),
        ),
        history: solved.history.clone(),
        error: None,
    };
    let u = solved.u;
    let (checks, jacobi_defect) = instance_checks(cfg, filter, inst, n, &u, &theta);
    TaskResult {
        summary: Some(summary),
        checks,
        solved: Some(Solved { instance: id.into(), n, u, theta, jacobi_defect }),
        exact,
        build_error: None,
    }
}

fn ledger_for(cfg: &RunConfig, u: &PotentialField, r: f64) -> lmc_core::Result<ConstantLedger> {
    let big_gamma = rescaled_c1_norm(u, [0.0, 0.0], r)?;
    choose_constants(cfg.tolerances.gamma, big_gamma)
}

fn instance_checks(
    cfg: &RunConfig,
    filter: &Filter,
    inst: &InstanceConfig,
    n: usize,
    u: &PotentialField,
    theta: &PhaseField,
) -> (Vec<CheckRow>, Option<ScalarField>) {
    let id = inst.id.as_str();
    let grid = *u.grid();
    let h = grid.h();
    let tol = &cfg.tolerances;
    let mut rows = Vec::new();
    let mut jacobi_defect = None;
    let row = |name: &str, r: lmc_core::Result<EstimateReport>| match r {
        Ok(r) => CheckRow::from_report(id, Some(n), name, r),
        Err(e) => CheckRow::error(id, Some(n), name, e),
    };
    let jacobi_region = Region::interior(&grid, JACOBI_MARGIN);
    for name in INSTANCE_CHECKS {
        if !filter.on(name) {
            continue;
        }
        let r = match name {
            "jacobi" => {
                let out = jacobi_region.clone().and_then(|reg| jacobi_report(u, theta, &reg, tol.jacobi_k));
                match out {
                    Ok(o) => {
                        jacobi_defect = Some(o.defect);
                        row(name, Ok(o.report))
                    }
                    Err(e) => row(name, Err(e)),
                }
            }
            "volume_bound" => row(name, volume_bound_report(u, theta, inst.big_r)),
            "sigma2_divergence" => {
                let reach = (2.0 * inst.big_r).max(inst.r);
                let ball = ball_region(&grid, [0.0, 0.0], reach);
                row(name, ball.and_then(|b| sigma2_divergence_on(u, &b, tol.sigma2_c * h * h)))
            }
            "doubling" => row(name, doubling_report(u, [0.0, 0.0], inst.r)),
            "gradient_estimate" => row(name, gradient_estimate_report(u, inst.big_r)),
            "interpolation_pos" => row(name, check_interpolation(&theta.jet().positive_part(), &Region::full(&grid))),
            "interpolation_neg" => {
                row(name, check_interpolation(&theta.jet().negated().positive_part(), &Region::full(&grid)))
            }
            "test_function" => match ledger_for(cfg, u, inst.r).and_then(|l| {
                let t = test_function_p(u, theta, &l, [0.0, 0.0], inst.r)?;
                Ok((l, t))
            }) {
                Ok((l, t)) => {
                    let inside = !t.on_outer_layer;
                    CheckRow {
                        instance: id.into(),
                        n: Some(n),
                        check: name.into(),
                        lhs: t.max,
                        rhs: l.big_gamma,
                        defect: if inside { 1.0 } else { -1.0 },
                        location: Some(t.argmax),
                        tolerance: 0.0,
                        pass: inside && t.max.is_finite(),
                        notes: vec![format!(
                            "alpha = {:e}, beta = {:e}, gamma = {}, Gamma = {:e}",
                            l.alpha, l.beta, l.gamma, l.big_gamma
                        )],
                    }
                }
                Err(e) => CheckRow::error(id, Some(n), name, e),
            },
            "reflection" => reflection_row(cfg, inst, n, u, theta, jacobi_region.as_ref().ok()),
            _ => unreachable!(),
        };
        rows.push(r);
    }
    (rows, jacobi_defect)
}

/// Compares every per-instance quantity on `(u, Θ)` and `(−u, −Θ)`.
fn reflection_row(
    cfg: &RunConfig,
    inst: &InstanceConfig,
    n: usize,
    u: &PotentialField,
    theta: &PhaseField,
    region: Option<&Region>,
) -> CheckRow {
    let id = inst.id.as_str();
    let (nu, nt) = (u.negated(), theta.negated());
    let mut worst: f64 = 0.0;
    let mut notes = Vec::new();
    let mut compare = |what: &str, a: &[f64], b: &[f64], sign: f64| {
        let d = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max(rel_diff(*x, sign * y)));
        notes.push(format!("{what}: {d:e}"));
        worst = worst.max(d);
    };
    let result = (|| -> lmc_core::Result<()> {
        compare("residual", residual(u, theta)?.values(), residual(&nu, &nt)?.values(), -1.0);
        if let Some(reg) = region {
            let a = jacobi_report(u, theta, reg, cfg.tolerances.jacobi_k)?;
            let b = jacobi_report(&nu, &nt, reg, cfg.tolerances.jacobi_k)?;
            compare("jacobi", a.defect.values(), b.defect.values(), 1.0);
        }
        let va = volume_bound_report(u, theta, inst.big_r)?;
        let vb = volume_bound_report(&nu, &nt, inst.big_r)?;
        compare("volume", &[va.lhs, va.rhs], &[vb.lhs, vb.rhs], 1.0);
        let da = doubling_report(u, [0.0, 0.0], inst.r)?;
        let db = doubling_report(&nu, [0.0, 0.0], inst.r)?;
        compare("doubling", &[da.lhs, da.rhs], &[db.lhs, db.rhs], 1.0);
        let sa = sigma2_divergence_check(u, 0.0)?;
        let sb = sigma2_divergence_check(&nu, 0.0)?;
        compare("sigma2", &[sa.worst_defect], &[sb.worst_defect], 1.0);
        let full = Region::full(u.grid());
        let pa = check_interpolation(&theta.jet().positive_part(), &full)?;
        let pb = check_interpolation(&nt.jet().negated().positive_part(), &full)?;
        compare("interpolation", &[pa.worst_defect], &[pb.worst_defect], 1.0);
        Ok(())
    })();
    let tol = cfg.tolerances.reflection;
    match result {
        Ok(()) => CheckRow {
            instance: id.into(),
            n: Some(n),
            check: "reflection".into(),
            lhs: worst,
            rhs: 0.0,
            defect: -worst,
            location: None,
            tolerance: tol,
            pass: worst <= tol,
            notes,
        },
        Err(e) => CheckRow::error(id, Some(n), "reflection", e),
    }
}

fn suite_row(s: &SampleSuite) -> CheckRow {
    CheckRow::from_report(GLOBAL, None, s.name, s.to_report())
}

fn bool_row(check: &str, lhs: f64, rhs: f64, pass: bool, note: String) -> CheckRow {
    CheckRow {
        instance: GLOBAL.into(),
        n: None,
        check: check.into(),
        lhs,
        rhs,
        defect: if pass { 0.0 } else { -1.0 },
        location: None,
        tolerance: 0.0,
        pass,
        notes: vec![note],
    }
}

fn identity_rows(cfg: &RunConfig) -> Vec<CheckRow> {
    let sc = SamplerConfig { seed: cfg.seed, samples: cfg.checks.identity_samples };
    let suites: [fn(&SamplerConfig) -> SampleSuite; 5] = [
        three_way_suite,
        case1_certificate_suite,
        case2_certificate_suite,
        case4_certificate_suite,
        reflection_suite,
    ];
    let mut rows: Vec<CheckRow> = suites.par_iter().map(|f| suite_row(&f(&sc))).collect();
    let frac = dpsi_control_suite(&sc);
    rows.push(bool_row(
        "dpsi_control",
        frac,
        0.99,
        frac > 0.99,
        format!("fraction of unconstrained samples violating the constraint = {frac}"),
    ));
    rows
}

/// Dense scans of both arctan inequalities, the constant `C(p)`, the
/// mean-value lemma and the closing chain.
fn appendix_rows() -> Vec<CheckRow> {
    let mut rows = Vec::new();
    let n = 10_000;
    let mut min_f = f64::INFINITY;
    let mut ok = true;
    for k in 1..=n {
        let x = k as f64 / n as f64;
        ok &= appendix_lambda2_check(x);
        min_f = min_f.min(appendix_profile1(x).0);
    }
    let xs = appendix_x_star();
    rows.push(CheckRow {
        defect: min_f,
        tolerance: 1e-14,
        pass: ok && min_f >= -1e-14,
        ..bool_row("appendix_lambda2", min_f, 0.0, true, format!("points = {n}, x* = {xs}, f'(x*) = {:e}", appendix_profile1(xs).1))
    });
    let mut min_f = f64::INFINITY;
    let mut ok = true;
    for i in 0..=100 {
        let y = i as f64 / 100.0;
        for k in 0..=100 {
            let p = (k + 1) as f64 / 101.0;
            ok &= appendix_lambda1_check(y, p);
            min_f = min_f.min(appendix_profile2(y, p).0);
        }
    }
    let decreasing = (0..=100).all(|k| appendix_g_decreasing((k + 1) as f64 / 101.0, 1000));
    rows.push(CheckRow {
        defect: min_f,
        tolerance: 1e-14,
        pass: ok && decreasing && min_f >= -1e-14,
        ..bool_row("appendix_lambda1", min_f, 0.0, true, format!("101x101 (y, p) scan, g decreasing = {decreasing}"))
    });
    let c1 = appendix_c(1.0);
    let bound = c1 / 2f64.sqrt();
    rows.push(bool_row(
        "appendix_constant",
        bound,
        FRAC_PI_4,
        (c1 - 2f64.sqrt() * PI).abs() <= 1e-14 && (bound - PI).abs() <= 1e-14 && 1f64.atan() == FRAC_PI_4,
        format!("C(1) = {c1}, bound at y = 1 is {bound} against atan(1) = {FRAC_PI_4}"),
    ));
    let mvt = [
        mvt_lemma_check(MvtProfile::Profile1, (0.0, xs), n),
        mvt_lemma_check(MvtProfile::Profile2 { p: 0.5 }, (0.0, 1.0), n),
        mvt_lemma_check(MvtProfile::Zero, (0.0, 1.0), n),
    ];
    rows.push(bool_row("mvt_lemma", 0.0, 0.0, mvt.iter().all(|&b| b), format!("profile1, profile2(1/2), zero: {mvt:?}")));
    let mut notes = Vec::new();
    let mut ok = true;
    for (l1, l2, p) in [(10.0, 10.0, 1.0), (2.0, 0.0, 1.0), (5.0, -3.0, 0.5)] {
        match chain_to_b_check(l1, l2, p) {
            Ok(c) => {
                ok &= c.holds;
                notes.push(format!(
                    "({l1}, {l2}, {p}): links {} {} {} {:?} {}",
                    c.link1, c.link2, c.link3, c.link4, c.link5
                ));
            }
            Err(e) => {
                ok = false;
                notes.push(e.to_string());
            }
        }
    }
    rows.push(CheckRow { notes, ..bool_row("chain_to_b", 0.0, 0.0, ok, String::new()) });
    rows
}

fn ledger_rows(cfg: &RunConfig) -> Vec<CheckRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pairs = cfg.checks.ledger_pairs;
    let mut failures = 0;
    let mut first = None;
    for _ in 0..pairs {
        let g = rng.random_range(0.05..0.95);
        let gg = rng.random_range(1.0..=10.0);
        let ok = choose_constants(g, gg).map(|l| l.checks().iter().all(|c| c.holds)).unwrap_or(false);
        if !ok {
            failures += 1;
            first.get_or_insert((g, gg));
        }
    }
    let mut feas = bool_row(
        "ledger_feasibility",
        failures as f64,
        0.0,
        failures == 0 && pairs > 0,
        format!("seed = {}, pairs = {pairs}, failures = {failures}", cfg.seed),
    );
    if let Some((g, gg)) = first {
        feas.notes.push(format!("first failure: gamma = {g}, Gamma = {gg}"));
    }
    let (g, gg) = (0.3, 4.0);
    let a = 2.0 * alpha_threshold(g, gg);
    let empty = beta_window(a, g, gg).is_none();
    let all_reject = [a.powf(4.0 / 3.0) * 1.01, a / (16.0 * gg), 1e-30, 0.5 * a]
        .iter()
        .all(|&b| ConstantLedger::new(a, b, g, gg).validate().is_err());
    let reject = bool_row(
        "ledger_rejection",
        a,
        alpha_threshold(g, gg),
        empty && all_reject,
        format!("alpha = 2x threshold at gamma = {g}, Gamma = {gg}: window empty = {empty}"),
    );
    vec![feas, reject]
}

fn cutoff_rows(cfg: &RunConfig) -> Vec<CheckRow> {
    match build_cutoffs() {
        Ok(set) => set
            .certify(CERTIFY_SAMPLES)
            .into_iter()
            .filter(|r| cfg.checks.cutoff_bounds || !DERIVATIVE_BOUNDS.contains(&r.name.as_str()))
            .map(|r| {
                let name = r.name.clone();
                CheckRow::from_report(GLOBAL, None, &name, r)
            })
            .collect(),
        Err(e) => vec![CheckRow::error(GLOBAL, None, "cutoffs", e)],
    }
}

fn global_rows(cfg: &RunConfig, filter: &Filter) -> Vec<CheckRow> {
    let c = &cfg.checks;
    type Group<'a> = (bool, &'static str, Box<dyn Fn() -> Vec<CheckRow> + Sync + 'a>);
    let groups: Vec<Group> = vec![
        (c.identities, "identities", Box::new(|| identity_rows(cfg))),
        (c.discriminant, "discriminant", Box::new(|| vec![CheckRow::from_report(GLOBAL, None, "discriminant", discriminant_scan(10_000))])),
        (c.appendix, "appendix", Box::new(appendix_rows)),
        (c.ledger, "ledger", Box::new(|| ledger_rows(cfg))),
        (c.cutoffs, "cutoffs", Box::new(|| cutoff_rows(cfg))),
    ];
    let per_group: Vec<Vec<CheckRow>> = groups
        .par_iter()
        .map(|(enabled, name, f)| {
            if !*enabled || !group_selected(name, filter.only) {
                return vec![];
            }
            f().into_iter().filter(|r| filter.keep_row(name, &r.check)).collect()
        })
        .collect();
    per_group.into_iter().flatten().collect()
}

/// Whether `--only` selects a global group, by its own name or one of its
/// row names.
fn group_selected(group: &str, only: Option<&str>) -> bool {
    let Some(o) = only else { return true };
    if o == group {
        return true;
    }
    let rows: &[&str] = match group {
        "identities" => &[
            "three_way_identity",
            "case1_certificate",
            "case2_certificate",
            "case4_certificate",
            "reflection_invariance",
            "dpsi_control",
        ],
        "discriminant" => &["discriminant"],
        "appendix" => &["appendix_lambda2", "appendix_lambda1", "appendix_constant", "mvt_lemma", "chain_to_b"],
        "ledger" => &["ledger_feasibility", "ledger_rejection"],
        "cutoffs" => &[
            "cutoff_support",
            "cutoff_plateau",
            "cutoff_partition",
            "cutoff_sec_csc",
            "cutoff_rho_d1",
            "cutoff_rho_d2",
            "cutoff_chi_d1",
            "cutoff_chi_d2",
        ],
        _ => &[],
    };
    rows.contains(&o)
}

/// Max-norm error per grid: against the exact solution when one is known,
/// otherwise against the next finer grid restricted to the coarse nodes.
fn convergence_rows(cfg: &RunConfig, results: &[(usize, usize, &TaskResult)]) -> Vec<ConvergenceRow> {
    let mut rows = Vec::new();
    for (idx, inst) in cfg.instances.iter().enumerate() {
        let mut runs: Vec<(usize, &TaskResult)> =
            results.iter().filter(|(i, _, _)| *i == idx).map(|(_, n, r)| (*n, *r)).collect();
        runs.sort_by_key(|(n, _)| *n);
        let exact = runs.iter().any(|(_, r)| r.exact.is_some());
        let mut errs: Vec<(usize, f64, Option<f64>)> = Vec::new();
        for (k, (n, r)) in runs.iter().enumerate() {
            let h = 2.0 * cfg.grid.half_width / (*n as f64 - 1.0);
            let err = match (&r.solved, &r.exact) {
                (Some(s), Some(e)) => s.u.u().axpby(1.0, e, -1.0).ok().map(|d| d.max_abs()),
                (Some(s), None) => runs.get(k + 1).and_then(|(nf, rf)| {
                    let fine = rf.solved.as_ref()?;
                    if *nf != 2 * n - 1 {
                        return None;
                    }
                    let (c, f) = (s.u.u(), fine.u.u());
                    let mut m: f64 = 0.0;
                    for j in 0..*n {
                        for i in 0..*n {
                            m = m.max((c.at(i, j) - f.at(2 * i, 2 * j)).abs());
                        }
                    }
                    Some(m)
                }),
                _ => None,
            };
            errs.push((*n, h, err));
        }
        for (k, &(n, h, err)) in errs.iter().enumerate() {
            let order = match (err, errs.get(k + 1).and_then(|e| e.2)) {
                (Some(a), Some(b)) if a > 0.0 && b > 0.0 => Some((a / b).log2()),
                _ => None,
            };
            rows.push(ConvergenceRow {
                instance: inst.id.clone(),
                n,
                h,
                reference: if exact { "exact" } else { "richardson" },
                error: err,
                order,
            });
        }
    }
    rows
}

/// Runs every instance on every grid size plus the global checks.
///
/// Instances are solved in parallel; rows come back in configuration order
/// so the report does not depend on scheduling.
pub fn run(cfg: &RunConfig, only: Option<&str>) -> RunOutcome {
    let filter = Filter { cfg, only };
    let tasks: Vec<Task> =
        cfg.instances.iter().flat_map(|inst| cfg.grid.sizes.iter().map(move |&n| Task { inst, n })).collect();
    let any_instance_check = INSTANCE_CHECKS.iter().any(|c| filter.on(c));
    let solve_needed = only.is_none() || any_instance_check;
    let (results, globals) = rayon::join(
        || -> Vec<TaskResult> {
            if solve_needed {
                tasks.par_iter().map(|t| run_task(cfg, &filter, t)).collect()
            } else {
                vec![]
            }
        },
        || global_rows(cfg, &filter),
    );
    let mut messages = Vec::new();
    let mut solves = Vec::new();
    let mut checks = Vec::new();
    let mut solved = Vec::new();
    let mut indexed = Vec::new();
    for (k, r) in results.iter().enumerate() {
        if let Some(m) = &r.build_error {
            messages.push(m.clone());
        }
        if let Some(s) = &r.summary {
            solves.push(s.clone());
        }
        checks.extend(r.checks.iter().cloned());
        let idx = k / cfg.grid.sizes.len();
        indexed.push((idx, tasks[k].n, r));
    }
    checks.extend(globals);
    let convergence = convergence_rows(cfg, &indexed);
    for r in results {
        if let Some(s) = r.solved {
            solved.push(s);
        }
    }
    let stage = if !messages.is_empty() {
        Stage::Config
    } else if solves.iter().any(|s| !s.converged) {
        for s in solves.iter().filter(|s| !s.converged) {
            messages.push(format!("{} at n = {}: {}", s.instance, s.n, s.error.as_deref().unwrap_or("")));
        }
        Stage::Solver
    } else if checks.iter().any(|c| !c.pass) {
        Stage::Checker
    } else {
        Stage::Pass
    };
    let report = RunReport {
        seed: cfg.seed,
        solves,
        checks,
        convergence,
        pass: stage == Stage::Pass,
        stage,
        messages,
    };
    RunOutcome { report, solved }
}
