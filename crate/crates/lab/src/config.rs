//! TOML run configuration.
//!
//! ```toml
//! seed = 7
//! out_dir = "out"
//!
//! [grid]
//! half_width = 1.0
//! sizes = [65, 129]
//!
//! [[instance]]
//! id = "quarter"
//! phase = "constant"
//! value_pi = 0.25
//! boundary = "preset"
//! a = 0.4142135623730951
//! c = 0.4142135623730951
//! s = 0.1
//! R = 0.4
//! r = 0.8
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use lmc_core::grid::Grid;
use lmc_core::solver::{PotentialPreset, SolveConfig};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub checks: Checks,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, rename = "instance")]
    pub instances: Vec<InstanceConfig>,
}

fn default_out() -> PathBuf {
    PathBuf::from("lmc-out")
}

/// Square grids `[−w, w]²`, one run per size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "one")]
    pub half_width: f64,
    pub sizes: Vec<usize>,
}

fn one() -> f64 {
    1.0
}

/// Overrides of [`SolveConfig`]; missing keys keep the library defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub newton_tol: Option<f64>,
    pub max_newton: Option<usize>,
    pub damping: Option<f64>,
    pub flow_dt: Option<f64>,
    pub flow_steps_max: Option<usize>,
    pub krylov_tol: Option<f64>,
    pub krylov_max_iter: Option<usize>,
}

impl SolverConfig {
    pub fn resolve(&self) -> SolveConfig {
        let d = SolveConfig::default();
        SolveConfig {
            newton_tol: self.newton_tol.unwrap_or(d.newton_tol),
            max_newton: self.max_newton.unwrap_or(d.max_newton),
            damping: self.damping.unwrap_or(d.damping),
            flow_dt: self.flow_dt.unwrap_or(d.flow_dt),
            flow_steps_max: self.flow_steps_max.unwrap_or(d.flow_steps_max),
            krylov_tol: self.krylov_tol.unwrap_or(d.krylov_tol),
            krylov_max_iter: self.krylov_max_iter.unwrap_or(d.krylov_max_iter),
        }
    }
}

/// Checker toggles. Per-instance checks run on every solved grid; the rest
/// run once per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Checks {
    pub jacobi: bool,
    pub volume: bool,
    pub sigma2: bool,
    pub doubling: bool,
    pub test_function: bool,
    pub gradient: bool,
    pub interpolation: bool,
    pub reflection: bool,
    pub identities: bool,
    pub discriminant: bool,
    pub appendix: bool,
    pub ledger: bool,
    pub cutoffs: bool,
    /// Include the sampled derivative bounds of the cutoffs.
    pub cutoff_bounds: bool,
    pub dump_fields: bool,
    pub identity_samples: usize,
    pub ledger_pairs: usize,
}

impl Default for Checks {
    fn default() -> Self {
        Self {
            jacobi: true,
            volume: true,
            sigma2: true,
            doubling: true,
            test_function: true,
            gradient: true,
            interpolation: true,
            reflection: true,
            identities: true,
            discriminant: true,
            appendix: true,
            ledger: true,
            cutoffs: true,
            cutoff_bounds: true,
            dump_fields: true,
            identity_samples: 100_000,
            ledger_pairs: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Jacobi defect must stay above `−jacobi_k·h`.
    pub jacobi_k: f64,
    /// σ₂ divergence defect must stay below `sigma2_c·h²`.
    pub sigma2_c: f64,
    /// `γ` of the ledger used for the test function.
    pub gamma: f64,
    /// Node-wise agreement of reflected fields, relative.
    pub reflection: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { jacobi_k: 20.0, sigma2_c: 10.0, gamma: 0.5, reflection: 1e-13 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseName {
    /// `Θ ≡ value`.
    Constant,
    /// `Θ = amplitude·(x + y/2)³`.
    Cubic,
    /// `Θ = F(D²u*)` for the boundary preset `u*`, which is then the exact
    /// solution.
    Manufactured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryName {
    /// `a x²/2 + b xy + c y²/2 + p x + q y + s sin x sin y + r4 (x²+y²)²`.
    Preset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    pub id: String,
    pub phase: PhaseName,
    pub value: Option<f64>,
    /// Phase value as a multiple of `π`.
    pub value_pi: Option<f64>,
    pub amplitude: Option<f64>,
    #[serde(default = "preset")]
    pub boundary: BoundaryName,
    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(default)]
    pub c: f64,
    #[serde(default)]
    pub p: f64,
    #[serde(default)]
    pub q: f64,
    #[serde(default)]
    pub s: f64,
    #[serde(default)]
    pub r4: f64,
    #[serde(default)]
    pub k30: f64,
    #[serde(default)]
    pub k21: f64,
    #[serde(default)]
    pub k12: f64,
    #[serde(default)]
    pub k03: f64,
    #[serde(default)]
    pub w: f64,
    /// Radius of the volume and gradient balls.
    #[serde(rename = "R")]
    pub big_r: f64,
    /// Radius of the doubling and test-function balls.
    pub r: f64,
}

fn preset() -> BoundaryName {
    BoundaryName::Preset
}

impl InstanceConfig {
    pub fn preset(&self) -> PotentialPreset {
        PotentialPreset {
            a: self.a,
            b: self.b,
            c: self.c,
            p: self.p,
            q: self.q,
            s: self.s,
            r4: self.r4,
            cubic: [self.k30, self.k21, self.k12, self.k03],
            w: self.w,
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        match (self.value, self.value_pi) {
            (Some(v), None) => Some(v),
            (None, Some(t)) => Some(t * std::f64::consts::PI),
            _ => None,
        }
    }

    fn validate(&self, grid: &GridConfig) -> Result<()> {
        let bad = |m: &str| Err(LabError::InvalidConfig(format!("instance {}: {m}", self.id)));
        match self.phase {
            PhaseName::Constant if self.constant_value().is_none() => {
                return bad("constant phase needs exactly one of value, value_pi")
            }
            PhaseName::Cubic if self.amplitude.is_none() => return bad("cubic phase needs amplitude"),
            _ => {}
        }
        if !(self.big_r > 0.0 && self.r > 0.0) {
            return bad("radii must be positive");
        }
        for &n in &grid.sizes {
            let h = 2.0 * grid.half_width / (n as f64 - 1.0);
            // the volume check reaches out to 2R
            let reach = (2.0 * self.big_r).max(self.r) + 3.0 * h;
            if reach > grid.half_width {
                return bad(&format!("ball of radius {} does not fit with a 3h margin at n = {n}", reach - 3.0 * h));
            }
        }
        Ok(())
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| LabError::ReadConfig { path: path.into(), source })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.sizes.is_empty() {
            return Err(LabError::InvalidConfig("grid.sizes is empty".into()));
        }
        for &n in &self.grid.sizes {
            if n % 2 == 0 {
                return Err(LabError::InvalidConfig(format!("grid size {n} must be odd so the origin is a node")));
            }
            self.grid_for(n)?;
        }
        self.solver.resolve().validate()?;
        let mut ids: Vec<&str> = self.instances.iter().map(|i| i.id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(LabError::InvalidConfig("duplicate instance id".into()));
        }
        let t = &self.tolerances;
        if !(t.gamma > 0.0 && t.gamma < 1.0) {
            return Err(LabError::InvalidConfig("tolerances.gamma must lie in (0, 1)".into()));
        }
        self.instances.iter().try_for_each(|i| i.validate(&self.grid))
    }

    pub fn grid_for(&self, n: usize) -> Result<Grid> {
        let w = self.grid.half_width;
        Ok(Grid::new([-w, -w], [2.0 * w, 2.0 * w], n)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [grid]
        sizes = [33]

        [[instance]]
        id = "flat"
        phase = "constant"
        value = 0.0
        a = 1.0
        c = -1.0
        R = 0.4
        r = 0.8
    "#;

    #[test]
    fn parses_minimal() {
        let cfg = RunConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.instances.len(), 1);
        assert_eq!(cfg.instances[0].preset(), PotentialPreset::HARMONIC);
        assert_eq!(cfg.solver.resolve(), SolveConfig::default());
        assert!(cfg.checks.jacobi);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(RunConfig::from_toml("[grid]\nsizes = []").is_err());
        assert!(RunConfig::from_toml("[grid]\nsizes = [64]").is_err());
        assert!(RunConfig::from_toml(&MINIMAL.replace("R = 0.4", "R = 0.49")).is_err());
        assert!(RunConfig::from_toml(&MINIMAL.replace("value = 0.0", "")).is_err());
        assert!(RunConfig::from_toml(&MINIMAL.replace("a = 1.0", "a = 1.0\nwat = 2")).is_err());
        assert!(RunConfig::from_toml(&format!("{MINIMAL}\n[solver]\nflow_dt = 1.0")).is_err());
    }

    #[test]
    fn value_pi() {
        let cfg = RunConfig::from_toml(&MINIMAL.replace("value = 0.0", "value_pi = -0.75")).unwrap();
        assert_eq!(cfg.instances[0].constant_value(), Some(-0.75 * std::f64::consts::PI));
    }
}
