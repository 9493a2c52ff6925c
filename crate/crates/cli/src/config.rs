//! Run configuration files.
//!
//! ```json
//! {
//!   "problem": { "kind": "example_4_1", "r": 2, "delta": 10 },
//!   "solver": { "sigma": { "kind": "harmonic", "c": 2 }, "tol_xy": 1e-3 },
//!   "output": { "trace": "trace.csv", "summary": "summary.json" }
//! }
//! ```
//!
//! Unknown fields anywhere are rejected. Every `solver` field is optional
//! and overrides the problem's own defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use quasieq::problems::{ProblemInstance, ProblemSpec};
use quasieq::{ProxMethod, RhoSchedule, SigmaSchedule, SolverConfig};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    #[serde(default)]
    pub solver: SolverOverrides,
    #[serde(default)]
    pub output: OutputPaths,
}

/// A constant `ρ` or a nonincreasing sequence (its last value repeats).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RhoSpec {
    Constant(f64),
    Sequence(Vec<f64>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SigmaSpec {
    /// `σ_k = c / (k + 1)`
    Harmonic { c: f64 },
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOverrides {
    pub alpha: Option<f64>,
    pub theta: Option<f64>,
    pub rho: Option<RhoSpec>,
    pub sigma: Option<SigmaSpec>,
    pub tol_xy: Option<f64>,
    pub tol_step: Option<f64>,
    pub max_iters: Option<usize>,
    pub m_max: Option<u32>,
    pub prox: Option<ProxMethod>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    pub trace: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

impl SolverOverrides {
    pub fn apply(&self, config: &mut SolverConfig) -> Result<(), String> {
        if let Some(v) = self.alpha {
            config.alpha = v;
        }
        if let Some(v) = self.theta {
            config.theta = v;
        }
        match &self.rho {
            Some(RhoSpec::Constant(r)) => {
                if !(*r > 0.0 && r.is_finite()) {
                    return Err(format!("solver.rho must be positive, got {r}"));
                }
                config.rho = RhoSchedule::Constant(*r);
            }
            Some(RhoSpec::Sequence(v)) => {
                config.rho = RhoSchedule::sequence(v.clone()).map_err(|e| format!("solver.rho: {e}"))?;
            }
            None => {}
        }
        if let Some(SigmaSpec::Harmonic { c }) = self.sigma {
            if !(c > 0.0 && c.is_finite()) {
                return Err(format!("solver.sigma.c must be positive, got {c}"));
            }
            config.sigma = SigmaSchedule::Harmonic(c);
        }
        if let Some(v) = self.tol_xy {
            config.tol_xy = v;
        }
        if let Some(v) = self.tol_step {
            config.tol_step = v;
        }
        if let Some(v) = self.max_iters {
            config.max_iters = v;
        }
        if let Some(v) = self.m_max {
            config.m_max = v;
        }
        if let Some(v) = self.prox {
            config.prox = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        config.validate().map_err(|e| format!("solver: {e}"))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// The problem instance with solver overrides applied.
    pub fn instance(&self) -> Result<ProblemInstance, String> {
        let mut inst = self.problem.build().map_err(|e| format!("problem: {e}"))?;
        self.solver.apply(&mut inst.config)?;
        Ok(inst)
    }
}
