//! Linesearch extragradient solver for equilibrium problems
//!
//! > find `x* ∈ C` with `f(x*, y) ≥ 0` for all `y ∈ C`
//!
//! where `f(x, ·)` is only quasiconvex. Each iteration
//!
//! 1. solves the regularized subproblem `min_y f(x, y) + ‖y − x‖²/(2ρ_k)`
//!    ([`prox`]),
//! 2. backtracks along `[x, y]` until
//!    `f(z, x) − f(z, y) ≥ α‖y − x‖²/(2ρ_k)` ([`linesearch`]),
//! 3. takes a unit star-subgradient `g` of `f(z, ·)` at `x` and steps to
//!    `P_C(x − σ_k g)` ([`solver`]).
//!
//! [`verify`] holds brute-force grid oracles (gap, ρ-quasi residual, dual
//! residual) and sampled probes used to check runs; [`problems`] holds the
//! benchmark catalog.

pub mod bifunction;
pub mod error;
pub mod io;
pub mod linesearch;
pub mod problems;
pub mod prox;
pub mod schedule;
pub mod solver;
pub mod space;
pub mod verify;

pub use bifunction::{
    star_subgradient, Bifunction, ClosureBifunction, CubicBifunction, FractionalBranch,
    FractionalMaxBifunction, Matrix, RootQuadBifunction,
};
pub use error::{Error, Result};
pub use linesearch::{linesearch, LinesearchParams, LinesearchStep};
pub use problems::{ProblemInstance, ProblemSpec};
pub use prox::{solve_prox, ProxMethod, ProxProblem, ProxSolution, StepRule};
pub use schedule::{rho_at, sigma_at, RhoSchedule, SigmaSchedule};
pub use solver::{solve, step, IterationRecord, SolveResult, SolverConfig, Status, StepOutcome};
pub use space::{FeasibleSet, Point};
