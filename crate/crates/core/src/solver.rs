//! The outer extragradient loop: prox point, linesearch on the segment,
//! normalized star-subgradient step, projection.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bifunction::{star_subgradient, Bifunction};
use crate::error::{Error, Result};
use crate::linesearch::{linesearch, LinesearchParams, DEFAULT_M_MAX};
use crate::prox::{solve_prox, ProxMethod, ProxProblem};
use crate::schedule::{RhoSchedule, SigmaSchedule};
use crate::space::{FeasibleSet, Point};

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub alpha: f64,
    pub theta: f64,
    pub rho: RhoSchedule,
    pub sigma: SigmaSchedule,
    /// Stop when `‖x^k − y^k‖ < tol_xy`.
    pub tol_xy: f64,
    /// Stop when `‖x^{k+1} − x^k‖ < tol_step`.
    pub tol_step: f64,
    pub max_iters: usize,
    pub prox: ProxMethod,
    pub m_max: u32,
    pub record_trace: bool,
    /// Seeds the random start of multistart prox solvers.
    pub seed: u64,
}

impl SolverConfig {
    /// Defaults for an `n`-dimensional problem: `α = 0.5`, `θ = 0.5`,
    /// `ρ = 1`, `σ_k = 1/(k+1)`, tolerances `1e-3`.
    pub fn for_dim(n: usize) -> Self {
        SolverConfig {
            alpha: 0.5,
            theta: 0.5,
            rho: RhoSchedule::Constant(1.0),
            sigma: SigmaSchedule::Harmonic(1.0),
            tol_xy: 1e-3,
            tol_step: 1e-3,
            max_iters: 10_000,
            prox: ProxMethod::default_for_dim(n),
            m_max: DEFAULT_M_MAX,
            record_trace: true,
            seed: 0,
        }
    }

    pub fn linesearch_params(&self) -> LinesearchParams {
        LinesearchParams {
            alpha: self.alpha,
            theta: self.theta,
            m_max: self.m_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.linesearch_params().validate()?;
        if !(self.tol_xy > 0.0 && self.tol_step > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be >= 1".into()));
        }
        self.prox.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// `y^k = x^k` exactly.
    FixedPoint,
    /// `x^{k+1} = x^k` exactly.
    StepFixed,
    TolXy,
    TolStep,
    MaxIters,
    LinesearchExhausted,
    ZeroSubgradient,
}

impl Status {
    pub fn is_breakdown(self) -> bool {
        matches!(self, Status::LinesearchExhausted | Status::ZeroSubgradient)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::FixedPoint => "fixed_point",
            Status::StepFixed => "step_fixed",
            Status::TolXy => "tol_xy",
            Status::TolStep => "tol_step",
            Status::MaxIters => "max_iters",
            Status::LinesearchExhausted => "linesearch_exhausted",
            Status::ZeroSubgradient => "zero_subgradient",
        }
    }

    /// What the reported point is known to be.
    pub fn note(self) -> &'static str {
        match self {
            Status::FixedPoint | Status::TolXy => {
                "prox point coincides with the iterate: a stationary point or a solution; \
                 a solution when f(x,.) is pseudoconvex or strongly quasiconvex"
            }
            Status::StepFixed => {
                "projected step did not move: the linesearch point z solves the problem \
                 when f(x,.) is semistrictly quasiconvex"
            }
            Status::TolStep => "projected step fell below tolerance",
            Status::MaxIters => "iteration cap reached",
            Status::LinesearchExhausted => "numerical breakdown: linesearch found no admissible m",
            Status::ZeroSubgradient => "numerical breakdown: star-subgradient vanished",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One pass of the outer loop starting from `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub x: Point,
    pub y: Point,
    /// Linesearch point; absent when the iteration stopped before it.
    pub z: Option<Point>,
    /// Accepted linesearch exponent, 0 when no linesearch ran.
    pub m: u32,
    pub g: Option<Point>,
    pub rho: f64,
    pub sigma: f64,
    /// Point handed to the next iteration (`x` itself if the iteration stopped early).
    pub x_next: Point,
    pub err_xy: f64,
    /// `‖x_next − x‖`; absent when no projected step was taken.
    pub err_step: Option<f64>,
    /// The prox solution failed its `≤ 0` certificate.
    pub prox_flag: bool,
}

impl IterationRecord {
    /// `min(‖x − y‖, ‖x − x_next‖)` over the quantities that were computed.
    pub fn error(&self) -> f64 {
        match self.err_step {
            Some(s) => self.err_xy.min(s),
            None => self.err_xy,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StepOutcome {
    Continue { x_next: Point, record: IterationRecord },
    Stop {
        status: Status,
        final_point: Point,
        record: IterationRecord,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub status: Status,
    pub final_point: Point,
    pub iterations: usize,
    pub trace: Vec<IterationRecord>,
    /// The final iteration's record, kept even when the trace is off.
    pub last: Option<IterationRecord>,
    /// `x0` was outside the set and got projected.
    pub start_projected: bool,
}

impl SolveResult {
    pub fn final_error(&self) -> f64 {
        self.last.as_ref().map_or(f64::NAN, IterationRecord::error)
    }
}

fn prox_seed(seed: u64, k: usize) -> u64 {
    seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Runs iteration `k` from `x_k`.
pub fn step(
    f: &dyn Bifunction,
    set: &FeasibleSet,
    x_k: &Point,
    k: usize,
    config: &SolverConfig,
) -> Result<StepOutcome> {
    let rho = config.rho.at(k)?;
    let sigma = config.sigma.at(k)?;
    let problem = ProxProblem::new(f, x_k, rho, set)?;
    let prox = solve_prox(&problem, &config.prox, prox_seed(config.seed, k))?;
    let y = prox.point;
    let err_xy = x_k.dist(&y);
    let mut record = IterationRecord {
        k,
        x: x_k.clone(),
        y: y.clone(),
        z: None,
        m: 0,
        g: None,
        rho,
        sigma,
        x_next: x_k.clone(),
        err_xy,
        err_step: None,
        prox_flag: !prox.certified,
    };
    let stop = |status, final_point, record| StepOutcome::Stop {
        status,
        final_point,
        record,
    };

    if y == *x_k {
        return Ok(stop(Status::FixedPoint, x_k.clone(), record));
    }
    if err_xy < config.tol_xy {
        return Ok(stop(Status::TolXy, x_k.clone(), record));
    }

    let ls = match linesearch(f, x_k, &y, rho, &config.linesearch_params()) {
        Ok(ls) => ls,
        Err(Error::LinesearchExhausted { .. }) => {
            return Ok(stop(Status::LinesearchExhausted, x_k.clone(), record));
        }
        Err(e) => return Err(e),
    };
    record.z = Some(ls.z.clone());
    record.m = ls.m;

    let g = match star_subgradient(f, &ls.z, x_k) {
        Ok(g) => g,
        Err(Error::ZeroSubgradient { .. }) => {
            return Ok(stop(Status::ZeroSubgradient, x_k.clone(), record));
        }
        Err(e) => return Err(e),
    };
    let x_next = set.project(&x_k.axpy(-sigma, &g))?;
    let err_step = x_next.dist(x_k);
    record.g = Some(g);
    record.x_next = x_next.clone();
    record.err_step = Some(err_step);

    if x_next == *x_k {
        return Ok(stop(Status::StepFixed, ls.z, record));
    }
    if err_step < config.tol_step {
        return Ok(stop(Status::TolStep, x_next, record));
    }
    Ok(StepOutcome::Continue { x_next, record })
}

/// Iterates [`step`] from `x0` until a stop or `max_iters`.
pub fn solve(
    f: &dyn Bifunction,
    set: &FeasibleSet,
    x0: &Point,
    config: &SolverConfig,
) -> Result<SolveResult> {
    config.validate()?;
    x0.check_dim(f.dim())?;
    if set.dim() != f.dim() {
        return Err(Error::dim_mismatch(f.dim(), set.dim()));
    }
    let start_projected = !set.contains(x0, 1e-9)?;
    let mut x = if start_projected {
        set.project(x0)?
    } else {
        x0.clone()
    };
    let mut trace = Vec::new();
    let mut last = None;
    for k in 0..config.max_iters {
        match step(f, set, &x, k, config)? {
            StepOutcome::Continue { x_next, record } => {
                if config.record_trace {
                    trace.push(record.clone());
                }
                last = Some(record);
                x = x_next;
            }
            StepOutcome::Stop {
                status,
                final_point,
                record,
            } => {
                if config.record_trace {
                    trace.push(record.clone());
                }
                return Ok(SolveResult {
                    status,
                    final_point,
                    iterations: k + 1,
                    trace,
                    last: Some(record),
                    start_projected,
                });
            }
        }
    }
    Ok(SolveResult {
        status: Status::MaxIters,
        final_point: x,
        iterations: config.max_iters,
        trace,
        last,
        start_projected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bifunction::{ClosureBifunction, RootQuadBifunction};

    fn p(v: f64) -> Point {
        Point::scalar(v).unwrap()
    }

    #[test]
    fn fixed_point_when_prox_returns_anchor() {
        // f(x, y) = (y - x)^2 has the anchor as its prox point
        let f = ClosureBifunction::new("sq", 1, |x, y| Ok((y[0] - x[0]).powi(2)));
        let set = FeasibleSet::cube(1, -1.0, 1.0).unwrap();
        let cfg = SolverConfig::for_dim(1);
        match step(&f, &set, &p(0.3), 0, &cfg).unwrap() {
            StepOutcome::Stop {
                status,
                final_point,
                record,
            } => {
                assert_eq!(status, Status::FixedPoint);
                assert_eq!(final_point, p(0.3));
                assert_eq!(record.err_step, None);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn step_fixed_reports_linesearch_point() {
        // f(x, y) = x - y: the prox point is x + rho (clamped to C)
        let outward = ClosureBifunction::new("lin", 1, |x, y| Ok(x[0] - y[0]))
            .with_star_direction(|_, _| Ok(Point::scalar(-1.0).unwrap()));
        let set = FeasibleSet::cube(1, 0.0, 1.0).unwrap();
        let mut cfg = SolverConfig::for_dim(1);
        cfg.rho = RhoSchedule::Constant(0.5);
        match step(&outward, &set, &p(0.5), 0, &cfg).unwrap() {
            StepOutcome::Continue { x_next, record } => {
                assert_eq!(record.y, p(1.0));
                assert_eq!(record.m, 1);
                assert_eq!(x_next, p(1.0));
            }
            other => panic!("unexpected {other:?}"),
        }

        // g = +1 at the left end: the projected step cannot move
        let blocked = ClosureBifunction::new("lin", 1, |x, y| Ok(x[0] - y[0]))
            .with_star_direction(|_, _| Ok(Point::scalar(1.0).unwrap()));
        match step(&blocked, &set, &p(0.0), 0, &cfg).unwrap() {
            StepOutcome::Stop {
                status,
                final_point,
                record,
            } => {
                assert_eq!(status, Status::StepFixed);
                assert_eq!(final_point, p(0.25));
                assert_eq!(Some(final_point), record.z);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_subgradient_is_terminal() {
        let f = ClosureBifunction::new("lin", 1, |x, y| Ok(x[0] - y[0]))
            .with_star_direction(|_, _| Ok(Point::scalar(0.0).unwrap()));
        let set = FeasibleSet::cube(1, 0.0, 1.0).unwrap();
        let res = solve(&f, &set, &p(0.2), &SolverConfig::for_dim(1)).unwrap();
        assert_eq!(res.status, Status::ZeroSubgradient);
        assert_eq!(res.final_point, p(0.2));
        assert!(res.status.is_breakdown());
    }

    #[test]
    fn infeasible_start_is_projected() {
        let f = RootQuadBifunction::new(2.0).unwrap();
        let set = FeasibleSet::cube(1, 0.0, 10.0).unwrap();
        let res = solve(&f, &set, &p(12.0), &SolverConfig::for_dim(1)).unwrap();
        assert!(res.start_projected);
        assert_eq!(res.trace[0].x, p(10.0));
    }

    #[test]
    fn max_iters_respected() {
        let f = RootQuadBifunction::new(2.0).unwrap();
        let set = FeasibleSet::cube(1, 0.0, 10.0).unwrap();
        let mut cfg = SolverConfig::for_dim(1);
        cfg.max_iters = 5;
        let res = solve(&f, &set, &p(5.0), &cfg).unwrap();
        assert_eq!(res.status, Status::MaxIters);
        assert_eq!(res.iterations, 5);
        assert_eq!(res.trace.len(), 5);
        assert_eq!(res.final_point, res.trace[4].x_next);
    }

    #[test]
    fn trace_can_be_disabled() {
        let f = RootQuadBifunction::new(2.0).unwrap();
        let set = FeasibleSet::cube(1, 0.0, 10.0).unwrap();
        let mut cfg = SolverConfig::for_dim(1);
        cfg.record_trace = false;
        cfg.sigma = SigmaSchedule::Harmonic(2.0);
        let res = solve(&f, &set, &p(5.0), &cfg).unwrap();
        assert!(res.trace.is_empty());
        assert!(res.last.is_some());
    }

    #[test]
    fn invalid_config_rejected() {
        let f = RootQuadBifunction::new(2.0).unwrap();
        let set = FeasibleSet::cube(1, 0.0, 10.0).unwrap();
        let mut cfg = SolverConfig::for_dim(1);
        cfg.theta = 1.0;
        assert!(solve(&f, &set, &p(5.0), &cfg).is_err());
        let mut cfg = SolverConfig::for_dim(1);
        cfg.tol_xy = 0.0;
        assert!(solve(&f, &set, &p(5.0), &cfg).is_err());
    }
}
