//! Armijo-type backtracking along the segment from the iterate `x` towards
//! the prox point `y`.

use serde::{Deserialize, Serialize};

use crate::bifunction::Bifunction;
use crate::error::{Error, Result};
use crate::space::Point;

pub const DEFAULT_M_MAX: u32 = 60;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinesearchParams {
    pub alpha: f64,
    pub theta: f64,
    pub m_max: u32,
}

impl LinesearchParams {
    pub fn new(alpha: f64, theta: f64, m_max: u32) -> Result<Self> {
        let p = LinesearchParams {
            alpha,
            theta,
            m_max,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "theta must lie in (0, 1), got {}",
                self.theta
            )));
        }
        if self.m_max == 0 {
            return Err(Error::InvalidArgument("m_max must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinesearchStep {
    pub z: Point,
    pub m: u32,
    /// `f(z, x) − f(z, y)` at the accepted `z`.
    pub decrease: f64,
    /// `α ‖y − x‖² / (2ρ)`.
    pub required: f64,
}

/// `z = (1 − θ^m) x + θ^m y`
pub fn trial_point(x: &Point, y: &Point, theta: f64, m: u32) -> Point {
    x.lerp(y, theta.powi(m as i32))
}

/// `f(z, x) − f(z, y) − α ‖y − x‖² / (2ρ)`; the step is acceptable iff
/// this is nonnegative.
pub fn armijo_slack(
    f: &dyn Bifunction,
    x: &Point,
    y: &Point,
    z: &Point,
    rho: f64,
    alpha: f64,
) -> Result<f64> {
    let required = alpha / (2.0 * rho) * x.dist_sq(y);
    Ok(f.eval(z, x)? - f.eval(z, y)? - required)
}

/// Smallest `m ∈ [1, m_max]` whose trial point satisfies the inequality.
pub fn linesearch(
    f: &dyn Bifunction,
    x: &Point,
    y: &Point,
    rho: f64,
    params: &LinesearchParams,
) -> Result<LinesearchStep> {
    params.validate()?;
    x.check_dim(f.dim())?;
    y.check_dim(f.dim())?;
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidArgument(format!("rho must be positive, got {rho}")));
    }
    if x == y {
        return Err(Error::InvalidArgument("linesearch needs x != y".into()));
    }
    let required = params.alpha / (2.0 * rho) * x.dist_sq(y);
    for m in 1..=params.m_max {
        let z = trial_point(x, y, params.theta, m);
        let decrease = f.eval(&z, x)? - f.eval(&z, y)?;
        if decrease >= required {
            return Ok(LinesearchStep {
                z,
                m,
                decrease,
                required,
            });
        }
    }
    Err(Error::LinesearchExhausted {
        m_max: params.m_max,
    })
}
