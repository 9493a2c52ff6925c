//! Dense points, closed convex feasible sets and their Euclidean projections.
//!
//! Box and ball projections are closed-form. A [`FeasibleSet::Generic`] set
//! delegates to a user-supplied projector and carries a bounding box so the
//! brute-force oracles can enumerate it.

use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of lattice points produced by [`FeasibleSet::grid`].
pub const DEFAULT_GRID_CAP: u128 = 10_000_000;

/// A dense real vector with finite coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidArgument("point must have dimension >= 1".into()));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "coordinate {i} is not finite ({})",
                coords[i]
            )));
        }
        Ok(Point(coords))
    }

    /// Builds a point from arithmetic on already-valid points.
    pub(crate) fn from_vec(coords: Vec<f64>) -> Self {
        debug_assert!(!coords.is_empty());
        Point(coords)
    }

    pub fn scalar(v: f64) -> Result<Self> {
        Point::new(vec![v])
    }

    pub fn zeros(n: usize) -> Self {
        Point(vec![0.0; n.max(1)])
    }

    pub fn filled(n: usize, v: f64) -> Self {
        Point(vec![v; n.max(1)])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        if self.dim() == n {
            Ok(())
        } else {
            Err(Error::dim_mismatch(n, self.dim()))
        }
    }

    pub fn dot(&self, other: &Point) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.dist_sq(other).sqrt()
    }

    pub fn dist_sq(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn sub(&self, other: &Point) -> Point {
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &Point) -> Point {
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, s: f64) -> Point {
        Point(self.0.iter().map(|a| a * s).collect())
    }

    /// `self + s * dir`
    pub fn axpy(&self, s: f64, dir: &Point) -> Point {
        Point(self.0.iter().zip(&dir.0).map(|(a, d)| a + s * d).collect())
    }

    /// `(1 - t) * self + t * other`
    pub fn lerp(&self, other: &Point, t: f64) -> Point {
        Point(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| (1.0 - t) * a + t * b)
                .collect(),
        )
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Point::new(v)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.0
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

pub type Projector = Arc<dyn Fn(&Point) -> Point + Send + Sync>;

/// A convex set known only through its projection.
#[derive(Clone)]
pub struct GenericSet {
    project: Projector,
    lo: Point,
    hi: Point,
    witness: Point,
}

impl fmt::Debug for GenericSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GenericSet")
            .field("lo", &self.lo)
            .field("hi", &self.hi)
            .field("witness", &self.witness)
            .finish_non_exhaustive()
    }
}

/// A nonempty closed convex set.
#[derive(Clone, Debug)]
pub enum FeasibleSet {
    Box { lo: Point, hi: Point },
    Ball { center: Point, radius: f64 },
    Generic(GenericSet),
}

impl FeasibleSet {
    pub fn boxed(lo: Point, hi: Point) -> Result<Self> {
        lo.check_dim(hi.dim())?;
        if let Some(i) = (0..lo.dim()).find(|&i| lo[i] > hi[i]) {
            return Err(Error::InvalidArgument(format!(
                "box bound {i}: lo {} > hi {}",
                lo[i], hi[i]
            )));
        }
        Ok(FeasibleSet::Box { lo, hi })
    }

    /// The cube `[lo, hi]^n`.
    pub fn cube(n: usize, lo: f64, hi: f64) -> Result<Self> {
        FeasibleSet::boxed(Point::new(vec![lo; n])?, Point::new(vec![hi; n])?)
    }

    pub fn ball(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "ball radius must be positive and finite, got {radius}"
            )));
        }
        Ok(FeasibleSet::Ball { center, radius })
    }

    /// A set given by its projection oracle. `lo`/`hi` must bound the set;
    /// `witness` must be a feasible point (a fixed point of the projector).
    pub fn generic(project: Projector, lo: Point, hi: Point, witness: Point) -> Result<Self> {
        lo.check_dim(hi.dim())?;
        witness.check_dim(lo.dim())?;
        if (0..lo.dim()).any(|i| lo[i] > hi[i]) {
            return Err(Error::InvalidArgument("bounding box has lo > hi".into()));
        }
        let back = project(&witness);
        back.check_dim(witness.dim())?;
        if back.dist(&witness) > 1e-9 {
            return Err(Error::InvalidArgument(
                "witness is not a fixed point of the projector".into(),
            ));
        }
        Ok(FeasibleSet::Generic(GenericSet {
            project,
            lo,
            hi,
            witness,
        }))
    }

    pub fn dim(&self) -> usize {
        match self {
            FeasibleSet::Box { lo, .. } => lo.dim(),
            FeasibleSet::Ball { center, .. } => center.dim(),
            FeasibleSet::Generic(g) => g.lo.dim(),
        }
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, p: &Point) -> Result<Point> {
        p.check_dim(self.dim())?;
        Ok(match self {
            FeasibleSet::Box { lo, hi } => Point::from_vec(
                p.iter()
                    .zip(lo.iter().zip(hi.iter()))
                    .map(|(&v, (&l, &h))| v.clamp(l, h))
                    .collect(),
            ),
            FeasibleSet::Ball { center, radius } => {
                let d = p.sub(center);
                let r = d.norm();
                if r <= *radius {
                    p.clone()
                } else {
                    center.axpy(radius / r, &d)
                }
            }
            FeasibleSet::Generic(g) => {
                let q = (g.project)(p);
                q.check_dim(p.dim())?;
                q
            }
        })
    }

    /// Whether `p` lies within distance `tol` of the set.
    pub fn contains(&self, p: &Point, tol: f64) -> Result<bool> {
        let q = self.project(p)?;
        Ok(p.dist(&q) <= tol)
    }

    /// Axis-aligned box enclosing the set.
    pub fn bounding_box(&self) -> (Point, Point) {
        match self {
            FeasibleSet::Box { lo, hi } => (lo.clone(), hi.clone()),
            FeasibleSet::Ball { center, radius } => (
                Point::from_vec(center.iter().map(|c| c - radius).collect()),
                Point::from_vec(center.iter().map(|c| c + radius).collect()),
            ),
            FeasibleSet::Generic(g) => (g.lo.clone(), g.hi.clone()),
        }
    }

    /// A point known to be feasible.
    pub fn witness(&self) -> Point {
        match self {
            FeasibleSet::Box { lo, hi } => lo.lerp(hi, 0.5),
            FeasibleSet::Ball { center, .. } => center.clone(),
            FeasibleSet::Generic(g) => g.witness.clone(),
        }
    }

    pub fn lattice(&self, resolution: f64) -> Result<Lattice> {
        self.lattice_with_cap(resolution, DEFAULT_GRID_CAP)
    }

    pub fn lattice_with_cap(&self, resolution: f64, cap: u128) -> Result<Lattice> {
        let (lo, hi) = self.bounding_box();
        Lattice::new(&lo, &hi, resolution, cap)
    }

    /// All feasible points of the bounding-box lattice with spacing at most
    /// `resolution`, in lexicographic order.
    pub fn grid(&self, resolution: f64) -> Result<Vec<Point>> {
        self.grid_with_cap(resolution, DEFAULT_GRID_CAP)
    }

    pub fn grid_with_cap(&self, resolution: f64, cap: u128) -> Result<Vec<Point>> {
        let lattice = self.lattice_with_cap(resolution, cap)?;
        let mut out = Vec::new();
        for i in 0..lattice.len() {
            let p = lattice.point(i);
            if self.contains(&p, 0.0)? {
                out.push(p);
            }
        }
        Ok(out)
    }
}

/// Uniform axis-aligned lattice over a box, indexed lexicographically
/// (first coordinate slowest).
#[derive(Clone, Debug)]
pub struct Lattice {
    axes: Vec<Vec<f64>>,
    len: usize,
}

impl Lattice {
    pub fn new(lo: &Point, hi: &Point, resolution: f64, cap: u128) -> Result<Self> {
        lo.check_dim(hi.dim())?;
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "grid resolution must be positive, got {resolution}"
            )));
        }
        let mut counts = Vec::with_capacity(lo.dim());
        let mut total: u128 = 1;
        for i in 0..lo.dim() {
            let span = hi[i] - lo[i];
            // Slack absorbs ratios like 1/0.1 landing a hair above an integer.
            let segments = ((span / resolution) * (1.0 - 1e-12)).ceil().max(0.0);
            if !segments.is_finite() || segments > 1e15 {
                return Err(Error::GridTooLarge {
                    points: u128::MAX,
                    cap,
                });
            }
            let count = segments as u128 + 1;
            total = total.saturating_mul(count);
            counts.push(count as usize);
        }
        if total > cap {
            return Err(Error::GridTooLarge { points: total, cap });
        }
        let axes = counts
            .iter()
            .enumerate()
            .map(|(i, &count)| {
                if count == 1 {
                    return vec![lo[i]];
                }
                let step = (hi[i] - lo[i]) / (count - 1) as f64;
                let mut axis: Vec<f64> = (0..count).map(|j| lo[i] + j as f64 * step).collect();
                axis[count - 1] = hi[i];
                axis
            })
            .collect();
        Ok(Lattice {
            axes,
            len: total as usize,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn axis(&self, i: usize) -> &[f64] {
        &self.axes[i]
    }

    pub fn point(&self, mut index: usize) -> Point {
        let mut coords = vec![0.0; self.axes.len()];
        for (i, axis) in self.axes.iter().enumerate().rev() {
            coords[i] = axis[index % axis.len()];
            index /= axis.len();
        }
        Point::from_vec(coords)
    }
}
