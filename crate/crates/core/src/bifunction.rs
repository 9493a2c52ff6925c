//! Bifunction oracles `f(x, y)` with second-argument gradients and
//! star-subgradient selection.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::Point;

/// Below this norm a star-subgradient is treated as zero.
pub const ZERO_SUBGRADIENT_THRESHOLD: f64 = 1e-12;

/// Value and gradient (in `y`) of one smooth branch of `f(x, ·)` at `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    pub value: f64,
    pub grad: Point,
}

/// An equilibrium bifunction `f: C × C → ℝ` with `f(x, x) = 0`.
///
/// Only [`eval`](Bifunction::eval) is mandatory. Gradients fall back to
/// central finite differences and the star-subgradient direction falls back
/// to the gradient of `f(z, ·)` at `x`.
pub trait Bifunction: Send + Sync {
    fn dim(&self) -> usize;

    fn name(&self) -> &str;

    fn eval(&self, x: &Point, y: &Point) -> Result<f64>;

    /// Gradient of `f(x, ·)` at `y`.
    fn grad2(&self, x: &Point, y: &Point) -> Result<Point> {
        central_difference_grad2(self, x, y)
    }

    /// Unnormalized element of the star-subdifferential of `f(z, ·)` at `x`.
    fn star_direction(&self, z: &Point, x: &Point) -> Result<Point> {
        self.grad2(z, x)
    }

    /// Smooth branches whose pointwise maximum is `f(x, ·)` near `y`.
    /// A smooth bifunction is a single branch.
    fn pieces(&self, x: &Point, y: &Point) -> Result<Vec<Piece>> {
        Ok(vec![Piece {
            value: self.eval(x, y)?,
            grad: self.grad2(x, y)?,
        }])
    }
}

fn check_args<F: Bifunction + ?Sized>(f: &F, x: &Point, y: &Point) -> Result<()> {
    x.check_dim(f.dim())?;
    y.check_dim(f.dim())
}

/// Central differences in `y` with step `h = 1e-6 (1 + ‖y‖)`. A side that
/// leaves the evaluable domain degrades that coordinate to a one-sided
/// difference.
pub fn central_difference_grad2<F: Bifunction + ?Sized>(
    f: &F,
    x: &Point,
    y: &Point,
) -> Result<Point> {
    check_args(f, x, y)?;
    let h = 1e-6 * (1.0 + y.norm());
    let mut grad = Vec::with_capacity(y.dim());
    let mut probe = y.as_slice().to_vec();
    for j in 0..y.dim() {
        probe[j] = y[j] + h;
        let plus = f.eval(x, &Point::from_vec(probe.clone()));
        probe[j] = y[j] - h;
        let minus = f.eval(x, &Point::from_vec(probe.clone()));
        probe[j] = y[j];
        let g = match (plus, minus) {
            (Ok(p), Ok(m)) => (p - m) / (2.0 * h),
            (Ok(p), Err(_)) => (p - f.eval(x, y)?) / h,
            (Err(_), Ok(m)) => (f.eval(x, y)? - m) / h,
            (Err(e), Err(_)) => return Err(e),
        };
        grad.push(g);
    }
    Point::new(grad).map_err(|_| Error::Domain("non-finite finite-difference gradient".into()))
}

/// Unit-norm star-subgradient of `f(z, ·)` at `x`.
pub fn star_subgradient<F: Bifunction + ?Sized>(f: &F, z: &Point, x: &Point) -> Result<Point> {
    star_subgradient_with_threshold(f, z, x, ZERO_SUBGRADIENT_THRESHOLD)
}

pub fn star_subgradient_with_threshold<F: Bifunction + ?Sized>(
    f: &F,
    z: &Point,
    x: &Point,
    threshold: f64,
) -> Result<Point> {
    check_args(f, z, x)?;
    let g = f.star_direction(z, x)?;
    g.check_dim(f.dim())?;
    let norm = g.norm();
    if !norm.is_finite() {
        return Err(Error::Domain("star-subgradient is not finite".into()));
    }
    if norm <= threshold {
        return Err(Error::ZeroSubgradient { norm });
    }
    Ok(Point::from_vec(g.iter().map(|c| c / norm).collect()))
}

type EvalFn = dyn Fn(&Point, &Point) -> Result<f64> + Send + Sync;
type VecFn = dyn Fn(&Point, &Point) -> Result<Point> + Send + Sync;

/// A bifunction assembled from closures.
#[derive(Clone)]
pub struct ClosureBifunction {
    name: String,
    dim: usize,
    eval: Arc<EvalFn>,
    grad2: Option<Arc<VecFn>>,
    star: Option<Arc<VecFn>>,
}

impl fmt::Debug for ClosureBifunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClosureBifunction")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("grad2", &self.grad2.is_some())
            .field("star", &self.star.is_some())
            .finish()
    }
}

impl ClosureBifunction {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        eval: impl Fn(&Point, &Point) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        ClosureBifunction {
            name: name.into(),
            dim,
            eval: Arc::new(eval),
            grad2: None,
            star: None,
        }
    }

    pub fn with_grad2(
        mut self,
        grad2: impl Fn(&Point, &Point) -> Result<Point> + Send + Sync + 'static,
    ) -> Self {
        self.grad2 = Some(Arc::new(grad2));
        self
    }

    pub fn with_star_direction(
        mut self,
        star: impl Fn(&Point, &Point) -> Result<Point> + Send + Sync + 'static,
    ) -> Self {
        self.star = Some(Arc::new(star));
        self
    }
}

impl Bifunction for ClosureBifunction {
    fn dim(&self) -> usize {
        self.dim
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn eval(&self, x: &Point, y: &Point) -> Result<f64> {
        check_args(self, x, y)?;
        let v = (self.eval)(x, y)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!("{} evaluated to {v}", self.name)))
        }
    }

    fn grad2(&self, x: &Point, y: &Point) -> Result<Point> {
        match &self.grad2 {
            Some(g) => {
                check_args(self, x, y)?;
                g(x, y)
            }
            None => central_difference_grad2(self, x, y),
        }
    }

    fn star_direction(&self, z: &Point, x: &Point) -> Result<Point> {
        match &self.star {
            Some(s) => {
                check_args(self, z, x)?;
                s(z, x)
            }
            None => self.grad2(z, x),
        }
    }
}

fn sqrt_nonneg(v: f64) -> Result<f64> {
    if v < -1e-12 {
        Err(Error::Domain(format!("square root of negative value {v}")))
    } else {
        Ok(v.max(0.0).sqrt())
    }
}

/// `f(x, y) = √y − √x + r·x·(y − x)` on a subset of `[0, ∞)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RootQuadBifunction {
    r: f64,
}

impl RootQuadBifunction {
    pub fn new(r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!("r must be positive, got {r}")));
        }
        Ok(RootQuadBifunction { r })
    }

    pub fn r(&self) -> f64 {
        self.r
    }
}

impl Bifunction for RootQuadBifunction {
    fn dim(&self) -> usize {
        1
    }

    fn name(&self) -> &str {
        "root-quad"
    }

    fn eval(&self, x: &Point, y: &Point) -> Result<f64> {
        check_args(self, x, y)?;
        let (x, y) = (x[0], y[0]);
        Ok(sqrt_nonneg(y)? - sqrt_nonneg(x)? + self.r * x * (y - x))
    }

    fn grad2(&self, x: &Point, y: &Point) -> Result<Point> {
        check_args(self, x, y)?;
        sqrt_nonneg(x[0])?;
        if y[0] <= 0.0 {
            return Err(Error::Domain(format!(
                "d/dy sqrt(y) is unbounded at y = {}",
                y[0]
            )));
        }
        Ok(Point::from_vec(vec![0.5 / y[0].sqrt() + self.r * x[0]]))
    }
}

/// `f(x, y) = y³ − x³`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CubicBifunction;

impl Bifunction for CubicBifunction {
    fn dim(&self) -> usize {
        1
    }

    fn name(&self) -> &str {
        "cubic"
    }

    fn eval(&self, x: &Point, y: &Point) -> Result<f64> {
        check_args(self, x, y)?;
        Ok(y[0].powi(3) - x[0].powi(3))
    }

    fn grad2(&self, x: &Point, y: &Point) -> Result<Point> {
        check_args(self, x, y)?;
        Ok(Point::from_vec(vec![3.0 * y[0] * y[0]]))
    }
}

/// Dense row-major matrix. Serializes as a list of rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if r == 0 || c == 0 {
            return Err(Error::InvalidArgument("matrix must be nonempty".into()));
        }
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidArgument("ragged matrix rows".into()));
        }
        let data: Vec<f64> = rows.into_iter().flatten().collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("matrix entries must be finite".into()));
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data,
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Matrix {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (i, vi) in v.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        out
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Matrix::from_rows(rows)
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        (0..m.rows).map(|i| m.row(i).to_vec()).collect()
    }
}

/// One linear-fractional branch
/// `⟨A x + b, (E y + f)/(cᵀy + d) − (E x + f)/(cᵀx + d)⟩`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FractionalBranch {
    pub a: Matrix,
    pub b: Vec<f64>,
    pub e: Matrix,
    pub f: Vec<f64>,
    pub c: Vec<f64>,
    pub d: f64,
}

impl FractionalBranch {
    fn validate(&self) -> Result<(usize, usize)> {
        let (m, n) = (self.e.rows(), self.e.cols());
        let ok = self.a.rows() == m
            && self.a.cols() == n
            && self.b.len() == m
            && self.f.len() == m
            && self.c.len() == n
            && self.d.is_finite()
            && self.b.iter().chain(&self.f).chain(&self.c).all(|v| v.is_finite());
        if ok {
            Ok((m, n))
        } else {
            Err(Error::InvalidArgument(format!(
                "fractional branch shapes inconsistent with E ({m}x{n})"
            )))
        }
    }

    fn denominator(&self, y: &[f64]) -> Result<f64> {
        let den = self.c.iter().zip(y).map(|(c, v)| c * v).sum::<f64>() + self.d;
        if den > 0.0 {
            Ok(den)
        } else {
            Err(Error::Domain(format!("nonpositive denominator {den}")))
        }
    }

    /// `(E y + f) / (cᵀy + d)` and the denominator.
    fn ratio(&self, y: &[f64]) -> Result<(Vec<f64>, f64)> {
        let den = self.denominator(y)?;
        let num = self.e.mul_vec(y);
        Ok((
            num.iter().zip(&self.f).map(|(v, f)| (v + f) / den).collect(),
            den,
        ))
    }

    fn weight(&self, x: &[f64]) -> Vec<f64> {
        self.a
            .mul_vec(x)
            .iter()
            .zip(&self.b)
            .map(|(v, b)| v + b)
            .collect()
    }

    fn value(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let w = self.weight(x);
        let (ry, _) = self.ratio(y)?;
        let (rx, _) = self.ratio(x)?;
        Ok(w.iter()
            .zip(ry.iter().zip(&rx))
            .map(|(w, (a, b))| w * (a - b))
            .sum())
    }

    fn value_and_grad(&self, x: &[f64], y: &[f64]) -> Result<(f64, Vec<f64>)> {
        let w = self.weight(x);
        let (ry, den) = self.ratio(y)?;
        let (rx, _) = self.ratio(x)?;
        let value = w
            .iter()
            .zip(ry.iter().zip(&rx))
            .map(|(w, (a, b))| w * (a - b))
            .sum();
        // ∇_y ⟨w, (Ey+f)/den⟩ = Eᵀw/den − ⟨w, (Ey+f)/den⟩ c/den
        let wr: f64 = w.iter().zip(&ry).map(|(a, b)| a * b).sum();
        let grad = self
            .e
            .tr_mul_vec(&w)
            .iter()
            .zip(&self.c)
            .map(|(g, c)| (g - wr * c) / den)
            .collect();
        Ok((value, grad))
    }

    /// Minimum of `cᵀx + d` over the box `[lo, hi]`, attained at a corner.
    fn min_denominator_on_box(&self, lo: &[f64], hi: &[f64]) -> f64 {
        self.c
            .iter()
            .zip(lo.iter().zip(hi))
            .map(|(c, (l, h))| (c * l).min(c * h))
            .sum::<f64>()
            + self.d
    }
}

/// `f(x, y) = max_i f_i(x, y)` over linear-fractional branches.
#[derive(Clone, Debug, PartialEq)]
pub struct FractionalMaxBifunction {
    branches: Vec<FractionalBranch>,
    dim: usize,
    name: String,
}

impl FractionalMaxBifunction {
    pub fn new(branches: Vec<FractionalBranch>) -> Result<Self> {
        let first = branches
            .first()
            .ok_or_else(|| Error::InvalidArgument("at least one branch required".into()))?;
        let (_, n) = first.validate()?;
        for br in &branches {
            let (_, nb) = br.validate()?;
            if nb != n {
                return Err(Error::dim_mismatch(n, nb));
            }
        }
        Ok(FractionalMaxBifunction {
            branches,
            dim: n,
            name: "fractional-max".into(),
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn branches(&self) -> &[FractionalBranch] {
        &self.branches
    }

    /// Checks every denominator is positive on the box `[lo, hi]`.
    pub fn validate_on_box(&self, lo: &Point, hi: &Point) -> Result<()> {
        lo.check_dim(self.dim)?;
        hi.check_dim(self.dim)?;
        for (i, br) in self.branches.iter().enumerate() {
            let m = br.min_denominator_on_box(lo, hi);
            if m <= 0.0 {
                return Err(Error::Domain(format!(
                    "branch {} denominator reaches {m} on the box",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    pub fn min_denominator_on_box(&self, lo: &Point, hi: &Point) -> f64 {
        self.branches
            .iter()
            .map(|br| br.min_denominator_on_box(lo, hi))
            .fold(f64::INFINITY, f64::min)
    }
}

impl Bifunction for FractionalMaxBifunction {
    fn dim(&self) -> usize {
        self.dim
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn eval(&self, x: &Point, y: &Point) -> Result<f64> {
        check_args(self, x, y)?;
        let mut best = f64::NEG_INFINITY;
        for br in &self.branches {
            best = best.max(br.value(x, y)?);
        }
        Ok(best)
    }

    /// Gradient of the active branch; ties go to the lowest index.
    fn grad2(&self, x: &Point, y: &Point) -> Result<Point> {
        check_args(self, x, y)?;
        let mut best: Option<(f64, Vec<f64>)> = None;
        for br in &self.branches {
            let (v, g) = br.value_and_grad(x, y)?;
            if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
                best = Some((v, g));
            }
        }
        let (_, g) = best.expect("at least one branch");
        Ok(Point::from_vec(g))
    }

    fn pieces(&self, x: &Point, y: &Point) -> Result<Vec<Piece>> {
        check_args(self, x, y)?;
        self.branches
            .iter()
            .map(|br| {
                let (value, g) = br.value_and_grad(x, y)?;
                Ok(Piece {
                    value,
                    grad: Point::from_vec(g),
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: f64) -> Point {
        Point::scalar(v).unwrap()
    }

    fn small_fractional() -> FractionalMaxBifunction {
        let one = vec![1.0, 1.0];
        FractionalMaxBifunction::new(vec![
            FractionalBranch {
                a: Matrix::identity(2),
                b: vec![0.0; 2],
                e: Matrix::identity(2),
                f: one.clone(),
                c: vec![0.0; 2],
                d: 1.0,
            },
            FractionalBranch {
                a: Matrix::identity(2),
                b: vec![0.0; 2],
                e: Matrix::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap(),
                f: one.clone(),
                c: one,
                d: 2.0,
            },
        ])
        .unwrap()
    }

    #[test]
    fn root_quad_values() {
        let f = RootQuadBifunction::new(2.0).unwrap();
        // 1 - 2 + 2*4*(1-4)
        assert_eq!(f.eval(&p(4.0), &p(1.0)).unwrap(), -25.0);
        assert_eq!(f.eval(&p(3.7), &p(3.7)).unwrap(), 0.0);
        assert_eq!(f.grad2(&p(4.0), &p(1.0)).unwrap()[0], 8.5);
        assert!(RootQuadBifunction::new(0.0).is_err());
    }

    #[test]
    fn root_quad_rejects_negative_domain() {
        let f = RootQuadBifunction::new(2.0).unwrap();
        assert!(matches!(f.eval(&p(1.0), &p(-0.1)), Err(Error::Domain(_))));
        // rounding-level negatives are read as zero
        assert!(f.eval(&p(1.0), &p(-1e-14)).is_ok());
        assert!(matches!(f.grad2(&p(1.0), &p(0.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn cubic_values() {
        let f = CubicBifunction;
        assert_eq!(f.eval(&p(0.0), &p(-1.0)).unwrap(), -1.0);
        assert_eq!(f.eval(&p(-1.0), &p(-1.0)).unwrap(), 0.0);
        assert_eq!(f.grad2(&p(0.7), &p(0.0)).unwrap()[0], 0.0);
    }

    #[test]
    fn star_subgradient_normalizes() {
        let f = RootQuadBifunction::new(2.0).unwrap();
        assert_eq!(star_subgradient(&f, &p(2.0), &p(4.0)).unwrap()[0], 1.0);

        let stub = ClosureBifunction::new("stub", 2, |_, _| Ok(0.0))
            .with_star_direction(|_, _| Ok(Point::new(vec![3.0, 4.0]).unwrap()));
        let x = Point::zeros(2);
        let g = star_subgradient(&stub, &x, &x).unwrap();
        assert!((g.norm() - 1.0).abs() < 1e-15);
        assert!((g[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn cubic_zero_subgradient_at_origin() {
        assert!(matches!(
            star_subgradient(&CubicBifunction, &p(-0.3), &p(0.0)),
            Err(Error::ZeroSubgradient { .. })
        ));
    }

    #[test]
    fn finite_difference_fallback_matches_closed_form() {
        let rq = RootQuadBifunction::new(2.0).unwrap();
        let inner = rq.clone();
        let fd_only = ClosureBifunction::new("rq-fd", 1, move |x, y| inner.eval(x, y));
        let exact = rq.grad2(&p(5.0), &p(2.0)).unwrap()[0];
        let approx = fd_only.grad2(&p(5.0), &p(2.0)).unwrap()[0];
        assert!((exact - approx).abs() <= 1e-6 * exact.abs());
    }

    #[test]
    fn finite_difference_goes_one_sided_at_domain_edge() {
        let rq = RootQuadBifunction::new(1.0).unwrap();
        let fd_only = ClosureBifunction::new("rq-fd", 1, move |x, y| {
            if y[0] < 0.5 {
                return Err(Error::Domain("below 0.5".into()));
            }
            rq.eval(x, y)
        });
        let g = fd_only.grad2(&p(1.0), &p(0.5)).unwrap()[0];
        let exact = 0.5 / 0.5f64.sqrt() + 1.0;
        assert!((g - exact).abs() < 1e-5);
    }

    #[test]
    fn fractional_small_instance() {
        let f = small_fractional();
        let x0 = Point::new(vec![5.0, 5.0]).unwrap();
        assert_eq!(f.eval(&x0, &x0).unwrap(), 0.0);
        let lo = Point::zeros(2);
        assert_eq!(f.min_denominator_on_box(&lo, &x0), 1.0);
        assert!(f.validate_on_box(&lo, &x0).is_ok());
        let bad_lo = Point::new(vec![-5.0, -5.0]).unwrap();
        assert!(f.validate_on_box(&bad_lo, &x0).is_err());
    }

    #[test]
    fn fractional_tie_break_takes_lower_branch() {
        // Identical branches tie everywhere.
        let br = small_fractional().branches()[1].clone();
        let twin = FractionalMaxBifunction::new(vec![br.clone(), br]).unwrap();
        let x = Point::new(vec![1.0, 2.0]).unwrap();
        let y = Point::new(vec![0.5, 0.25]).unwrap();
        let pieces = twin.pieces(&x, &y).unwrap();
        assert_eq!(twin.grad2(&x, &y).unwrap(), pieces[0].grad);
    }

    #[test]
    fn matrix_serializes_as_rows() {
        let m = Matrix::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, "[[1.0,2.0],[3.0,4.0]]");
        assert!(serde_json::from_str::<Matrix>("[[1.0],[2.0,3.0]]").is_err());
        assert_eq!(m.tr_mul_vec(&[1.0, 1.0]), vec![4.0, 6.0]);
    }

    #[test]
    fn dimension_checked() {
        let f = small_fractional();
        assert!(matches!(
            f.eval(&p(1.0), &p(1.0)),
            Err(Error::InvalidArgument(_))
        ));
    }
}
