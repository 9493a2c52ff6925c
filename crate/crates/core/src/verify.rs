//! Brute-force oracles over lattice points of the feasible set, and sampled
//! probes. Everything here is evidence at grid or sample resolution, not proof.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bifunction::Bifunction;
use crate::error::{Error, Result};
use crate::solver::IterationRecord;
use crate::space::{FeasibleSet, Point};

/// Grid oracles refuse sets of higher dimension than this.
pub const MAX_ORACLE_DIM: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub value: f64,
    /// Lattice point attaining `value`; the lexicographically smallest on ties.
    pub witness: Point,
    pub resolution: f64,
    pub points_scanned: usize,
}

#[derive(Clone, Copy)]
enum Extremum {
    Min,
    Max,
}

fn better(kind: Extremum, a: (f64, usize), b: (f64, usize)) -> (f64, usize) {
    let a_wins = match kind {
        Extremum::Min => a.0 < b.0 || (a.0 == b.0 && a.1 < b.1),
        Extremum::Max => a.0 > b.0 || (a.0 == b.0 && a.1 < b.1),
    };
    if a_wins {
        a
    } else {
        b
    }
}

type Scan = Result<(Option<(f64, usize)>, usize)>;

fn scan(
    set: &FeasibleSet,
    resolution: f64,
    kind: Extremum,
    value: impl Fn(&Point) -> Result<f64> + Sync,
) -> Result<ResidualReport> {
    if set.dim() > MAX_ORACLE_DIM {
        return Err(Error::OracleUnavailable(format!(
            "grid oracles support n <= {MAX_ORACLE_DIM}, got n = {}",
            set.dim()
        )));
    }
    let lattice = set.lattice(resolution)?;
    let combine = |a: Scan, b: Scan| -> Scan {
        let (a, na) = a?;
        let (b, nb) = b?;
        let best = match (a, b) {
            (Some(a), Some(b)) => Some(better(kind, a, b)),
            (a, None) => a,
            (None, b) => b,
        };
        Ok((best, na + nb))
    };
    let (best, scanned) = (0..lattice.len())
        .into_par_iter()
        .map(|i| -> Scan {
            let p = lattice.point(i);
            if !set.contains(&p, 0.0)? {
                return Ok((None, 0));
            }
            Ok((Some((value(&p)?, i)), 1))
        })
        .reduce(|| Ok((None, 0)), combine)?;
    let (value, idx) = best.ok_or_else(|| {
        Error::InvalidArgument("no lattice point fell inside the set; refine the resolution".into())
    })?;
    Ok(ResidualReport {
        value,
        witness: lattice.point(idx),
        resolution,
        points_scanned: scanned,
    })
}

/// `min_y f(x, y)` over the lattice. `x` is an ε-solution iff `value ≥ −ε`.
pub fn gap(f: &dyn Bifunction, set: &FeasibleSet, x: &Point, resolution: f64) -> Result<ResidualReport> {
    x.check_dim(f.dim())?;
    scan(set, resolution, Extremum::Min, |y| f.eval(x, y))
}

/// `min_y f(x, y) + ‖y − x‖²/(2ρ)` over the lattice. `x` is an
/// ε-ρ-quasi-solution iff `value ≥ −ε`.
pub fn quasi_residual(
    f: &dyn Bifunction,
    set: &FeasibleSet,
    x: &Point,
    rho: f64,
    resolution: f64,
) -> Result<ResidualReport> {
    x.check_dim(f.dim())?;
    if !(rho > 0.0) {
        return Err(Error::InvalidArgument(format!("rho must be positive, got {rho}")));
    }
    scan(set, resolution, Extremum::Min, |y| {
        Ok(f.eval(x, y)? + x.dist_sq(y) / (2.0 * rho))
    })
}

/// `max_y f(y, z)` over the lattice. `z` solves the dual (Minty) problem
/// up to ε iff `value ≤ ε`.
pub fn dual_residual(
    f: &dyn Bifunction,
    set: &FeasibleSet,
    z: &Point,
    resolution: f64,
) -> Result<ResidualReport> {
    z.check_dim(f.dim())?;
    scan(set, resolution, Extremum::Max, |y| f.eval(y, z))
}

/// The same residual at `resolution` and `resolution / 2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    pub coarse: f64,
    pub fine: f64,
    pub drift: f64,
}

pub fn refinement_drift(
    resolution: f64,
    residual: impl Fn(f64) -> Result<ResidualReport>,
) -> Result<Drift> {
    let coarse = residual(resolution)?.value;
    let fine = residual(resolution / 2.0)?.value;
    Ok(Drift {
        coarse,
        fine,
        drift: (coarse - fine).abs(),
    })
}

/// `1e-6 (1 + max |f(x, y)|)` with the max over a coarse lattice of `C`.
pub fn default_epsilon(f: &dyn Bifunction, set: &FeasibleSet, x: &Point) -> Result<f64> {
    let (lo, hi) = set.bounding_box();
    let span = (0..lo.dim()).map(|i| hi[i] - lo[i]).fold(0.0, f64::max);
    let resolution = if span > 0.0 { span / 10.0 } else { 1.0 };
    let lattice = set.lattice_with_cap(resolution, 1_000_000)?;
    let mut scale = 0.0f64;
    for i in 0..lattice.len() {
        let p = lattice.point(i);
        if set.contains(&p, 0.0)? {
            scale = scale.max(f.eval(x, &p)?.abs());
        }
    }
    Ok(1e-6 * (1.0 + scale))
}

/// A point whose dual residual was checked on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CertifiedDual {
    point: Point,
    report: ResidualReport,
}

impl CertifiedDual {
    pub fn point(&self) -> &Point {
        &self.point
    }

    pub fn report(&self) -> &ResidualReport {
        &self.report
    }
}

/// Default slack for [`certify_dual`].
pub const DUAL_CERTIFICATE_TOL: f64 = 1e-9;

/// Certifies `z` as a dual solution when `dual_residual ≤ tol`.
pub fn certify_dual(
    f: &dyn Bifunction,
    set: &FeasibleSet,
    z: &Point,
    resolution: f64,
    tol: f64,
) -> Result<CertifiedDual> {
    let report = dual_residual(f, set, z, resolution)?;
    if report.value > tol {
        return Err(Error::InvalidArgument(format!(
            "{z} is not a dual solution: max f(y, z) = {} at {}",
            report.value, report.witness
        )));
    }
    Ok(CertifiedDual {
        point: z.clone(),
        report,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FejerReport {
    pub holds: bool,
    pub first_violation: Option<usize>,
    /// Largest `‖x_next − z‖² − ‖x − z‖² − σ²` seen.
    pub max_excess: f64,
}

/// Checks `‖x^{k+1} − z‖² ≤ ‖x^k − z‖² + σ_k² + tol` along a trace.
pub fn fejer_check(trace: &[IterationRecord], z_star: &CertifiedDual, tol: f64) -> FejerReport {
    let z = z_star.point();
    let mut first_violation = None;
    let mut max_excess = f64::NEG_INFINITY;
    for r in trace {
        let excess = r.x_next.dist_sq(z) - r.x.dist_sq(z) - r.sigma * r.sigma;
        max_excess = max_excess.max(excess);
        if excess > tol && first_violation.is_none() {
            first_violation = Some(r.k);
        }
    }
    FejerReport {
        holds: first_violation.is_none(),
        first_violation,
        max_excess,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum Convexity {
    ViolatesQuasiconvex,
    QuasiconvexOnly,
    SemistrictConsistent,
    StrongConsistent { gamma: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub classification: Convexity,
    pub samples: usize,
    pub seed: u64,
    pub quasiconvex_violations: usize,
    pub semistrict_violations: usize,
    /// Infimum over sampled triples of `2 (max − φ(mid)) / (λ(1−λ)‖u − v‖²)`.
    pub gamma_hat: f64,
    /// `(max φ − min φ) / diam²` over the samples; moduli below
    /// `1e-3` of this are not reported as strong quasiconvexity.
    pub curvature_scale: f64,
}

/// Samples triples `(u, v, λ)` in `C` and tests the quasiconvexity,
/// semistrict and strong-quasiconvexity inequalities for `φ = f(x, ·)` at
/// `λu + (1 − λ)v`.
pub fn quasiconvexity_probe(
    f: &dyn Bifunction,
    set: &FeasibleSet,
    x: &Point,
    samples: usize,
    seed: u64,
) -> Result<ProbeReport> {
    x.check_dim(f.dim())?;
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be >= 1".into()));
    }
    let (lo, hi) = set.bounding_box();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Coordinates snap to a face of the bounding box one time in ten: flat
    // spots at the boundary are where strong quasiconvexity tends to fail.
    let draw = |rng: &mut ChaCha8Rng| -> Result<Point> {
        let coords: Vec<f64> = (0..lo.dim())
            .map(|i| {
                if hi[i] <= lo[i] {
                    return lo[i];
                }
                match rng.gen_range(0..20) {
                    0 => lo[i],
                    1 => hi[i],
                    _ => rng.gen_range(lo[i]..=hi[i]),
                }
            })
            .collect();
        set.project(&Point::new(coords)?)
    };
    let mut qc_viol = 0;
    let mut ss_viol = 0;
    let mut gamma_hat = f64::INFINITY;
    let mut fmin = f64::INFINITY;
    let mut fmax = f64::NEG_INFINITY;
    let mut diam_sq = 0.0f64;
    for _ in 0..samples {
        let u = draw(&mut rng)?;
        let v = draw(&mut rng)?;
        let lambda: f64 = rng.gen_range(1e-3..1.0 - 1e-3);
        let mid = u.lerp(&v, 1.0 - lambda);
        let (fu, fv, fm) = (f.eval(x, &u)?, f.eval(x, &v)?, f.eval(x, &mid)?);
        let top = fu.max(fv);
        let slack = 1e-12 * (1.0 + top.abs());
        fmin = fmin.min(fu.min(fv));
        fmax = fmax.max(top);
        let d2 = u.dist_sq(&v);
        diam_sq = diam_sq.max(d2);
        if fm > top + slack {
            qc_viol += 1;
        }
        if (fu - fv).abs() > slack && fm >= top {
            ss_viol += 1;
        }
        if d2 > 1e-18 {
            gamma_hat = gamma_hat.min(2.0 * (top - fm) / (lambda * (1.0 - lambda) * d2));
        }
    }
    let curvature_scale = if diam_sq > 0.0 {
        (fmax - fmin) / diam_sq
    } else {
        0.0
    };
    let classification = if qc_viol > 0 {
        Convexity::ViolatesQuasiconvex
    } else if gamma_hat.is_finite() && gamma_hat > 1e-3 * curvature_scale && gamma_hat > 0.0 {
        Convexity::StrongConsistent { gamma: gamma_hat }
    } else if ss_viol == 0 {
        Convexity::SemistrictConsistent
    } else {
        Convexity::QuasiconvexOnly
    };
    Ok(ProbeReport {
        classification,
        samples,
        seed,
        quasiconvex_violations: qc_viol,
        semistrict_violations: ss_viol,
        gamma_hat,
        curvature_scale,
    })
}

/// Sampled check that `g` behaves like a star-subgradient of `f(z, ·)` at
/// `x`: for sampled `y` with `f(z, y) < f(z, x) − tol`, requires
/// `⟨g, y − x⟩ < tol`. Returns the violating samples.
pub fn star_subgradient_violations(
    f: &dyn Bifunction,
    set: &FeasibleSet,
    z: &Point,
    x: &Point,
    g: &Point,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<Vec<Point>> {
    let (lo, hi) = set.bounding_box();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let level = f.eval(z, x)?;
    let mut bad = Vec::new();
    for _ in 0..samples {
        let coords: Vec<f64> = (0..lo.dim())
            .map(|i| if hi[i] > lo[i] { rng.gen_range(lo[i]..=hi[i]) } else { lo[i] })
            .collect();
        let y = set.project(&Point::new(coords)?)?;
        if f.eval(z, &y)? < level - tol && g.dot(&y.sub(x)) >= tol {
            bad.push(y);
        }
    }
    Ok(bad)
}
