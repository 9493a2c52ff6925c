//! The regularized subproblem
//! `min_{y ∈ C} f(x, y) + ‖y − x‖² / (2ρ)`.
//!
//! `f(x, ·)` is only quasiconvex, so the subproblem can be nonconvex. Every
//! method is multistart and always keeps the anchor `y = x` (objective 0) as
//! a candidate, so the returned objective never exceeds zero for a genuine
//! bifunction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bifunction::{Bifunction, Piece};
use crate::error::{Error, Result};
use crate::space::{FeasibleSet, Point};

/// Slack allowed on the `objective ≤ 0` certificate.
pub const CERTIFICATE_TOL: f64 = 1e-10;

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// An instance of the subproblem anchored at `anchor`.
#[derive(Clone, Copy)]
pub struct ProxProblem<'a> {
    f: &'a dyn Bifunction,
    anchor: &'a Point,
    rho: f64,
    set: &'a FeasibleSet,
}

impl<'a> ProxProblem<'a> {
    pub fn new(
        f: &'a dyn Bifunction,
        anchor: &'a Point,
        rho: f64,
        set: &'a FeasibleSet,
    ) -> Result<Self> {
        anchor.check_dim(f.dim())?;
        if set.dim() != f.dim() {
            return Err(Error::dim_mismatch(f.dim(), set.dim()));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidArgument(format!("rho must be positive, got {rho}")));
        }
        if !set.contains(anchor, 1e-9)? {
            return Err(Error::InvalidArgument(format!(
                "prox anchor {anchor} is not in the feasible set"
            )));
        }
        Ok(ProxProblem {
            f,
            anchor,
            rho,
            set,
        })
    }

    pub fn anchor(&self) -> &Point {
        self.anchor
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn objective(&self, y: &Point) -> Result<f64> {
        Ok(self.f.eval(self.anchor, y)? + self.anchor.dist_sq(y) / (2.0 * self.rho))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepRule {
    /// Start from the previous step length, shrink by `beta` until the
    /// actual decrease is at least `c` times the model decrease.
    Backtracking { beta: f64, c: f64 },
    /// Fixed step `1 / lipschitz`.
    Fixed { lipschitz: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProxMethod {
    /// One-dimensional: golden-section search on `starts` equal subintervals.
    Golden1d { starts: usize, tol: f64 },
    /// Projected steps on the linearized branches of `f(x, ·)` with the
    /// quadratic term kept exact; plain projected gradient for smooth `f`.
    ProjGrad {
        step: StepRule,
        max_iters: usize,
        tol: f64,
        starts: usize,
    },
    /// Exhaustive lattice scan followed by a shrinking-window local search
    /// around the best lattice points. Oracle grade, intended for `n ≤ 2`.
    GridPolish { resolution: f64, polish_tol: f64 },
}

impl ProxMethod {
    pub fn golden_default() -> Self {
        ProxMethod::Golden1d {
            starts: 16,
            tol: 1e-10,
        }
    }

    pub fn proj_grad_default() -> Self {
        ProxMethod::ProjGrad {
            step: StepRule::Backtracking { beta: 0.5, c: 1e-4 },
            max_iters: 500,
            tol: 1e-8,
            starts: 4,
        }
    }

    /// Golden-section search in one dimension, projected steps otherwise.
    pub fn default_for_dim(n: usize) -> Self {
        if n == 1 {
            ProxMethod::golden_default()
        } else {
            ProxMethod::proj_grad_default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(format!("prox method: {msg}")));
        match *self {
            ProxMethod::Golden1d { starts, tol } => {
                if starts == 0 {
                    return bad("starts must be >= 1");
                }
                if !(tol > 0.0) {
                    return bad("tol must be positive");
                }
            }
            ProxMethod::ProjGrad {
                step,
                max_iters,
                tol,
                starts,
            } => {
                if starts == 0 || max_iters == 0 {
                    return bad("starts and max_iters must be >= 1");
                }
                if !(tol > 0.0) {
                    return bad("tol must be positive");
                }
                match step {
                    StepRule::Backtracking { beta, c } => {
                        if !(beta > 0.0 && beta < 1.0 && c > 0.0 && c < 1.0) {
                            return bad("backtracking needs beta, c in (0, 1)");
                        }
                    }
                    StepRule::Fixed { lipschitz } => {
                        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
                            return bad("lipschitz must be positive");
                        }
                    }
                }
            }
            ProxMethod::GridPolish {
                resolution,
                polish_tol,
            } => {
                if !(resolution > 0.0 && polish_tol > 0.0) {
                    return bad("resolution and polish_tol must be positive");
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProxSolution {
    pub point: Point,
    pub objective: f64,
    /// `objective ≤ CERTIFICATE_TOL`. When false the point is the best found
    /// and the caller should treat it as a flagged (non-fatal) failure.
    pub certified: bool,
}

/// Solves the subproblem. `seed` drives the random start of `ProjGrad`.
pub fn solve_prox(problem: &ProxProblem<'_>, method: &ProxMethod, seed: u64) -> Result<ProxSolution> {
    method.validate()?;
    let (point, objective) = match *method {
        ProxMethod::Golden1d { starts, tol } => golden_multistart(problem, starts, tol)?,
        ProxMethod::ProjGrad {
            step,
            max_iters,
            tol,
            starts,
        } => proj_grad_multistart(problem, step, max_iters, tol, starts, seed)?,
        ProxMethod::GridPolish {
            resolution,
            polish_tol,
        } => grid_polish(problem, resolution, polish_tol)?,
    };
    Ok(ProxSolution {
        point,
        objective,
        certified: objective <= CERTIFICATE_TOL,
    })
}

/// Lowest objective wins; ties keep the earliest candidate.
fn pick_best(candidates: Vec<(Point, f64)>) -> (Point, f64) {
    let mut it = candidates.into_iter();
    let mut best = it.next().expect("anchor is always a candidate");
    for c in it {
        if c.1 < best.1 {
            best = c;
        }
    }
    best
}

fn golden_section(phi: &dyn Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let mut fc = phi(c)?;
    let mut fd = phi(d)?;
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = phi(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = phi(d)?;
        }
    }
    Ok(if fc <= fd { (c, fc) } else { (d, fd) })
}

fn golden_multistart(problem: &ProxProblem<'_>, starts: usize, tol: f64) -> Result<(Point, f64)> {
    if problem.set.dim() != 1 {
        return Err(Error::InvalidArgument(
            "golden-section prox requires a one-dimensional set".into(),
        ));
    }
    let (lo, hi) = problem.set.bounding_box();
    let (lo, hi) = (lo[0], hi[0]);
    let eval = |v: f64| -> Result<(Point, f64)> {
        let y = problem.set.project(&Point::scalar(v)?)?;
        let val = problem.objective(&y)?;
        Ok((y, val))
    };
    let phi = |v: f64| eval(v).map(|(_, val)| val);

    let mut candidates = vec![(problem.anchor.clone(), problem.objective(problem.anchor)?)];
    let width = (hi - lo) / starts as f64;
    let knots: Vec<f64> = (0..=starts)
        .map(|i| if i == starts { hi } else { lo + i as f64 * width })
        .collect();
    for &k in &knots {
        candidates.push(eval(k)?);
    }
    for w in knots.windows(2) {
        if w[1] > w[0] {
            let (v, _) = golden_section(&phi, w[0], w[1], tol)?;
            candidates.push(eval(v)?);
        }
    }
    Ok(pick_best(candidates))
}

fn max_value(pieces: &[Piece]) -> f64 {
    pieces
        .iter()
        .map(|p| p.value)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Minimizer over `C` of the linearized model
/// `Σλᵢ(vᵢ + aᵢ·(u − y)) + ‖u − x‖²/(2ρ) + ‖u − y‖²/(2s)` for fixed weights λ,
/// and the model value there.
fn model_point(
    problem: &ProxProblem<'_>,
    pieces: &[Piece],
    y: &Point,
    s: f64,
    weights: &[f64],
) -> Result<(Point, f64)> {
    let x = problem.anchor;
    let rho = problem.rho;
    let t = 1.0 / (1.0 / rho + 1.0 / s);
    let n = y.dim();
    let mut grad = vec![0.0; n];
    let mut base = 0.0;
    for (p, &w) in pieces.iter().zip(weights) {
        base += w * p.value;
        for (g, a) in grad.iter_mut().zip(p.grad.iter()) {
            *g += w * a;
        }
    }
    let unconstrained: Vec<f64> = (0..n)
        .map(|i| t * (x[i] / rho + y[i] / s - grad[i]))
        .collect();
    let u = problem.set.project(&Point::from_vec(unconstrained))?;
    let lin: f64 = grad.iter().zip(u.iter().zip(y.iter())).map(|(g, (a, b))| g * (a - b)).sum();
    let value = base + lin + u.dist_sq(x) / (2.0 * rho) + u.dist_sq(y) / (2.0 * s);
    Ok((u, value))
}

/// Maximizes the concave dual over the simplex of branch weights and returns
/// the corresponding primal model minimizer.
fn model_step(problem: &ProxProblem<'_>, pieces: &[Piece], y: &Point, s: f64) -> Result<Point> {
    match pieces.len() {
        1 => Ok(model_point(problem, pieces, y, s, &[1.0])?.0),
        2 => {
            let dual = |mu: f64| -> Result<f64> {
                Ok(-model_point(problem, pieces, y, s, &[1.0 - mu, mu])?.1)
            };
            let (mu, val) = golden_section(&dual, 0.0, 1.0, 1e-12)?;
            // endpoints can beat the interior search when the optimum is a vertex
            let mut best = (mu, val);
            for end in [0.0, 1.0] {
                let v = dual(end)?;
                if v < best.1 {
                    best = (end, v);
                }
            }
            Ok(model_point(problem, pieces, y, s, &[1.0 - best.0, best.0])?.0)
        }
        k => {
            // Frank-Wolfe on the simplex with exact line search.
            let mut w = vec![0.0; k];
            let top = (0..k)
                .max_by(|&i, &j| pieces[i].value.total_cmp(&pieces[j].value).then(j.cmp(&i)))
                .unwrap_or(0);
            w[top] = 1.0;
            for _ in 0..200 {
                let (u, _) = model_point(problem, pieces, y, s, &w)?;
                // dual gradient coordinate i is the linearized branch value at u
                let lin = |i: usize| -> f64 {
                    pieces[i].value
                        + pieces[i]
                            .grad
                            .iter()
                            .zip(u.iter().zip(y.iter()))
                            .map(|(g, (a, b))| g * (a - b))
                            .sum::<f64>()
                };
                let vertex = (0..k)
                    .max_by(|&i, &j| lin(i).total_cmp(&lin(j)).then(j.cmp(&i)))
                    .unwrap_or(0);
                let current: f64 = (0..k).map(|i| w[i] * lin(i)).sum();
                if lin(vertex) - current <= 1e-14 * (1.0 + current.abs()) {
                    break;
                }
                let mix = |gamma: f64| -> Vec<f64> {
                    (0..k)
                        .map(|i| (1.0 - gamma) * w[i] + if i == vertex { gamma } else { 0.0 })
                        .collect()
                };
                let dual = |gamma: f64| -> Result<f64> {
                    Ok(-model_point(problem, pieces, y, s, &mix(gamma))?.1)
                };
                let (gamma, _) = golden_section(&dual, 0.0, 1.0, 1e-12)?;
                w = mix(gamma);
            }
            Ok(model_point(problem, pieces, y, s, &w)?.0)
        }
    }
}

/// Local descent from `start`; returns the final point, its objective, and
/// whether the stationarity residual reached `tol`.
fn prox_linear_descent(
    problem: &ProxProblem<'_>,
    start: &Point,
    rule: StepRule,
    max_iters: usize,
    tol: f64,
) -> Result<(Point, f64, bool)> {
    let x = problem.anchor;
    let rho = problem.rho;
    let mut y = problem.set.project(start)?;
    let mut s = match rule {
        StepRule::Backtracking { .. } => rho,
        StepRule::Fixed { lipschitz } => 1.0 / lipschitz,
    };
    let mut pieces = problem.f.pieces(x, &y)?;
    let mut phi = max_value(&pieces) + y.dist_sq(x) / (2.0 * rho);

    for _ in 0..max_iters {
        loop {
            let u = model_step(problem, &pieces, &y, s)?;
            let t = 1.0 / (1.0 / rho + 1.0 / s);
            let step = u.dist(&y);
            let model: f64 = pieces
                .iter()
                .map(|p| {
                    p.value
                        + p.grad
                            .iter()
                            .zip(u.iter().zip(y.iter()))
                            .map(|(g, (a, b))| g * (a - b))
                            .sum::<f64>()
                })
                .fold(f64::NEG_INFINITY, f64::max)
                + u.dist_sq(x) / (2.0 * rho);
            let predicted = phi - model;
            if step / t <= tol || predicted < 0.0 {
                return Ok((y, phi, true));
            }
            let u_pieces = problem.f.pieces(x, &u)?;
            let u_phi = max_value(&u_pieces) + u.dist_sq(x) / (2.0 * rho);
            let accept = match rule {
                StepRule::Backtracking { c, .. } => u_phi <= phi - c * predicted,
                StepRule::Fixed { .. } => true,
            };
            if accept {
                y = u;
                pieces = u_pieces;
                phi = u_phi;
                if let StepRule::Backtracking { .. } = rule {
                    s = (2.0 * s).min(1e8);
                }
                break;
            }
            if let StepRule::Backtracking { beta, .. } = rule {
                s *= beta;
                if s < 1e-14 {
                    return Ok((y, phi, false));
                }
            }
        }
    }
    Ok((y, phi, false))
}

/// Pool of candidate starts scored by the objective: all box corners when
/// `n <= 5` (random corners otherwise), the witness, and uniform samples.
/// Returns the anchor followed by the best `starts` pool points.
fn start_points(problem: &ProxProblem<'_>, starts: usize, seed: u64) -> Result<Vec<Point>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = problem.set.bounding_box();
    let n = lo.dim();
    let corner = |mask: &dyn Fn(usize) -> bool| -> Point {
        Point::from_vec((0..n).map(|i| if mask(i) { hi[i] } else { lo[i] }).collect())
    };
    let mut pool = vec![problem.set.witness()];
    if n <= 5 {
        for bits in 0..1usize << n {
            pool.push(corner(&|i| bits >> i & 1 == 1));
        }
    } else {
        for _ in 0..2 * starts {
            let bits: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
            pool.push(corner(&|i| bits[i]));
        }
    }
    for _ in 0..8 * starts {
        pool.push(Point::from_vec(
            (0..n)
                .map(|i| if hi[i] > lo[i] { rng.gen_range(lo[i]..=hi[i]) } else { lo[i] })
                .collect(),
        ));
    }
    let mut scored = Vec::with_capacity(pool.len());
    for (i, p) in pool.into_iter().enumerate() {
        let p = problem.set.project(&p)?;
        let v = problem.objective(&p)?;
        scored.push((v, i, p));
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut pts = vec![problem.anchor.clone()];
    pts.extend(scored.into_iter().take(starts).map(|(_, _, p)| p));
    Ok(pts)
}

fn proj_grad_multistart(
    problem: &ProxProblem<'_>,
    rule: StepRule,
    max_iters: usize,
    tol: f64,
    starts: usize,
    seed: u64,
) -> Result<(Point, f64)> {
    let mut candidates = vec![(problem.anchor.clone(), problem.objective(problem.anchor)?)];
    for start in start_points(problem, starts, seed)? {
        // the linearization may be undefined at a start (e.g. a kink of sqrt)
        let (y, _, _) = match prox_linear_descent(problem, &start, rule, max_iters, tol) {
            Err(Error::Domain(_)) => continue,
            r => r?,
        };
        // re-evaluate through eval so every method reports the same objective
        let val = problem.objective(&y)?;
        candidates.push((y, val));
    }
    Ok(pick_best(candidates))
}

/// Best lattice points of the scan that get polished.
const POLISH_SEEDS: usize = 8;

fn grid_polish(problem: &ProxProblem<'_>, resolution: f64, polish_tol: f64) -> Result<(Point, f64)> {
    let lattice = problem.set.lattice(resolution)?;
    let set = problem.set;
    let scanned: Vec<(usize, f64)> = (0..lattice.len())
        .into_par_iter()
        .map(|i| -> Result<Option<(usize, f64)>> {
            let p = lattice.point(i);
            if !set.contains(&p, 0.0)? {
                return Ok(None);
            }
            Ok(Some((i, problem.objective(&p)?)))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let mut order = scanned;
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));

    let mut candidates = vec![(problem.anchor.clone(), problem.objective(problem.anchor)?)];
    for &(i, val) in order.iter().take(POLISH_SEEDS) {
        candidates.push(zoom_polish(problem, lattice.point(i), val, resolution, polish_tol)?);
    }
    Ok(pick_best(candidates))
}

/// Shrinking-window pattern search: evaluate an 11-point-per-axis stencil
/// around the incumbent, recentre, and shrink the window unless the best
/// stencil point sits on its edge.
fn zoom_polish(
    problem: &ProxProblem<'_>,
    start: Point,
    start_val: f64,
    half_width: f64,
    tol: f64,
) -> Result<(Point, f64)> {
    const Q: i64 = 5;
    let n = start.dim();
    let side = (2 * Q + 1) as usize;
    let total = side.pow(n as u32);
    let mut center = start;
    let mut best_val = start_val;
    let mut h = half_width;
    for _ in 0..10_000 {
        if h <= tol {
            break;
        }
        let spacing = h / Q as f64;
        let mut best: Option<(Point, f64, bool)> = None;
        for idx in 0..total {
            let mut rem = idx;
            let mut on_edge = false;
            let mut coords = center.as_slice().to_vec();
            for c in coords.iter_mut().rev() {
                let off = (rem % side) as i64 - Q;
                rem /= side;
                on_edge |= off.abs() == Q;
                *c += off as f64 * spacing;
            }
            let u = problem.set.project(&Point::from_vec(coords))?;
            let val = problem.objective(&u)?;
            if val < best.as_ref().map_or(best_val, |b| b.1) {
                best = Some((u, val, on_edge));
            }
        }
        match best {
            Some((u, val, on_edge)) => {
                center = u;
                best_val = val;
                if !on_edge {
                    h = 2.0 * spacing;
                }
            }
            None => h = 2.0 * spacing,
        }
    }
    Ok((center, best_val))
}

/// Sampled estimate of the largest `ρ` for which the subproblem at `x` is
/// strongly convex, `1 / L̂` with `L̂` the largest observed gradient
/// difference quotient of `f(x, ·)` over pairs of sampled points of `C`.
///
/// `L̂` underestimates the true Lipschitz constant, so the bound is
/// optimistic. Treat it as a heuristic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RhoBound {
    pub rho_bound: f64,
    pub lipschitz_estimate: f64,
    pub pairs: usize,
}

pub fn strong_convexity_rho_bound(
    f: &dyn Bifunction,
    x: &Point,
    set: &FeasibleSet,
    sample_count: usize,
    seed: u64,
) -> Result<RhoBound> {
    x.check_dim(f.dim())?;
    if sample_count < 2 {
        return Err(Error::InvalidArgument("sample_count must be >= 2".into()));
    }
    let (lo, hi) = set.bounding_box();
    let n = lo.dim();
    let mut samples = Vec::with_capacity(sample_count);
    if n <= 10 {
        for mask in 0..(1usize << n) {
            if samples.len() >= sample_count {
                break;
            }
            let corner: Vec<f64> = (0..n)
                .map(|i| if mask >> i & 1 == 1 { hi[i] } else { lo[i] })
                .collect();
            samples.push(set.project(&Point::from_vec(corner))?);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while samples.len() < sample_count {
        let p: Vec<f64> = (0..n)
            .map(|i| if hi[i] > lo[i] { rng.gen_range(lo[i]..=hi[i]) } else { lo[i] })
            .collect();
        samples.push(set.project(&Point::from_vec(p))?);
    }
    let grads = samples
        .iter()
        .map(|u| f.grad2(x, u))
        .collect::<Result<Vec<_>>>()?;
    let mut lip = 0.0f64;
    let mut pairs = 0;
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            let d = samples[i].dist(&samples[j]);
            if d <= 1e-12 {
                continue;
            }
            pairs += 1;
            lip = lip.max(grads[i].dist(&grads[j]) / d);
        }
    }
    if pairs == 0 {
        return Err(Error::InvalidArgument(
            "all sampled points coincide; no difference quotient available".into(),
        ));
    }
    Ok(RhoBound {
        rho_bound: if lip > 0.0 { 1.0 / lip } else { f64::INFINITY },
        lipschitz_estimate: lip,
        pairs,
    })
}
