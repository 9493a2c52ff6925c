//! Reference computations shared by the integration tests. They avoid the
//! library's own numerical routines where the library is under test.

#![allow(dead_code)]

use quasieq::bifunction::{Bifunction, FractionalMaxBifunction};
use quasieq::space::{FeasibleSet, Point};

/// Five-point stencil for `∇_y f(x, y)`. Per-axis steps stay below a
/// fortieth of the distance to the faces of `[lo, hi]`.
pub fn five_point_grad2(f: &dyn Bifunction, x: &Point, y: &Point, lo: &Point, hi: &Point) -> Vec<f64> {
    (0..y.dim())
        .map(|i| {
            let room = (y[i] - lo[i]).min(hi[i] - y[i]) / 40.0;
            let h = (1e-3 * y[i].abs().max(1.0)).min(room);
            let at = |t: f64| {
                let mut v = y.as_slice().to_vec();
                v[i] += t;
                f.eval(x, &Point::new(v).unwrap()).unwrap()
            };
            (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h)
        })
        .collect()
}

pub fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
    let scale = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    diff / scale
}

/// Index of the strictly active branch, or `None` on a near tie.
pub fn active_branch(f: &FractionalMaxBifunction, x: &Point, y: &Point) -> Option<usize> {
    let vals: Vec<f64> = f
        .branches()
        .iter()
        .map(|b| {
            FractionalMaxBifunction::new(vec![b.clone()])
                .unwrap()
                .eval(x, y)
                .unwrap()
        })
        .collect();
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    if vals.len() > 1 && vals[idx[0]] - vals[idx[1]] < 1e-6 {
        return None;
    }
    Some(idx[0])
}

fn axis(lo: f64, hi: f64, h: f64) -> Vec<f64> {
    let n = ((hi - lo) / h).round() as usize;
    (0..=n).map(|i| if i == n { hi } else { lo + i as f64 * h }).collect()
}

/// `min_y φ(y)` over a box: a full lattice at `coarse`, then lattices at
/// `fine` on windows of half-width `2 coarse` around the 8 best coarse
/// points. Two-dimensional boxes only.
pub fn two_level_grid_min(
    phi: impl Fn(&Point) -> f64,
    set: &FeasibleSet,
    coarse: f64,
    fine: f64,
) -> (f64, Point) {
    let (lo, hi) = set.bounding_box();
    assert_eq!(lo.dim(), 2);
    let (ax, ay) = (axis(lo[0], hi[0], coarse), axis(lo[1], hi[1], coarse));
    let mut scored: Vec<(f64, f64, f64)> = Vec::with_capacity(ax.len() * ay.len());
    for &u in &ax {
        for &v in &ay {
            let p = Point::new(vec![u, v]).unwrap();
            scored.push((phi(&p), u, v));
        }
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = (f64::INFINITY, Point::zeros(2));
    for &(_, u, v) in scored.iter().take(8) {
        let w = 2.0 * coarse;
        let (u0, u1) = ((u - w).max(lo[0]), (u + w).min(hi[0]));
        let (v0, v1) = ((v - w).max(lo[1]), (v + w).min(hi[1]));
        for &a in &axis(u0, u1, fine) {
            for &b in &axis(v0, v1, fine) {
                let p = Point::new(vec![a, b]).unwrap();
                let val = phi(&p);
                if val < best.0 {
                    best = (val, p);
                }
            }
        }
    }
    best
}
