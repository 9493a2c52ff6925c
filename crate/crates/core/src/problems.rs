//! Benchmark instances and the problem-file schema.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bifunction::{
    Bifunction, CubicBifunction, FractionalBranch, FractionalMaxBifunction, Matrix,
    RootQuadBifunction,
};
use crate::error::{Error, Result};
use crate::schedule::{RhoSchedule, SigmaSchedule};
use crate::solver::SolverConfig;
use crate::space::{FeasibleSet, Point};

/// Row-major second-branch `E` matrix of the ten-dimensional instance.
const E2_TEN: [[f64; 10]; 10] = [
    [4., 4., 2., 4., 2., 2., 3., 2., 1., 2.],
    [1., 3., 0., 3., 0., 1., 1., 0., 2., 2.],
    [2., 3., 0., 2., 2., 2., 1., 1., 2., 2.],
    [3., 2., 3., 0., 1., 1., 2., 4., 1., 1.],
    [1., 4., 3., 0., 2., 1., 4., 3., 0., 3.],
    [0., 4., 1., 4., 2., 3., 4., 3., 4., 2.],
    [3., 0., 4., 4., 0., 4., 1., 1., 1., 2.],
    [1., 2., 2., 3., 1., 0., 3., 0., 0., 0.],
    [2., 0., 0., 3., 0., 3., 3., 4., 4., 2.],
    [0., 2., 4., 4., 0., 4., 3., 0., 3., 1.],
];

/// Inline fractional-max problem: branches, box and start.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FractionalSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub branches: Vec<FractionalBranch>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub x0: Vec<f64>,
}

fn default_r() -> f64 {
    2.0
}

fn default_delta() -> f64 {
    10.0
}

/// Problem selector as it appears in run configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum ProblemSpec {
    #[serde(rename = "example_4_1")]
    RootQuad {
        #[serde(default = "default_r")]
        r: f64,
        #[serde(default = "default_delta")]
        delta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x0: Option<f64>,
    },
    #[serde(rename = "example_4_2_small")]
    FractionalSmall,
    #[serde(rename = "example_4_2_ten")]
    FractionalTen,
    #[serde(rename = "counterexample_cubic")]
    Cubic,
    #[serde(rename = "random")]
    Random { n: usize, seed: u64 },
    #[serde(rename = "fractional")]
    Fractional(FractionalSpec),
}

impl ProblemSpec {
    pub fn build(&self) -> Result<ProblemInstance> {
        match self {
            ProblemSpec::RootQuad { r, delta, x0 } => {
                let mut inst = example_4_1(*r, *delta)?;
                if let Some(x0) = x0 {
                    inst.x0 = Point::scalar(*x0)?;
                    if !inst.set.contains(&inst.x0, 1e-9)? {
                        return Err(Error::InvalidArgument(format!(
                            "x0 = {x0} lies outside [0, {delta}]"
                        )));
                    }
                    inst.spec = self.clone();
                }
                Ok(inst)
            }
            ProblemSpec::FractionalSmall => Ok(example_4_2_small()),
            ProblemSpec::FractionalTen => Ok(example_4_2_ten()),
            ProblemSpec::Cubic => Ok(counterexample_cubic()),
            ProblemSpec::Random { n, seed } => random_fractional(*n, *seed),
            ProblemSpec::Fractional(spec) => fractional_from_spec(spec),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Catalog,
    Random { seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    RootQuad(RootQuadBifunction),
    FractionalMax(FractionalMaxBifunction),
    Cubic(CubicBifunction),
}

impl Family {
    pub fn bifunction(&self) -> &dyn Bifunction {
        match self {
            Family::RootQuad(f) => f,
            Family::FractionalMax(f) => f,
            Family::Cubic(f) => f,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProblemInstance {
    pub name: String,
    pub family: Family,
    pub set: FeasibleSet,
    pub x0: Point,
    pub config: SolverConfig,
    pub provenance: Provenance,
    /// Selector that rebuilds this instance.
    pub spec: ProblemSpec,
}

impl ProblemInstance {
    pub fn bifunction(&self) -> &dyn Bifunction {
        self.family.bifunction()
    }

    pub fn shared_bifunction(&self) -> Arc<dyn Bifunction> {
        match &self.family {
            Family::RootQuad(f) => Arc::new(f.clone()),
            Family::FractionalMax(f) => Arc::new(f.clone()),
            Family::Cubic(f) => Arc::new(*f),
        }
    }

    pub fn dim(&self) -> usize {
        self.x0.dim()
    }

    /// Fully materialized description: fractional instances (including
    /// random ones) are written out with every coefficient.
    pub fn to_spec(&self) -> ProblemSpec {
        match &self.family {
            Family::FractionalMax(f) => {
                let (lo, hi) = self.set.bounding_box();
                ProblemSpec::Fractional(FractionalSpec {
                    name: Some(self.name.clone()),
                    branches: f.branches().to_vec(),
                    lo: lo.into_vec(),
                    hi: hi.into_vec(),
                    x0: self.x0.clone().into_vec(),
                })
            }
            _ => self.spec.clone(),
        }
    }
}

/// `f(x, y) = √y − √x + r·x·(y − x)` on `[0, δ]`, started at `δ/2`.
pub fn example_4_1(r: f64, delta: f64) -> Result<ProblemInstance> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    let f = RootQuadBifunction::new(r)?;
    let mut config = SolverConfig::for_dim(1);
    config.theta = 0.5;
    config.tol_xy = 1e-3;
    config.tol_step = 1e-3;
    Ok(ProblemInstance {
        name: format!("example_4_1(r={r}, delta={delta})"),
        family: Family::RootQuad(f),
        set: FeasibleSet::cube(1, 0.0, delta)?,
        x0: Point::scalar(delta / 2.0)?,
        config,
        provenance: Provenance::Catalog,
        spec: ProblemSpec::RootQuad { r, delta, x0: None },
    })
}

fn fractional_config(n: usize, tol: f64) -> SolverConfig {
    let mut config = SolverConfig::for_dim(n);
    config.theta = 0.8;
    config.tol_xy = tol;
    config.tol_step = tol;
    config
}

fn example_4_2_bifunction(e2: Matrix, n: usize) -> FractionalMaxBifunction {
    let ones = vec![1.0; n];
    FractionalMaxBifunction::new(vec![
        FractionalBranch {
            a: Matrix::identity(n),
            b: vec![0.0; n],
            e: Matrix::identity(n),
            f: ones.clone(),
            c: vec![0.0; n],
            d: 1.0,
        },
        FractionalBranch {
            a: Matrix::identity(n),
            b: vec![0.0; n],
            e: e2,
            f: ones.clone(),
            c: ones,
            d: 2.0,
        },
    ])
    .expect("catalog shapes are consistent")
}

fn catalog_fractional(name: &str, f: FractionalMaxBifunction, spec: ProblemSpec) -> ProblemInstance {
    let n = f.dim();
    let set = FeasibleSet::cube(n, 0.0, 5.0).expect("valid box");
    ProblemInstance {
        name: name.into(),
        family: Family::FractionalMax(f.with_name(name)),
        set,
        x0: Point::filled(n, 5.0),
        config: fractional_config(n, 1e-5),
        provenance: Provenance::Catalog,
        spec,
    }
}

/// Two-dimensional fractional-max instance on `[0, 5]²` from `(5, 5)`.
pub fn example_4_2_small() -> ProblemInstance {
    let e2 = Matrix::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).expect("2x2");
    catalog_fractional(
        "example_4_2_small",
        example_4_2_bifunction(e2, 2),
        ProblemSpec::FractionalSmall,
    )
}

/// Ten-dimensional fractional-max instance on `[0, 5]¹⁰` from `5·1`.
pub fn example_4_2_ten() -> ProblemInstance {
    let e2 = Matrix::from_rows(E2_TEN.iter().map(|r| r.to_vec()).collect()).expect("10x10");
    catalog_fractional(
        "example_4_2_ten",
        example_4_2_bifunction(e2, 10),
        ProblemSpec::FractionalTen,
    )
}

/// `f(x, y) = y³ − x³` on `[−1, 0]`: the origin is a ρ-quasi-solution for
/// small ρ without solving the problem.
pub fn counterexample_cubic() -> ProblemInstance {
    ProblemInstance {
        name: "counterexample_cubic".into(),
        family: Family::Cubic(CubicBifunction),
        set: FeasibleSet::cube(1, -1.0, 0.0).expect("valid box"),
        x0: Point::filled(1, -0.5),
        config: SolverConfig::for_dim(1),
        provenance: Provenance::Catalog,
        spec: ProblemSpec::Cubic,
    }
}

/// Floor applied to random `d_i`; smaller draws are redrawn from `(0.1, 5]`.
pub const RANDOM_D_FLOOR: f64 = 0.1;

/// Random fractional-max instance with `m = n`, every coefficient uniform
/// on `[0, 5]`, on `[0, 5]ⁿ` from `5·1`.
pub fn random_fractional(n: usize, seed: u64) -> Result<ProblemInstance> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let matrix = |rng: &mut ChaCha8Rng| -> Matrix {
        Matrix::from_rows(
            (0..n)
                .map(|_| (0..n).map(|_| rng.gen_range(0.0..=5.0)).collect())
                .collect(),
        )
        .expect("n x n")
    };
    let a1 = matrix(&mut rng);
    let a2 = matrix(&mut rng);
    let e1 = matrix(&mut rng);
    let e2 = matrix(&mut rng);
    let vector = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(0.0..=5.0)).collect()
    };
    let b1 = vector(&mut rng);
    let b2 = vector(&mut rng);
    let c1 = vector(&mut rng);
    let c2 = vector(&mut rng);
    let f1 = vector(&mut rng);
    let f2 = vector(&mut rng);
    let scalar = |rng: &mut ChaCha8Rng| -> f64 {
        let d = rng.gen_range(0.0..=5.0);
        if d < RANDOM_D_FLOOR {
            // (0.1, 5]
            5.0 - rng.gen_range(0.0..5.0 - RANDOM_D_FLOOR)
        } else {
            d
        }
    };
    let d1 = scalar(&mut rng);
    let d2 = scalar(&mut rng);

    let name = format!("random(n={n}, seed={seed})");
    let f = FractionalMaxBifunction::new(vec![
        FractionalBranch {
            a: a1,
            b: b1,
            e: e1,
            f: f1,
            c: c1,
            d: d1,
        },
        FractionalBranch {
            a: a2,
            b: b2,
            e: e2,
            f: f2,
            c: c2,
            d: d2,
        },
    ])?
    .with_name(name.clone());
    let set = FeasibleSet::cube(n, 0.0, 5.0)?;
    let (lo, hi) = set.bounding_box();
    f.validate_on_box(&lo, &hi)?;

    let mut config = fractional_config(n, 1e-8);
    config.max_iters = 1000;
    config.sigma = SigmaSchedule::Harmonic(n as f64);
    config.rho = RhoSchedule::Constant(1.0);
    config.seed = seed;
    Ok(ProblemInstance {
        name,
        family: Family::FractionalMax(f),
        set,
        x0: Point::filled(n, 5.0),
        config,
        provenance: Provenance::Random { seed },
        spec: ProblemSpec::Random { n, seed },
    })
}

fn fractional_from_spec(spec: &FractionalSpec) -> Result<ProblemInstance> {
    let f = FractionalMaxBifunction::new(spec.branches.clone())?;
    let n = f.dim();
    let lo = Point::new(spec.lo.clone())?;
    let hi = Point::new(spec.hi.clone())?;
    lo.check_dim(n)?;
    let set = FeasibleSet::boxed(lo.clone(), hi.clone())?;
    f.validate_on_box(&lo, &hi)?;
    let x0 = Point::new(spec.x0.clone())?;
    x0.check_dim(n)?;
    let name = spec.name.clone().unwrap_or_else(|| "fractional".into());
    Ok(ProblemInstance {
        name: name.clone(),
        family: Family::FractionalMax(f.with_name(name)),
        set,
        x0,
        config: fractional_config(n, 1e-5),
        provenance: Provenance::Catalog,
        spec: ProblemSpec::Fractional(spec.clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_4_1_defaults() {
        let inst = example_4_1(2.0, 10.0).unwrap();
        assert_eq!(inst.x0[0], 5.0);
        assert_eq!(inst.config.alpha, 0.5);
        assert_eq!(inst.config.theta, 0.5);
        assert_eq!(inst.config.tol_xy, 1e-3);
        assert_eq!(example_4_1(1.0, 1.0).unwrap().x0[0], 0.5);
        assert!(matches!(example_4_1(0.0, 1.0), Err(Error::InvalidArgument(_))));
        assert!(example_4_1(1.0, -1.0).is_err());
    }

    #[test]
    fn small_fractional_denominators() {
        let inst = example_4_2_small();
        let Family::FractionalMax(f) = &inst.family else { panic!() };
        let c2 = &f.branches()[1];
        let den: f64 = c2.c.iter().zip(inst.x0.iter()).map(|(c, x)| c * x).sum::<f64>() + c2.d;
        assert_eq!(den, 12.0);
        assert_eq!(inst.bifunction().eval(&inst.x0, &inst.x0).unwrap(), 0.0);
        assert_eq!(inst.config.theta, 0.8);
        assert_eq!(inst.config.tol_xy, 1e-5);
    }

    #[test]
    fn ten_dimensional_instance() {
        let inst = example_4_2_ten();
        assert_eq!(inst.dim(), 10);
        let Family::FractionalMax(f) = &inst.family else { panic!() };
        assert_eq!(f.branches()[1].e.row(0).iter().sum::<f64>(), 26.0);
        assert_eq!(inst.bifunction().eval(&inst.x0, &inst.x0).unwrap(), 0.0);
    }

    #[test]
    fn cubic_instance() {
        let inst = counterexample_cubic();
        let m1 = Point::scalar(-1.0).unwrap();
        assert_eq!(inst.bifunction().eval(&m1, &m1).unwrap(), 0.0);
        assert!(inst.set.contains(&inst.x0, 0.0).unwrap());
    }

    #[test]
    fn random_instances_are_seeded() {
        let a = random_fractional(10, 1).unwrap();
        let b = random_fractional(10, 2).unwrap();
        let a2 = random_fractional(10, 1).unwrap();
        assert_ne!(a.to_spec(), b.to_spec());
        assert_eq!(
            serde_json::to_string(&a.to_spec()).unwrap(),
            serde_json::to_string(&a2.to_spec()).unwrap()
        );
        assert_eq!(a.config.max_iters, 1000);
        assert!(random_fractional(0, 1).is_err());
    }

    #[test]
    fn random_denominators_bounded_below() {
        for seed in 0..50 {
            let inst = random_fractional(5, seed).unwrap();
            let Family::FractionalMax(f) = &inst.family else { panic!() };
            let (lo, hi) = inst.set.bounding_box();
            assert!(f.min_denominator_on_box(&lo, &hi) >= RANDOM_D_FLOOR);
        }
    }

    #[test]
    fn spec_round_trip_through_json() {
        let inst = random_fractional(3, 9).unwrap();
        let json = serde_json::to_string(&inst.to_spec()).unwrap();
        let spec: ProblemSpec = serde_json::from_str(&json).unwrap();
        let rebuilt = spec.build().unwrap();
        assert_eq!(rebuilt.family, inst.family);
        assert_eq!(rebuilt.x0, inst.x0);
    }

    #[test]
    fn problem_spec_parsing() {
        let s: ProblemSpec = serde_json::from_str(r#"{"kind":"example_4_1"}"#).unwrap();
        assert_eq!(
            s,
            ProblemSpec::RootQuad {
                r: 2.0,
                delta: 10.0,
                x0: None
            }
        );
        let s: ProblemSpec =
            serde_json::from_str(r#"{"kind":"example_4_1","r":1,"delta":4,"x0":1.5}"#).unwrap();
        assert_eq!(s.build().unwrap().x0[0], 1.5);
        assert!(serde_json::from_str::<ProblemSpec>(r#"{"kind":"example_4_1","bogus":1}"#).is_err());
        assert!(serde_json::from_str::<ProblemSpec>(r#"{"kind":"nope"}"#).is_err());
        let s: ProblemSpec = serde_json::from_str(r#"{"kind":"random","n":4,"seed":3}"#).unwrap();
        assert_eq!(s.build().unwrap().dim(), 4);
        let bad: ProblemSpec =
            serde_json::from_str(r#"{"kind":"example_4_1","delta":4,"x0":7}"#).unwrap();
        assert!(bad.build().is_err());
    }
}
