//! Linear operators `L[u] = c0 u + c1 . grad u + c2 lap u`, benchmark problems and
//! the residual coefficient fields induced by a boundary function.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use serde::Serialize;

use crate::boundary::{BoundaryPair, FieldEval};
use crate::error::{Error, Result};

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type JetFn = Arc<dyn Fn(&[f64]) -> FieldEval + Send + Sync>;

#[derive(Clone)]
pub enum ScalarField {
    Const(f64),
    Field(ScalarFn),
}

impl ScalarField {
    #[inline]
    pub fn at(&self, x: &[f64]) -> f64 {
        match self {
            ScalarField::Const(c) => *c,
            ScalarField::Field(f) => f(x),
        }
    }
}

#[derive(Clone)]
pub enum VectorField {
    Const(Vec<f64>),
    Field(VectorFn),
}

impl VectorField {
    pub fn at(&self, x: &[f64]) -> Vec<f64> {
        match self {
            VectorField::Const(c) => c.clone(),
            VectorField::Field(f) => f(x),
        }
    }
}

#[derive(Clone)]
pub struct LinearOperator {
    pub dim: usize,
    pub c0: ScalarField,
    pub c1: VectorField,
    pub c2: ScalarField,
}

impl LinearOperator {
    pub fn constant(dim: usize, c0: f64, c1: Vec<f64>, c2: f64) -> Result<Self> {
        if c1.len() != dim {
            return Err(Error::Config(format!("first-order coefficient has {} entries for dimension {dim}", c1.len())));
        }
        Ok(Self {
            dim,
            c0: ScalarField::Const(c0),
            c1: VectorField::Const(c1),
            c2: ScalarField::Const(c2),
        })
    }

    /// `L[u](x)` from the value, gradient and Laplacian of `u` at `x`.
    pub fn apply(&self, x: &[f64], u: &FieldEval) -> f64 {
        let c1 = self.c1.at(x);
        self.c0.at(x) * u.value + c1.iter().zip(&u.grad).map(|(a, b)| a * b).sum::<f64>() + self.c2.at(x) * u.lap
    }
}

/// Dirichlet problem `L[u] = f` on `[0,1]^dim`, `u = g` on the boundary.
#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub dim: usize,
    pub op: LinearOperator,
    pub source: ScalarFn,
    pub exact: Option<JetFn>,
    pub boundary_data: ScalarFn,
    /// Named constants echoed into output headers.
    pub constants: Vec<(String, f64)>,
}

pub const BENCHMARKS: [&str; 4] = ["poisson1d_sin", "diffusion1d_sincos", "diffusion2d", "diffusion3d"];

/// Scalar type the benchmark solutions are written against.
pub trait Real: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self> {
    fn cst(c: f64) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
}

impl Real for f64 {
    fn cst(c: f64) -> Self {
        c
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
}

/// Second-order jet `(f, f', f'')` along one direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual2 {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Add for Dual2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual2 {
            v: self.v + o.v,
            d1: self.d1 + o.d1,
            d2: self.d2 + o.d2,
        }
    }
}

impl Sub for Dual2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Dual2 {
            v: self.v - o.v,
            d1: self.d1 - o.d1,
            d2: self.d2 - o.d2,
        }
    }
}

impl Mul for Dual2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Dual2 {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        }
    }
}

impl Neg for Dual2 {
    type Output = Self;
    fn neg(self) -> Self {
        Dual2 {
            v: -self.v,
            d1: -self.d1,
            d2: -self.d2,
        }
    }
}

impl Real for Dual2 {
    fn cst(c: f64) -> Self {
        Dual2 { v: c, d1: 0.0, d2: 0.0 }
    }
    fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        Dual2 {
            v: s,
            d1: c * self.d1,
            d2: -s * self.d1 * self.d1 + c * self.d2,
        }
    }
    fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        Dual2 {
            v: c,
            d1: -s * self.d1,
            d2: -c * self.d1 * self.d1 - s * self.d2,
        }
    }
}

/// Value, gradient and Laplacian of `f` at `x` by one jet per axis.
pub fn jet_eval(f: impl Fn(&[Dual2]) -> Dual2, x: &[f64]) -> FieldEval {
    let d = x.len();
    let mut grad = vec![0.0; d];
    let mut lap = 0.0;
    let mut value = 0.0;
    for k in 0..d {
        let seeded: Vec<Dual2> = x
            .iter()
            .enumerate()
            .map(|(j, &xj)| Dual2 {
                v: xj,
                d1: if j == k { 1.0 } else { 0.0 },
                d2: 0.0,
            })
            .collect();
        let r = f(&seeded);
        value = r.v;
        grad[k] = r.d1;
        lap += r.d2;
    }
    FieldEval { value, grad, lap }
}

fn sin_pi<T: Real>(x: T) -> T {
    (T::cst(PI) * x).sin()
}

fn poisson_exact<T: Real>(x: &[T]) -> T {
    -sin_pi(x[0])
}

fn sincos_exact<T: Real>(x: &[T]) -> T {
    sin_pi(x[0]) * (T::cst(2.0 * PI) * x[0]).cos()
}

fn sin_product<T: Real>(x: &[T]) -> T {
    x.iter().skip(1).fold(sin_pi(x[0]), |acc, &xi| acc * sin_pi(xi))
}

fn problem_from_exact(
    name: &str,
    op: LinearOperator,
    exact: fn(&[Dual2]) -> Dual2,
    source: fn(&[f64]) -> f64,
    constants: Vec<(String, f64)>,
) -> Problem {
    let dim = op.dim;
    let exact_jet: JetFn = Arc::new(move |x: &[f64]| jet_eval(exact, x));
    Problem {
        name: name.to_string(),
        dim,
        op,
        source: Arc::new(source),
        exact: Some(exact_jet),
        boundary_data: Arc::new(|_: &[f64]| 0.0),
        constants,
    }
}

fn sin_product_f64(x: &[f64]) -> f64 {
    x.iter().map(|&xi| (PI * xi).sin()).product()
}

/// One of [`BENCHMARKS`], with closed-form sources gated against the exact solutions.
pub fn benchmark(name: &str) -> Result<Problem> {
    let p = match name {
        "poisson1d_sin" => problem_from_exact(
            name,
            LinearOperator::constant(1, 0.0, vec![0.0], 1.0)?,
            poisson_exact::<Dual2>,
            |x| PI * PI * (PI * x[0]).sin(),
            vec![],
        ),
        "diffusion1d_sincos" => problem_from_exact(
            name,
            LinearOperator::constant(1, 0.0, vec![0.0], -1.0)?,
            sincos_exact::<Dual2>,
            |x| 0.5 * PI * PI * (9.0 * (3.0 * PI * x[0]).sin() - (PI * x[0]).sin()),
            vec![],
        ),
        "diffusion2d" => problem_from_exact(
            name,
            LinearOperator::constant(2, 1.0, vec![0.0; 2], -1.0)?,
            sin_product::<Dual2>,
            |x| (2.0 * PI * PI + 1.0) * sin_product_f64(x),
            vec![],
        ),
        "diffusion3d" => {
            let (diff, a) = (1.0, 1.0);
            problem_from_exact(
                name,
                LinearOperator::constant(3, a, vec![0.0; 3], -diff)?,
                sin_product::<Dual2>,
                |x| (3.0 * PI * PI + 1.0) * sin_product_f64(x),
                vec![("D".into(), diff), ("a".into(), a)],
            )
        }
        _ => return Err(Error::Config(format!("unknown benchmark {name:?}"))),
    };
    let gate = self_check(&p)?;
    if gate > 1e-8 {
        return Err(Error::Config(format!("benchmark {name} fails its exact-solution check ({gate:e})")));
    }
    Ok(p)
}

/// Deterministic low-discrepancy points in `[0.01, 0.99]^dim`.
pub fn probe_points(dim: usize, count: usize) -> Vec<Vec<f64>> {
    const ALPHAS: [f64; 3] = [0.618_033_988_749_894_9, 0.754_877_666_246_692_7, 0.569_840_290_998_053_3];
    (1..=count)
        .map(|i| (0..dim).map(|k| 0.01 + 0.98 * (i as f64 * ALPHAS[k]).fract()).collect())
        .collect()
}

/// `max |L[u] - f|` over 100 interior probe points when an exact solution is present.
pub fn self_check(problem: &Problem) -> Result<f64> {
    let exact = problem
        .exact
        .as_ref()
        .ok_or_else(|| Error::Config(format!("problem {} has no exact solution", problem.name)))?;
    Ok(probe_points(problem.dim, 100)
        .iter()
        .map(|x| (problem.op.apply(x, &exact(x)) - (problem.source)(x)).abs())
        .fold(0.0, f64::max))
}

/// Per-point coefficients of `N`, `grad N` and `lap N` in the residual of `u = A + B N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientField {
    pub alpha: Vec<f64>,
    pub beta: Vec<Vec<f64>>,
    pub gamma: Vec<f64>,
}

impl CoefficientField {
    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }
}

/// `alpha = c0 B + c1 . grad B + c2 lap B`, `beta = c1 B + 2 c2 grad B`, `gamma = c2 B`.
pub fn coefficients(op: &LinearOperator, pair: &BoundaryPair, points: &[Vec<f64>]) -> Result<CoefficientField> {
    if op.dim != pair.dim {
        return Err(Error::Shape(format!("operator is {}-dimensional, boundary pair {}", op.dim, pair.dim)));
    }
    let mut alpha = Vec::with_capacity(points.len());
    let mut beta = Vec::with_capacity(points.len());
    let mut gamma = Vec::with_capacity(points.len());
    for (index, x) in points.iter().enumerate() {
        if x.len() != op.dim {
            return Err(Error::Shape(format!("point {index} has dimension {}", x.len())));
        }
        let b = pair.eval(x);
        let (c0, c1, c2) = (op.c0.at(x), op.c1.at(x), op.c2.at(x));
        let a = c0 * b.value + c1.iter().zip(&b.grad).map(|(p, q)| p * q).sum::<f64>() + c2 * b.lap;
        let bv: Vec<f64> = c1.iter().zip(&b.grad).map(|(p, q)| p * b.value + 2.0 * c2 * q).collect();
        let g = c2 * b.value;
        if !a.is_finite() || !g.is_finite() || bv.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularCoefficient { index });
        }
        alpha.push(a);
        beta.push(bv);
        gamma.push(g);
    }
    Ok(CoefficientField { alpha, beta, gamma })
}

/// `R_i = L[u](x_i) - f(x_i)`.
pub fn residual(problem: &Problem, points: &[Vec<f64>], trial: &[FieldEval]) -> Result<Vec<f64>> {
    if points.len() != trial.len() {
        return Err(Error::Shape(format!("{} points but {} trial evaluations", points.len(), trial.len())));
    }
    Ok(points
        .iter()
        .zip(trial)
        .map(|(x, u)| problem.op.apply(x, u) - (problem.source)(x))
        .collect())
}
