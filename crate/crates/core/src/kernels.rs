//! Trial functions and the tangent kernels `K_n`, `K_t`, `K_r`.
//!
//! `K_t` and `K_r` each have two constructions. The direct route forms the
//! Gram matrix of the per-point Jacobian rows of `u` or of the residual. The
//! composed route builds `K_t = diag(B) K_n diag(B)` and assembles `K_r` from
//! the component kernels of `N`, `grad N` and `lap N` weighted by the
//! coefficient fields `alpha`, `beta`, `gamma`.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::boundary::{BoundaryPair, FieldEval};
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::net::{GramMethod, NetworkParams, Order, Tape};
use crate::pde::{coefficients, CoefficientField, Problem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Path {
    #[default]
    Direct,
    Composed,
}

impl Path {
    pub fn name(self) -> &'static str {
        match self {
            Path::Direct => "direct",
            Path::Composed => "composed",
        }
    }
}

/// `u = A + B N`.
#[derive(Debug, Clone)]
pub struct TrialFunction {
    pub pair: BoundaryPair,
    pub params: NetworkParams,
}

/// Trial values and derivatives with the parameter Jacobian of `u`.
#[derive(Debug, Clone)]
pub struct TrialEval {
    pub u: Vec<FieldEval>,
    /// `n x P`.
    pub jac: Array2<f64>,
}

fn check_dims(params: &NetworkParams, pair: &BoundaryPair) -> Result<()> {
    if params.input_dim() != pair.dim {
        return Err(Error::Shape(format!(
            "network takes {} inputs but the boundary pair is {}-dimensional",
            params.input_dim(),
            pair.dim
        )));
    }
    Ok(())
}

/// Combines network derivatives with `A` and `B` by the product rule.
pub fn compose_trial(pair: &BoundaryPair, x: &[f64], n: f64, grad_n: &[f64], lap_n: f64) -> FieldEval {
    let a = pair.eval_offset(x);
    let b = pair.eval(x);
    let grad = (0..x.len())
        .map(|k| a.grad[k] + n * b.grad[k] + b.value * grad_n[k])
        .collect();
    let cross: f64 = b.grad.iter().zip(grad_n).map(|(p, q)| p * q).sum();
    FieldEval {
        value: a.value + b.value * n,
        grad,
        lap: a.lap + n * b.lap + 2.0 * cross + b.value * lap_n,
    }
}

fn trial_from_tape(pair: &BoundaryPair, tape: &Tape, points: &[Vec<f64>]) -> Vec<FieldEval> {
    points
        .iter()
        .enumerate()
        .map(|(i, x)| compose_trial(pair, x, tape.value(i), &tape.grad(i), tape.lap(i)))
        .collect()
}

/// Trial values, gradients and Laplacians only.
pub fn trial_values(trial: &TrialFunction, points: &[Vec<f64>]) -> Result<Vec<FieldEval>> {
    check_dims(&trial.params, &trial.pair)?;
    if points.is_empty() {
        return Ok(Vec::new());
    }
    let tape = Tape::forward(&trial.params, points, Order::Laplacian)?;
    Ok(trial_from_tape(&trial.pair, &tape, points))
}

/// Trial values of `u` alone (no input derivatives), usable with any activation.
pub fn trial_point_values(trial: &TrialFunction, points: &[Vec<f64>]) -> Result<Vec<f64>> {
    check_dims(&trial.params, &trial.pair)?;
    if points.is_empty() {
        return Ok(Vec::new());
    }
    let tape = Tape::forward(&trial.params, points, Order::Value)?;
    Ok(points
        .iter()
        .enumerate()
        .map(|(i, x)| trial.pair.eval_offset(x).value + trial.pair.value(x) * tape.value(i))
        .collect())
}

pub fn trial_eval(trial: &TrialFunction, points: &[Vec<f64>]) -> Result<TrialEval> {
    check_dims(&trial.params, &trial.pair)?;
    if points.is_empty() {
        return Ok(TrialEval {
            u: Vec::new(),
            jac: Array2::zeros((0, trial.params.n_params())),
        });
    }
    let tape = Tape::forward(&trial.params, points, Order::Laplacian)?;
    let mut seed = Array2::zeros((points.len(), tape.components()));
    for (i, x) in points.iter().enumerate() {
        seed[[i, 0]] = trial.pair.value(x);
    }
    let jac = tape.jacobian(&tape.adjoints(&seed));
    Ok(TrialEval {
        u: trial_from_tape(&trial.pair, &tape, points),
        jac,
    })
}

fn nonempty(points: &[Vec<f64>]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::Shape("kernel assembly needs at least one point".into()));
    }
    Ok(())
}

pub fn assemble_kn(params: &NetworkParams, points: &[Vec<f64>]) -> Result<SymMatrix> {
    assemble_kn_with(params, points, GramMethod::default())
}

pub fn assemble_kn_with(params: &NetworkParams, points: &[Vec<f64>], method: GramMethod) -> Result<SymMatrix> {
    nonempty(points)?;
    let tape = Tape::forward(params, points, Order::Value)?;
    let seed = Array2::ones((points.len(), 1));
    Ok(tape.gram(&tape.adjoints(&seed), method))
}

pub fn assemble_kt(params: &NetworkParams, pair: &BoundaryPair, points: &[Vec<f64>], path: Path) -> Result<SymMatrix> {
    assemble_kt_with(params, pair, points, path, GramMethod::default())
}

pub fn assemble_kt_with(
    params: &NetworkParams,
    pair: &BoundaryPair,
    points: &[Vec<f64>],
    path: Path,
    method: GramMethod,
) -> Result<SymMatrix> {
    check_dims(params, pair)?;
    nonempty(points)?;
    let b: Vec<f64> = points.iter().map(|x| pair.value(x)).collect();
    match path {
        Path::Composed => assemble_kn_with(params, points, method)?.congruence_diag(&b),
        Path::Direct => {
            let tape = Tape::forward(params, points, Order::Value)?;
            let seed = Array2::from_shape_vec((points.len(), 1), b).expect("column seed");
            Ok(tape.gram(&tape.adjoints(&seed), method))
        }
    }
}

/// Cross kernels `J_X J_Y^T` between the value (`v`), gradient axes (`g_k`) and
/// Laplacian (`l`) Jacobians of `N`.
#[derive(Debug, Clone)]
pub struct ComponentKernels {
    pub dim: usize,
    /// `K_N`
    pub vv: Array2<f64>,
    /// `K_{N, d_k N}`
    pub vg: Vec<Array2<f64>>,
    /// `K_{d_k N, d_l N}`, indexed `[k][l]`.
    pub gg: Vec<Vec<Array2<f64>>>,
    /// `K_{N, lap N}`
    pub vl: Array2<f64>,
    /// `K_{d_k N, lap N}`
    pub gl: Vec<Array2<f64>>,
    /// `K_{lap N}`
    pub ll: Array2<f64>,
}

pub fn component_kernels(params: &NetworkParams, points: &[Vec<f64>], method: GramMethod) -> Result<ComponentKernels> {
    nonempty(points)?;
    let tape = Tape::forward(params, points, Order::Laplacian)?;
    let (n, nc, d) = (points.len(), tape.components(), params.input_dim());
    let adj: Vec<_> = (0..nc)
        .map(|c| {
            let mut seed = Array2::zeros((n, nc));
            seed.column_mut(c).fill(1.0);
            tape.adjoints(&seed)
        })
        .collect();
    let g = |a: usize, b: usize| tape.cross_gram(&adj[a], &adj[b], method);
    let mut gg: Vec<Vec<Array2<f64>>> = vec![Vec::with_capacity(d); d];
    for k in 0..d {
        for l in 0..d {
            let m = if l < k { gg[l][k].clone().reversed_axes() } else { g(1 + k, 1 + l) };
            gg[k].push(m);
        }
    }
    for row in gg.iter_mut() {
        for m in row.iter_mut() {
            *m = m.as_standard_layout().into_owned();
        }
    }
    Ok(ComponentKernels {
        dim: d,
        vv: g(0, 0),
        vg: (0..d).map(|k| g(0, 1 + k)).collect(),
        gg,
        vl: g(0, 1 + d),
        gl: (0..d).map(|k| g(1 + k, 1 + d)).collect(),
        ll: g(1 + d, 1 + d),
    })
}

/// The nine weighted blocks of `K_r`: `aa, ab, ag, ba, bb, bg, ga, gb, gg`
/// for `a = alpha`, `b = beta`, `g = gamma`.
#[derive(Debug, Clone)]
pub struct ResidualKernelTerms {
    pub terms: Vec<(&'static str, Array2<f64>)>,
}

impl ResidualKernelTerms {
    pub fn total(&self) -> SymMatrix {
        let mut sum = self.terms[0].1.clone();
        for (_, t) in &self.terms[1..] {
            sum += t;
        }
        let n = sum.nrows();
        SymMatrix::from_fn(n, |i, j| 0.5 * (sum[[i, j]] + sum[[j, i]]))
    }
}

fn weighted(left: &[f64], m: &Array2<f64>, right: &[f64]) -> Array2<f64> {
    Array2::from_shape_fn(m.dim(), |(i, j)| left[i] * m[[i, j]] * right[j])
}

pub fn residual_terms(ck: &ComponentKernels, coef: &CoefficientField) -> ResidualKernelTerms {
    let d = ck.dim;
    let a = &coef.alpha;
    let g = &coef.gamma;
    let beta_k: Vec<Vec<f64>> = (0..d).map(|k| coef.beta.iter().map(|b| b[k]).collect()).collect();
    let zeros = || Array2::zeros(ck.vv.dim());
    let mut ab = zeros();
    let mut bb = zeros();
    let mut bg = zeros();
    for k in 0..d {
        ab += &weighted(a, &ck.vg[k], &beta_k[k]);
        bg += &weighted(&beta_k[k], &ck.gl[k], g);
        for l in 0..d {
            bb += &weighted(&beta_k[k], &ck.gg[k][l], &beta_k[l]);
        }
    }
    let ag = weighted(a, &ck.vl, g);
    let t = |m: &Array2<f64>| m.t().as_standard_layout().into_owned();
    ResidualKernelTerms {
        terms: vec![
            ("alpha_alpha", weighted(a, &ck.vv, a)),
            ("alpha_beta", ab.clone()),
            ("alpha_gamma", ag.clone()),
            ("beta_alpha", t(&ab)),
            ("beta_beta", bb),
            ("beta_gamma", bg.clone()),
            ("gamma_alpha", t(&ag)),
            ("gamma_beta", t(&bg)),
            ("gamma_gamma", weighted(g, &ck.ll, g)),
        ],
    }
}

/// Residual-Jacobian seed `(alpha, beta, gamma)` per point, scaled row-wise by `w`.
pub(crate) fn residual_seed(coef: &CoefficientField, w: Option<&[f64]>) -> Array2<f64> {
    let n = coef.len();
    let d = coef.beta.first().map_or(0, |b| b.len());
    let mut seed = Array2::zeros((n, d + 2));
    for i in 0..n {
        let s = w.map_or(1.0, |w| w[i]);
        seed[[i, 0]] = s * coef.alpha[i];
        for k in 0..d {
            seed[[i, 1 + k]] = s * coef.beta[i][k];
        }
        seed[[i, 1 + d]] = s * coef.gamma[i];
    }
    seed
}

pub fn assemble_kr(
    params: &NetworkParams,
    problem: &Problem,
    pair: &BoundaryPair,
    points: &[Vec<f64>],
    path: Path,
) -> Result<SymMatrix> {
    assemble_kr_with(params, problem, pair, points, path, GramMethod::default())
}

pub fn assemble_kr_with(
    params: &NetworkParams,
    problem: &Problem,
    pair: &BoundaryPair,
    points: &[Vec<f64>],
    path: Path,
    method: GramMethod,
) -> Result<SymMatrix> {
    check_dims(params, pair)?;
    nonempty(points)?;
    if !params.activation.is_smooth() {
        return Err(Error::UnsupportedActivation(params.activation));
    }
    let coef = coefficients(&problem.op, pair, points)?;
    match path {
        Path::Direct => {
            let tape = Tape::forward(params, points, Order::Laplacian)?;
            let adj = tape.adjoints(&residual_seed(&coef, None));
            Ok(tape.gram(&adj, method))
        }
        Path::Composed => {
            let ck = component_kernels(params, points, method)?;
            Ok(residual_terms(&ck, &coef).total())
        }
    }
}

/// `K_n`, `K_t` and `K_r` over one point set.
#[derive(Debug, Clone)]
pub struct KernelBundle {
    pub kn: SymMatrix,
    pub kt: SymMatrix,
    /// Absent for activations without second derivatives.
    pub kr: Option<SymMatrix>,
    pub points: Vec<Vec<f64>>,
    pub path: Path,
}

pub fn assemble_bundle(
    params: &NetworkParams,
    problem: &Problem,
    pair: &BoundaryPair,
    points: &[Vec<f64>],
    path: Path,
) -> Result<KernelBundle> {
    let kn = assemble_kn(params, points)?;
    let kt = match path {
        Path::Composed => kn.congruence_diag(&points.iter().map(|x| pair.value(x)).collect::<Vec<_>>())?,
        Path::Direct => assemble_kt(params, pair, points, path)?,
    };
    let kr = if params.activation.is_smooth() {
        Some(assemble_kr(params, problem, pair, points, path)?)
    } else {
        None
    };
    Ok(KernelBundle {
        kn,
        kt,
        kr,
        points: points.to_vec(),
        path,
    })
}
