//! First-order and quasi-Newton optimizers over a flat parameter vector.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::Result;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Plain gradient descent, `x <- x - lr g`.
#[derive(Debug, Clone, Copy)]
pub struct Sgd {
    pub lr: f64,
}

impl Sgd {
    pub fn step(&self, x: &mut [f64], g: &[f64]) {
        for (xi, gi) in x.iter_mut().zip(g) {
            *xi -= self.lr * gi;
        }
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(lr: f64, n: usize) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, x: &mut [f64], g: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..x.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g[i] * g[i];
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            x[i] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LbfgsStatus {
    /// Gradient max-norm fell below `2^-52`.
    Converged,
    MaxIterations,
    LineSearchFailed,
}

impl LbfgsStatus {
    pub fn name(self) -> &'static str {
        match self {
            LbfgsStatus::Converged => "converged",
            LbfgsStatus::MaxIterations => "max_iterations",
            LbfgsStatus::LineSearchFailed => "line_search_failed",
        }
    }
}

/// Limited-memory BFGS with a strong-Wolfe line search.
#[derive(Debug, Clone)]
pub struct Lbfgs {
    pub memory: usize,
    pub c1: f64,
    pub c2: f64,
    pub max_line_search: usize,
    pub grad_tol: f64,
    /// Scale of the very first trial step.
    pub initial_step: f64,
}

impl Default for Lbfgs {
    fn default() -> Self {
        Lbfgs {
            memory: 10,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 25,
            grad_tol: f64::EPSILON,
            initial_step: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub status: LbfgsStatus,
}

struct Point {
    a: f64,
    f: f64,
    d: f64,
    x: Vec<f64>,
    g: Vec<f64>,
}

/// Minimizer of the cubic through `(a, fa, da)` and `(b, fb, db)`, if it exists.
fn cubic_min(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> Option<f64> {
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    if !(disc >= 0.0) {
        return None;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
    t.is_finite().then_some(t)
}

impl Lbfgs {
    /// Runs until convergence, `max_iter` iterations, or a failed line search.
    ///
    /// `after_iter` sees the iteration count and the accepted point; returning an
    /// error aborts the run.
    pub fn minimize<F, C>(&self, mut fg: F, x0: &[f64], max_iter: usize, mut after_iter: C) -> Result<LbfgsOutcome>
    where
        F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
        C: FnMut(usize, &[f64], f64) -> Result<()>,
    {
        let mut x = x0.to_vec();
        let (mut f, mut g) = fg(&x)?;
        let mut evaluations = 1;
        let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
        let mut status = LbfgsStatus::MaxIterations;
        let mut iterations = 0;
        while iterations < max_iter {
            if !(inf_norm(&g) >= self.grad_tol) {
                status = LbfgsStatus::Converged;
                break;
            }
            let dir = self.direction(&g, &hist);
            let mut dphi0 = dot(&g, &dir);
            let mut dir = dir;
            if !(dphi0 < 0.0) {
                hist.clear();
                dir = g.iter().map(|v| -v).collect();
                dphi0 = dot(&g, &dir);
            }
            let a0 = if hist.is_empty() && iterations == 0 {
                self.initial_step * (1.0 / g.iter().map(|v| v.abs()).sum::<f64>()).min(1.0)
            } else {
                1.0
            };
            let found = self.line_search(&mut fg, &x, f, dphi0, &dir, a0, &mut evaluations)?;
            let Some(p) = found else {
                status = LbfgsStatus::LineSearchFailed;
                break;
            };
            let s: Vec<f64> = p.x.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = p.g.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-10 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
                if hist.len() == self.memory {
                    hist.pop_front();
                }
                hist.push_back((s, y, 1.0 / sy));
            }
            x = p.x;
            f = p.f;
            g = p.g;
            iterations += 1;
            after_iter(iterations, &x, f)?;
        }
        if status == LbfgsStatus::MaxIterations && !(inf_norm(&g) >= self.grad_tol) {
            status = LbfgsStatus::Converged;
        }
        Ok(LbfgsOutcome {
            x,
            f,
            grad: g,
            iterations,
            evaluations,
            status,
        })
    }

    fn direction(&self, g: &[f64], hist: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
        let mut q: Vec<f64> = g.to_vec();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = hist.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y, rho), a) in hist.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        q.iter_mut().for_each(|v| *v = -*v);
        q
    }

    #[allow(clippy::too_many_arguments)]
    fn line_search<F>(
        &self,
        fg: &mut F,
        x: &[f64],
        f0: f64,
        dphi0: f64,
        dir: &[f64],
        a_init: f64,
        evaluations: &mut usize,
    ) -> Result<Option<Point>>
    where
        F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    {
        let mut eval = |a: f64| -> Result<Point> {
            let xa: Vec<f64> = x.iter().zip(dir).map(|(xi, di)| xi + a * di).collect();
            let (f, g) = fg(&xa)?;
            *evaluations += 1;
            let d = dot(&g, dir);
            Ok(Point { a, f, d, x: xa, g })
        };
        let armijo = |p: &Point| p.f <= f0 + self.c1 * p.a * dphi0;
        let curvature = |p: &Point| p.d.abs() <= -self.c2 * dphi0;

        let mut prev = Point {
            a: 0.0,
            f: f0,
            d: dphi0,
            x: x.to_vec(),
            g: Vec::new(),
        };
        let mut a = a_init;
        let mut budget = self.max_line_search;
        let (mut lo, mut hi) = 'expand: {
            for i in 0..self.max_line_search {
                budget -= 1;
                let p = eval(a)?;
                if !p.f.is_finite() || !armijo(&p) || (i > 0 && p.f >= prev.f) {
                    break 'expand (prev, p);
                }
                if curvature(&p) {
                    return Ok(Some(p));
                }
                if p.d >= 0.0 {
                    break 'expand (p, prev);
                }
                a = 2.0 * p.a;
                prev = p;
            }
            return Ok((prev.a > 0.0 && prev.f < f0).then_some(prev));
        };
        for _ in 0..budget.max(10) {
            let (l, h) = (lo.a.min(hi.a), lo.a.max(hi.a));
            let w = h - l;
            if !(w > f64::EPSILON * h.max(f64::MIN_POSITIVE)) {
                break;
            }
            let mut t = if hi.f.is_finite() {
                cubic_min(lo.a, lo.f, lo.d, hi.a, hi.f, hi.d).unwrap_or(0.5 * (l + h))
            } else {
                0.5 * (l + h)
            };
            if !(t > l + 0.1 * w && t < h - 0.1 * w) {
                t = 0.5 * (l + h);
            }
            let p = eval(t)?;
            if !p.f.is_finite() || !armijo(&p) || p.f >= lo.f {
                hi = p;
            } else {
                if curvature(&p) {
                    return Ok(Some(p));
                }
                if p.d * (hi.a - lo.a) >= 0.0 {
                    hi = lo;
                }
                lo = p;
            }
        }
        Ok((lo.a > 0.0 && lo.f < f0).then_some(lo))
    }
}
