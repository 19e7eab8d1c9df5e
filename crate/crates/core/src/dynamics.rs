//! Frozen-kernel residual dynamics `dR/dt = -(2 eta / N_r) K_r R`.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{eig_sym, SpectrumReport, SymMatrix, NUMERICAL_RANK_RTOL};

/// Steps of uninterrupted norm growth that count as an unstable integration.
pub const GROWTH_STEPS: usize = 10;

#[derive(Debug, Clone)]
pub struct ModalDecomposition {
    pub spectrum: SpectrumReport,
    /// `c_k = v_k . R(0)`, aligned with `spectrum.eigenvalues`.
    pub coeffs: Vec<f64>,
    pub eta: f64,
    pub n_r: f64,
    pub r0: Vec<f64>,
}

impl ModalDecomposition {
    /// `2 eta lambda_k / N_r` in spectrum order, without frozen-mode clamping.
    pub fn rates(&self) -> Vec<f64> {
        let s = 2.0 * self.eta / self.n_r;
        self.spectrum.eigenvalues.iter().map(|l| s * l).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergencePrediction {
    pub t_conv: f64,
    pub loss_rate: f64,
    /// Ascending; frozen modes contribute rate 0.
    pub per_mode_rates: Vec<f64>,
    /// Smallest eigenvalue treated as active.
    pub lambda_min: f64,
    pub frozen_modes: usize,
    /// False when the raw smallest eigenvalue is not positive.
    pub in_scope: bool,
}

pub fn decompose(kr: &SymMatrix, r0: &[f64], eta: f64, n_r: f64) -> Result<ModalDecomposition> {
    if r0.len() != kr.n() {
        return Err(Error::Shape(format!("residual has length {} but the kernel is {}x{}", r0.len(), kr.n(), kr.n())));
    }
    if !(eta > 0.0) || !(n_r > 0.0) {
        return Err(Error::Config(format!("eta and n_r must be positive, got {eta} and {n_r}")));
    }
    let spectrum = eig_sym(kr)?;
    let coeffs = spectrum
        .eigenvectors
        .iter()
        .map(|v| v.iter().zip(r0).map(|(a, b)| a * b).sum())
        .collect();
    Ok(ModalDecomposition {
        spectrum,
        coeffs,
        eta,
        n_r,
        r0: r0.to_vec(),
    })
}

/// `R(t) = sum_k c_k exp(-(2 eta / N_r) lambda_k t) v_k`.
pub fn analytic_residual(dec: &ModalDecomposition, t: f64) -> Vec<f64> {
    let mut r = vec![0.0; dec.r0.len()];
    for ((c, rate), v) in dec.coeffs.iter().zip(dec.rates()).zip(&dec.spectrum.eigenvectors) {
        let w = c * (-rate * t).exp();
        for (ri, vi) in r.iter_mut().zip(v) {
            *ri += w * vi;
        }
    }
    r
}

/// `J(t) = (1/N_r) sum_k c_k^2 exp(-(4 eta / N_r) lambda_k t)`.
pub fn modal_loss(dec: &ModalDecomposition, t: f64) -> f64 {
    dec.coeffs
        .iter()
        .zip(dec.rates())
        .map(|(c, rate)| c * c * (-2.0 * rate * t).exp())
        .sum::<f64>()
        / dec.n_r
}

pub fn predict(dec: &ModalDecomposition) -> Result<ConvergencePrediction> {
    let s = &dec.spectrum;
    if !(s.lambda_max > 0.0) {
        return Err(Error::DegenerateKernel("no positive eigenvalue".into()));
    }
    let cutoff = NUMERICAL_RANK_RTOL * s.lambda_max;
    let scale = 2.0 * dec.eta / dec.n_r;
    let active_min = s
        .eigenvalues
        .iter()
        .copied()
        .filter(|&l| l >= cutoff)
        .fold(f64::INFINITY, f64::min);
    let mut per_mode_rates: Vec<f64> = s
        .eigenvalues
        .iter()
        .map(|&l| if l >= cutoff { scale * l } else { 0.0 })
        .collect();
    per_mode_rates.sort_by(f64::total_cmp);
    Ok(ConvergencePrediction {
        t_conv: dec.n_r / (2.0 * dec.eta * active_min),
        loss_rate: 4.0 * dec.eta * active_min / dec.n_r,
        per_mode_rates,
        lambda_min: active_min,
        frozen_modes: s.eigenvalues.iter().filter(|&&l| l < cutoff).count(),
        in_scope: s.lambda_min > 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    #[default]
    Rk4,
    Euler,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub residuals: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn losses(&self, n_r: f64) -> Vec<f64> {
        self.residuals
            .iter()
            .map(|r| r.iter().map(|v| v * v).sum::<f64>() / n_r)
            .collect()
    }

    /// Columns `t,loss`, one row per stored time.
    pub fn write_csv<W: Write>(&self, mut w: W, n_r: f64) -> std::io::Result<()> {
        writeln!(w, "t,loss")?;
        for (t, l) in self.times.iter().zip(self.losses(n_r)) {
            writeln!(w, "{t:.17e},{l:.17e}")?;
        }
        Ok(())
    }
}

pub fn integrate_frozen(kr: &SymMatrix, r0: &[f64], eta: f64, n_r: f64, t_end: f64, dt: f64) -> Result<Trajectory> {
    integrate_frozen_with(kr, r0, eta, n_r, t_end, dt, Integrator::Rk4)
}

/// Fixed-step integration; the final step is shortened to land on `t_end`.
pub fn integrate_frozen_with(
    kr: &SymMatrix,
    r0: &[f64],
    eta: f64,
    n_r: f64,
    t_end: f64,
    dt: f64,
    method: Integrator,
) -> Result<Trajectory> {
    if r0.len() != kr.n() {
        return Err(Error::Shape(format!("residual has length {} but the kernel is {}x{}", r0.len(), kr.n(), kr.n())));
    }
    if !(dt > 0.0) || !(t_end >= 0.0) || !(eta > 0.0) || !(n_r > 0.0) {
        return Err(Error::Config(format!(
            "need dt > 0, t_end >= 0, eta > 0, n_r > 0 (got {dt}, {t_end}, {eta}, {n_r})"
        )));
    }
    let s = -2.0 * eta / n_r;
    let f = |r: &[f64]| -> Vec<f64> { kr.matvec(r).into_iter().map(|v| s * v).collect() };
    let axpy = |r: &[f64], h: f64, k: &[f64]| -> Vec<f64> { r.iter().zip(k).map(|(a, b)| a + h * b).collect() };
    let norm = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>().sqrt();

    let steps = (t_end / dt).ceil() as usize;
    let mut times = vec![0.0];
    let mut residuals = vec![r0.to_vec()];
    let mut r = r0.to_vec();
    let mut prev_norm = norm(&r);
    let mut growth = 0;
    for step in 1..=steps {
        let t0 = (step - 1) as f64 * dt;
        let h = dt.min(t_end - t0);
        r = match method {
            Integrator::Euler => axpy(&r, h, &f(&r)),
            Integrator::Rk4 => {
                let k1 = f(&r);
                let k2 = f(&axpy(&r, 0.5 * h, &k1));
                let k3 = f(&axpy(&r, 0.5 * h, &k2));
                let k4 = f(&axpy(&r, h, &k3));
                r.iter()
                    .enumerate()
                    .map(|(i, v)| v + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                    .collect()
            }
        };
        let nn = norm(&r);
        if !nn.is_finite() {
            return Err(Error::StepSize { step });
        }
        growth = if nn > prev_norm { growth + 1 } else { 0 };
        if growth >= GROWTH_STEPS {
            return Err(Error::StepSize { step });
        }
        prev_norm = nn;
        times.push(if step == steps { t_end } else { step as f64 * dt });
        residuals.push(r.clone());
    }
    Ok(Trajectory { times, residuals })
}

/// Least-squares slope of `ln J` against `t` over samples with positive loss.
pub fn log_loss_slope(times: &[f64], losses: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(losses)
        .filter(|(_, &l)| l > 0.0 && l.is_finite())
        .map(|(&t, &l)| (t, l.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - ml)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
