use serde::Serialize;

use super::SymMatrix;
use crate::error::{Error, Result};

/// Eigenvalues at or below `NUMERICAL_RANK_RTOL * lambda_max` do not count toward the numerical rank.
pub const NUMERICAL_RANK_RTOL: f64 = 1e-12;

const KAPPA_FLOOR: f64 = 1e-300;

/// Full eigendecomposition of a symmetric matrix with derived scalar metrics.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[k]` is the unit eigenvector belonging to `eigenvalues[k]`.
    pub eigenvectors: Vec<Vec<f64>>,
    pub kappa: f64,
    pub eff_rank: f64,
    pub trace: f64,
    pub frob: f64,
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub numerical_rank: usize,
}

impl SpectrumReport {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V diag(lambda) V^T`.
    pub fn reconstruct(&self) -> SymMatrix {
        let n = self.n();
        SymMatrix::from_fn(n, |i, j| {
            self.eigenvalues
                .iter()
                .zip(&self.eigenvectors)
                .map(|(l, v)| l * v[i] * v[j])
                .sum()
        })
    }

    /// Largest entry of `|V^T V - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.n();
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in a..n {
                let dot: f64 = self.eigenvectors[a]
                    .iter()
                    .zip(&self.eigenvectors[b])
                    .map(|(x, y)| x * y)
                    .sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// True when `lambda_min >= -tol * lambda_max`.
    pub fn is_psd(&self, tol: f64) -> bool {
        self.lambda_min >= -tol * self.lambda_max.abs()
    }
}

/// Symmetric eigendecomposition by Householder tridiagonalization and implicit QL.
///
/// The QL phase is capped at `50 n` iterations in total.
pub fn eig_sym(m: &SymMatrix) -> Result<SpectrumReport> {
    if !m.is_finite() {
        return Err(Error::InvalidMatrix("matrix has non-finite entries".into()));
    }
    let n = m.n();
    let mut v = m.as_slice().to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(n, &mut v, &mut d, &mut e);
    let mut vt = transpose(n, &v);
    tql2(n, &mut vt, &mut d, &mut e, 50 * n)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].total_cmp(&d[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| d[k]).collect();
    let eigenvectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&k| vt[k * n..(k + 1) * n].to_vec())
        .collect();

    let trace = m.trace();
    let frob = m.frobenius();
    let lambda_max = eigenvalues[0];
    let lambda_min = eigenvalues[n - 1];
    let frob_sq = m.frobenius_sq();
    let eff_rank = if frob_sq > 0.0 { trace * trace / frob_sq } else { 0.0 };
    let numerical_rank = eigenvalues
        .iter()
        .filter(|&&l| l > NUMERICAL_RANK_RTOL * lambda_max)
        .count();
    Ok(SpectrumReport {
        kappa: lambda_max / lambda_min.max(KAPPA_FLOOR),
        eigenvalues,
        eigenvectors,
        eff_rank,
        trace,
        frob,
        lambda_max,
        lambda_min,
        numerical_rank,
    })
}

fn transpose(n: usize, a: &[f64]) -> Vec<f64> {
    let mut t = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            t[j * n + i] = a[i * n + j];
        }
    }
    t
}

/// Householder reduction to tridiagonal form. On return `v` (row-major) holds the
/// accumulated orthogonal transform, `d` the diagonal and `e[1..]` the subdiagonal.
fn tred2(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    let idx = |i: usize, j: usize| i * n + j;
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
                v[idx(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[idx(j, i)] = f;
                g = e[j] + v[idx(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[idx(k, j)] * d[k];
                    e[k] += v[idx(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[idx(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n.saturating_sub(1) {
        v[idx(n - 1, i)] = v[idx(i, i)];
        v[idx(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[idx(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[idx(k, i + 1)] * v[idx(k, j)];
                }
                for k in 0..=i {
                    v[idx(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[idx(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
        v[idx(n - 1, j)] = 0.0;
    }
    v[idx(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit QL on the tridiagonal form. `vt` holds the transform transposed, so
/// row `k` of `vt` becomes the eigenvector of `d[k]`.
fn tql2(n: usize, vt: &mut [f64], d: &mut [f64], e: &mut [f64], max_iter: usize) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    let mut total_iter = 0usize;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            loop {
                total_iter += 1;
                if total_iter > max_iter {
                    return Err(Error::EigFailure { iterations: total_iter - 1 });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (lo, hi) = vt.split_at_mut((i + 1) * n);
                    let row_i = &mut lo[i * n..];
                    let row_i1 = &mut hi[..n];
                    for (a, b) in row_i.iter_mut().zip(row_i1.iter_mut()) {
                        let hk = *b;
                        *b = s * *a + c * hk;
                        *a = c * *a - s * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if !(e[l].abs() > eps * tst1) {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_two() {
        let r = eig_sym(&SymMatrix::identity(2)).unwrap();
        assert_eq!(r.eigenvalues, vec![1.0, 1.0]);
        assert_eq!(r.kappa, 1.0);
        assert_eq!(r.eff_rank, 2.0);
    }

    #[test]
    fn two_by_two_characteristic_polynomial() {
        // lambda^2 - 4 lambda + 3 = (lambda - 3)(lambda - 1)
        let m = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]], 0.0).unwrap();
        let r = eig_sym(&m).unwrap();
        assert!((r.eigenvalues[0] - 3.0).abs() < 1e-14);
        assert!((r.eigenvalues[1] - 1.0).abs() < 1e-14);
        assert!((r.kappa - 3.0).abs() < 1e-13);
        assert_eq!(r.trace, 4.0);
        let v0 = &r.eigenvectors[0];
        assert!((v0[0].abs() - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((v0[0] - v0[1]).abs() < 1e-14);
    }

    #[test]
    fn one_by_one() {
        let r = eig_sym(&SymMatrix::from_diagonal(&[7.0])).unwrap();
        assert_eq!(r.eigenvalues, vec![7.0]);
        assert_eq!(r.eigenvectors, vec![vec![1.0]]);
    }

    #[test]
    fn zero_matrix_hits_kappa_floor() {
        let r = eig_sym(&SymMatrix::zeros(3)).unwrap();
        assert_eq!(r.lambda_max, 0.0);
        assert_eq!(r.kappa, 0.0);
        assert_eq!(r.numerical_rank, 0);
    }

    #[test]
    fn rank_deficient_kappa_is_raw() {
        let m = SymMatrix::from_diagonal(&[1.0, 1e-9, 1e-20]);
        let r = eig_sym(&m).unwrap();
        assert!((r.kappa - 1e20).abs() / 1e20 < 1e-12);
        assert_eq!(r.numerical_rank, 2);
    }

    #[test]
    fn rejects_non_finite() {
        let mut m = SymMatrix::identity(2);
        m.set(0, 1, f64::NAN);
        assert!(matches!(eig_sym(&m), Err(Error::InvalidMatrix(_))));
    }

    #[test]
    fn iteration_cap_is_reported() {
        let m = SymMatrix::from_fn(6, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let mut v = m.as_slice().to_vec();
        let (mut d, mut e) = (vec![0.0; 6], vec![0.0; 6]);
        tred2(6, &mut v, &mut d, &mut e);
        let mut vt = transpose(6, &v);
        let err = tql2(6, &mut vt, &mut d, &mut e, 1).unwrap_err();
        assert!(matches!(err, Error::EigFailure { iterations: 1 }));
    }
}

#[cfg(test)]
mod dense_tests {
    use super::*;

    #[test]
    fn tridiagonal_three_by_three() {
        let m = SymMatrix::from_rows(&[vec![2.0, 0.5, 0.0], vec![0.5, 1.0, 0.2], vec![0.0, 0.2, 0.3]], 0.0).unwrap();
        let r = eig_sym(&m).unwrap();
        assert!((r.eigenvalues.iter().sum::<f64>() - 3.3).abs() < 1e-14);
        assert!(r.reconstruct().max_abs_diff(&m) < 1e-14);
        for (l, v) in r.eigenvalues.iter().zip(&r.eigenvectors) {
            let mv = m.matvec(v);
            assert!(mv.iter().zip(v).all(|(a, b)| (a - l * b).abs() < 1e-14));
        }
    }

    #[test]
    fn hilbert_reconstruction() {
        let m = SymMatrix::from_fn(12, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let r = eig_sym(&m).unwrap();
        assert!(r.reconstruct().max_abs_diff(&m) < 1e-13);
        assert!(r.orthonormality_error() < 1e-13);
    }
}
