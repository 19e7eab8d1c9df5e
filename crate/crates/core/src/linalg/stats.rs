use serde::Serialize;

use super::SymMatrix;
use crate::error::{Error, Result};

/// Centered kernel alignment of two equally sized symmetric matrices.
pub fn cka(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::Shape(format!("cka of {}x{} and {}x{}", a.n(), a.n(), b.n(), b.n())));
    }
    let ac = center(a);
    let bc = center(b);
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    let ab = dot(&ac, &bc);
    let aa = dot(&ac, &ac);
    let bb = dot(&bc, &bc);
    if aa == 0.0 || bb == 0.0 {
        return Err(Error::DegenerateKernel("centered kernel has zero norm".into()));
    }
    Ok(ab / (aa.sqrt() * bb.sqrt()))
}

/// `H K H` with `H = I - 11^T/n`, as full row-major storage.
fn center(k: &SymMatrix) -> Vec<f64> {
    let n = k.n();
    let nf = n as f64;
    let row_means: Vec<f64> = (0..n).map(|i| k.row(i).iter().sum::<f64>() / nf).collect();
    let grand = row_means.iter().sum::<f64>() / nf;
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        let row = k.row(i);
        for j in 0..n {
            out[i * n + j] = row[j] - row_means[i] - row_means[j] + grand;
        }
    }
    out
}

/// Element-wise statistics over an ensemble of kernel matrices.
#[derive(Debug, Clone, Serialize)]
pub struct EnsembleStats {
    #[serde(skip)]
    pub mean: SymMatrix,
    #[serde(skip)]
    pub std: SymMatrix,
    /// Row-major `n*n`; `None` where the mean entry is exactly zero.
    #[serde(skip)]
    pub cv: Vec<Option<f64>>,
    pub cv_mean: f64,
    pub cv_max: f64,
    pub flagged: usize,
}

/// Per-entry mean, population standard deviation and coefficient of variation.
pub fn ensemble_stats(matrices: &[SymMatrix]) -> Result<EnsembleStats> {
    if matrices.len() < 2 {
        return Err(Error::Shape("ensemble statistics need at least two matrices".into()));
    }
    let n = matrices[0].n();
    if matrices.iter().any(|m| m.n() != n) {
        return Err(Error::Shape("ensemble matrices differ in dimension".into()));
    }
    let count = matrices.len() as f64;
    let mean = SymMatrix::from_fn(n, |i, j| matrices.iter().map(|m| m.get(i, j)).sum::<f64>() / count);
    let std = SymMatrix::from_fn(n, |i, j| {
        let mu = mean.get(i, j);
        let ss: f64 = matrices.iter().map(|m| (m.get(i, j) - mu).powi(2)).sum();
        (ss / count).sqrt()
    });
    let cv: Vec<Option<f64>> = mean
        .as_slice()
        .iter()
        .zip(std.as_slice())
        .map(|(&mu, &sd)| if mu != 0.0 { Some(sd / mu) } else { None })
        .collect();
    let defined: Vec<f64> = cv.iter().flatten().copied().collect();
    let flagged = cv.len() - defined.len();
    let cv_mean = if defined.is_empty() {
        f64::NAN
    } else {
        defined.iter().sum::<f64>() / defined.len() as f64
    };
    let cv_max = defined.iter().copied().fold(f64::NAN, f64::max);
    Ok(EnsembleStats {
        mean,
        std,
        cv,
        cv_mean,
        cv_max,
        flagged,
    })
}

/// 1-based ranks; tied values share the mean of the positions they occupy.
pub fn ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut out = vec![0.0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] == x[order[start]] {
            end += 1;
        }
        let avg = (start + 1 + end) as f64 / 2.0;
        for &k in &order[start..end] {
            out[k] = avg;
        }
        start = end;
    }
    out
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Shape(format!("pearson of lengths {} and {}", x.len(), y.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 || !(sxx * syy).is_finite() {
        return Err(Error::UndefinedCorrelation("zero or non-finite variance".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::Shape(format!("spearman needs equal lengths >= 3, got {} and {}", x.len(), y.len())));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::UndefinedCorrelation("NaN in input".into()));
    }
    pearson(&ranks(x), &ranks(y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cka_self_and_scale() {
        let k = SymMatrix::from_fn(5, |i, j| ((i * j) as f64).cos() + if i == j { 3.0 } else { 0.0 });
        assert!((cka(&k, &k).unwrap() - 1.0).abs() < 1e-15);
        assert!((cka(&k, &k.scaled(5.0)).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cka_constant_is_degenerate() {
        let c = SymMatrix::from_fn(3, |_, _| 2.0);
        assert!(matches!(cka(&c, &SymMatrix::identity(3)), Err(Error::DegenerateKernel(_))));
    }

    #[test]
    fn cka_matches_explicit_centering_matrix() {
        let n = 4;
        let a = SymMatrix::from_fn(n, |i, j| 1.0 + (i + 2 * j) as f64 * 0.3 + (i == j) as u8 as f64);
        let b = SymMatrix::from_fn(n, |i, j| ((i + j) as f64).sin());
        let h = SymMatrix::from_fn(n, |i, j| (i == j) as u8 as f64 - 1.0 / n as f64).to_array();
        let ac = h.dot(&a.to_array()).dot(&h);
        let bc = h.dot(&b.to_array()).dot(&h);
        let tr = |x: &ndarray::Array2<f64>, y: &ndarray::Array2<f64>| x.dot(y).diag().sum();
        let expect = tr(&ac, &bc) / (tr(&ac, &ac) * tr(&bc, &bc)).sqrt();
        assert!((cka(&a, &b).unwrap() - expect).abs() < 1e-13);
    }

    #[test]
    fn ensemble_two_four() {
        let a = SymMatrix::from_diagonal(&[2.0, 0.0]);
        let b = SymMatrix::from_diagonal(&[4.0, 0.0]);
        let s = ensemble_stats(&[a, b]).unwrap();
        assert_eq!(s.mean.get(0, 0), 3.0);
        assert_eq!(s.std.get(0, 0), 1.0);
        assert!((s.cv[0].unwrap() - 1.0 / 3.0).abs() < 1e-16);
        assert_eq!(s.cv[1], None);
        assert_eq!(s.flagged, 3);
    }

    #[test]
    fn ensemble_identical_has_zero_spread() {
        let a = SymMatrix::from_fn(3, |i, j| 1.0 + (i + j) as f64);
        let s = ensemble_stats(&[a.clone(), a]).unwrap();
        assert!(s.std.as_slice().iter().all(|&v| v == 0.0));
        assert_eq!(s.cv_max, 0.0);
    }

    #[test]
    fn ensemble_shape_errors() {
        assert!(matches!(ensemble_stats(&[SymMatrix::identity(2)]), Err(Error::Shape(_))));
        assert!(matches!(
            ensemble_stats(&[SymMatrix::identity(2), SymMatrix::identity(3)]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn spearman_monotone() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap(), 1.0);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
    }

    #[test]
    fn spearman_with_ties_by_hand() {
        // ranks x = (1, 2.5, 2.5, 4), y = (1, 3.5, 3.5, 2); both have mean 2.5
        // dx = (-1.5, 0, 0, 1.5), dy = (-1.5, 1, 1, -0.5)
        // sxy = 2.25 - 0.75 = 1.5, sxx = 4.5, syy = 2.25 + 1 + 1 + 0.25 = 4.5
        assert_eq!(ranks(&[1.0, 2.0, 2.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
        let rho = spearman(&[1.0, 2.0, 2.0, 4.0], &[1.0, 3.0, 3.0, 2.0]).unwrap();
        assert!((rho - 1.5 / 4.5).abs() < 1e-15);
    }

    #[test]
    fn spearman_constant_is_undefined() {
        assert!(matches!(
            spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::UndefinedCorrelation(_))
        ));
    }
}
