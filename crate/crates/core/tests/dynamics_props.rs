use hcpinn::dynamics::{
    analytic_residual, decompose, integrate_frozen, integrate_frozen_with, log_loss_slope, modal_loss, predict, Integrator,
};
use hcpinn::linalg::SymMatrix;
use proptest::prelude::*;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d) / norm(b).max(1e-300)
}

/// `G G^T + shift I` with a spread-out spectrum.
fn psd_system() -> impl Strategy<Value = (SymMatrix, Vec<f64>)> {
    (2usize..=20, 1usize..=8, 0.01f64..1.0).prop_flat_map(|(n, r, shift)| {
        (
            proptest::collection::vec(-2.0f64..2.0, n * r),
            proptest::collection::vec(-1.0f64..1.0, n),
        )
            .prop_map(move |(g, r0)| {
                let k = SymMatrix::from_fn(n, |i, j| {
                    (0..r).map(|c| g[i * r + c] * g[j * r + c]).sum::<f64>() + if i == j { shift } else { 0.0 }
                });
                (k, r0)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn analytic_solution_matches_rk4((k, r0) in psd_system(), eta in 1e-3f64..1.0) {
        let n_r = k.n() as f64;
        let dec = decompose(&k, &r0, eta, n_r).unwrap();
        let pred = predict(&dec).unwrap();
        let t_end = 0.1 * pred.t_conv;
        let lmax = dec.spectrum.lambda_max;
        let dt = (0.05 * n_r / (2.0 * eta * lmax)).min(t_end / 50.0);
        let traj = integrate_frozen(&k, &r0, eta, n_r, t_end, dt).unwrap();
        for (t, r) in traj.times.iter().zip(&traj.residuals) {
            prop_assert!(rel(r, &analytic_residual(&dec, *t)) <= 1e-4);
        }
    }

    #[test]
    fn parseval_and_monotone_loss((k, r0) in psd_system()) {
        let n_r = k.n() as f64;
        let dec = decompose(&k, &r0, 0.1, n_r).unwrap();
        let c2: f64 = dec.coeffs.iter().map(|c| c * c).sum();
        prop_assert!((c2 - norm(&r0).powi(2)).abs() <= 1e-10 * c2.max(1.0));
        let t_conv = predict(&dec).unwrap().t_conv;
        let mut prev = f64::INFINITY;
        for i in 0..=40 {
            let t = t_conv * i as f64 / 10.0;
            let j = modal_loss(&dec, t);
            let direct = norm(&analytic_residual(&dec, t)).powi(2) / n_r;
            prop_assert!((j - direct).abs() <= 1e-10 * j.max(1e-300) + 1e-300);
            prop_assert!(j <= prev * (1.0 + 1e-12));
            prev = j;
        }
        let dt = (t_conv / 200.0).min(0.5 * n_r / (2.0 * 0.1 * dec.spectrum.lambda_max));
        let traj = integrate_frozen(&k, &r0, 0.1, n_r, t_conv, dt).unwrap();
        prop_assert!(traj.losses(n_r).windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }

    #[test]
    fn larger_eigenvalues_decay_faster((k, r0) in psd_system()) {
        let n_r = k.n() as f64;
        let dec = decompose(&k, &r0, 0.5, n_r).unwrap();
        let rates = dec.rates();
        let t_conv = predict(&dec).unwrap().t_conv;
        for i in 1..=5 {
            let t = t_conv * i as f64 / 5.0;
            let factors: Vec<f64> = rates.iter().map(|r| -r * t).collect();
            for w in 0..factors.len() - 1 {
                if dec.spectrum.eigenvalues[w] > dec.spectrum.eigenvalues[w + 1] * (1.0 + 1e-9) {
                    prop_assert!(factors[w] < factors[w + 1]);
                }
            }
        }
    }
}

#[test]
fn asymptotic_slope_matches_loss_rate() {
    let k = SymMatrix::from_fn(3, |i, j| [[2.0, 0.5, 0.0], [0.5, 1.0, 0.2], [0.0, 0.2, 0.3]][i][j]);
    let r0 = [1.0, -0.5, 0.25];
    let dec = decompose(&k, &r0, 0.2, 3.0).unwrap();
    let pred = predict(&dec).unwrap();
    let times: Vec<f64> = (0..50).map(|i| pred.t_conv * (5.0 + i as f64 * 0.2)).collect();
    let losses: Vec<f64> = times.iter().map(|&t| modal_loss(&dec, t)).collect();
    let slope = log_loss_slope(&times, &losses).unwrap();
    assert!((slope + pred.loss_rate).abs() <= 0.05 * pred.loss_rate);
}

#[test]
fn euler_converges_to_analytic() {
    let k = SymMatrix::from_fn(4, |i, j| if i == j { 1.0 + i as f64 } else { 0.1 });
    let r0 = [0.4, -0.2, 0.9, 0.1];
    let dec = decompose(&k, &r0, 0.3, 4.0).unwrap();
    let t_conv = predict(&dec).unwrap().t_conv;
    let t_end = 0.1 * t_conv;
    let traj = integrate_frozen_with(&k, &r0, 0.3, 4.0, t_end, 1e-4 * t_conv, Integrator::Euler).unwrap();
    let last = traj.residuals.last().unwrap();
    assert!(rel(last, &analytic_residual(&dec, t_end)) <= 1e-4);
    assert_eq!(*traj.times.last().unwrap(), t_end);
}

#[test]
fn doubling_eta_halves_convergence_time() {
    let k = SymMatrix::from_fn(3, |i, j| if i == j { 2.0 } else { 0.3 });
    let r0 = [1.0, 2.0, 3.0];
    let a = predict(&decompose(&k, &r0, 0.1, 3.0).unwrap()).unwrap();
    let b = predict(&decompose(&k, &r0, 0.2, 3.0).unwrap()).unwrap();
    assert!((a.t_conv / b.t_conv - 2.0).abs() < 1e-12);
}

#[test]
fn oversized_step_is_reported() {
    let k = SymMatrix::from_fn(2, |i, j| if i == j { 100.0 } else { 0.0 });
    assert!(integrate_frozen_with(&k, &[1.0, 1.0], 1.0, 1.0, 10.0, 1.0, Integrator::Euler).is_err());
}
