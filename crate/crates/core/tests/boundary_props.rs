use hcpinn::boundary::{boundary_samples, features, gini, grid, make_pair, Family, GridMode};
use hcpinn::pde::{benchmark, coefficients, self_check, LinearOperator, BENCHMARKS};
use proptest::prelude::*;

fn param_range(family: Family) -> (f64, f64) {
    match family {
        Family::Rational => (-3.0, 10.0),
        Family::Exponential => (-5.0, 5.0),
        Family::Tanh | Family::Tanh2D | Family::Tanh3D => (1.0, 20.0),
        _ => (0.5, 5.0),
    }
}

fn family_case() -> impl Strategy<Value = (Family, Vec<f64>, Vec<f64>)> {
    proptest::sample::select(Family::ALL.to_vec()).prop_flat_map(|f| {
        let (lo, hi) = param_range(f);
        (
            Just(f),
            proptest::collection::vec(lo..hi, f.n_params()),
            proptest::collection::vec(0.1f64..0.9, f.dim()),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn closed_form_derivatives_match_differences((family, params, x) in family_case()) {
        let pair = make_pair(family, &params, family.dim()).unwrap();
        let e = pair.eval(&x);
        prop_assert!((e.value - pair.value(&x)).abs() <= 1e-14 * e.value.abs().max(1e-300));
        let h = 1e-5;
        let mut lap = 0.0;
        let scale = e.value.abs().max(e.grad.iter().fold(0.0f64, |m, g| m.max(g.abs()))).max(e.lap.abs()).max(1e-12);
        for k in 0..x.len() {
            let mut p = x.clone();
            let mut m = x.clone();
            p[k] += h;
            m[k] -= h;
            let (bp, bm) = (pair.value(&p), pair.value(&m));
            prop_assert!(((bp - bm) / (2.0 * h) - e.grad[k]).abs() <= 1e-6 * scale);
            let h2 = 1e-4;
            let mut p2 = x.clone();
            let mut m2 = x.clone();
            p2[k] += h2;
            m2[k] -= h2;
            lap += (pair.value(&p2) - 2.0 * e.value + pair.value(&m2)) / (h2 * h2);
        }
        prop_assert!((lap - e.lap).abs() <= 1e-4 * scale, "lap {} vs {}", e.lap, lap);
    }

    #[test]
    fn vanishes_on_boundary_and_positive_inside((family, params, x) in family_case()) {
        let pair = make_pair(family, &params, family.dim()).unwrap();
        prop_assert!(pair.value(&x) > 0.0);
        for b in boundary_samples(family.dim(), 5).unwrap() {
            let touches_zero = b.iter().any(|&v| v == 0.0);
            if family == Family::PowerAsym {
                if touches_zero {
                    prop_assert_eq!(pair.value(&b), 0.0);
                }
            } else {
                prop_assert!(pair.value(&b).abs() <= 1e-12, "{} at {:?}", pair.label(), b);
            }
        }
    }

    #[test]
    fn symmetric_families_mirror((family, params, x) in family_case()) {
        let pair = make_pair(family, &params, family.dim()).unwrap();
        let mirrored: Vec<f64> = x.iter().map(|v| 1.0 - v).collect();
        let (a, b) = (pair.value(&x), pair.value(&mirrored));
        if pair.is_symmetric() {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
        }
    }

    #[test]
    fn coefficients_are_linear_in_the_operator(c0 in -3.0f64..3.0, c1 in -3.0f64..3.0, c2 in -3.0f64..3.0, s in -4.0f64..4.0) {
        let pair = make_pair(Family::Power, &[1.5], 1).unwrap();
        let pts = grid(1, 9, GridMode::Open).unwrap();
        let a = coefficients(&LinearOperator::constant(1, c0, vec![c1], c2).unwrap(), &pair, &pts).unwrap();
        let b = coefficients(&LinearOperator::constant(1, s * c0, vec![s * c1], s * c2).unwrap(), &pair, &pts).unwrap();
        for i in 0..pts.len() {
            prop_assert!((b.alpha[i] - s * a.alpha[i]).abs() <= 1e-12 * (1.0 + a.alpha[i].abs()));
            prop_assert!((b.beta[i][0] - s * a.beta[i][0]).abs() <= 1e-12 * (1.0 + a.beta[i][0].abs()));
            prop_assert!((b.gamma[i] - s * a.gamma[i]).abs() <= 1e-12 * (1.0 + a.gamma[i].abs()));
        }
    }

    #[test]
    fn gini_is_scale_invariant(v in proptest::collection::vec(0.01f64..10.0, 2..60), c in 0.1f64..100.0) {
        let g = gini(&v);
        let scaled: Vec<f64> = v.iter().map(|x| x * c).collect();
        prop_assert!((0.0..1.0).contains(&g));
        prop_assert!((gini(&scaled) - g).abs() <= 1e-12);
    }
}

#[test]
fn exact_solutions_pass_gate() {
    for name in BENCHMARKS {
        let p = benchmark(name).unwrap();
        assert!(self_check(&p).unwrap() <= 1e-8, "{name}");
    }
}

#[test]
fn power_features_order_with_exponent() {
    let pts = grid(1, 100, GridMode::Open).unwrap();
    let mut prev: Option<(f64, f64)> = None;
    for p in [0.5, 1.0, 2.0, 3.0, 5.0] {
        let f = features(&make_pair(Family::Power, &[p], 1).unwrap(), &pts);
        if let Some((g, d)) = prev {
            assert!(f.gini > g);
            assert!(f.dyn_range > d);
        }
        prev = Some((f.gini, f.dyn_range));
    }
}

#[test]
fn grid_sizes_and_modes() {
    assert_eq!(grid(3, 4, GridMode::Open).unwrap().len(), 64);
    let inc = grid(1, 5, GridMode::Inclusive).unwrap();
    assert_eq!(inc.first().unwrap()[0], 0.0);
    assert_eq!(inc.last().unwrap()[0], 1.0);
    assert!(grid(1, 5, GridMode::Midpoint).unwrap().iter().all(|p| p[0] > 0.0 && p[0] < 1.0));
    assert_eq!(boundary_samples(2, 5).unwrap().len(), 16);
}
