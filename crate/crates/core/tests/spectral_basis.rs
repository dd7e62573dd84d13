use knudsen_core::diffusivity::displacement_observable;
use knudsen_core::observable::Observable;
use knudsen_core::quadrature::PiQuadrature;
use knudsen_core::spectral_basis::{
    expand, gram_matrix, inner_product_pi, legendre_eval, legendre_operator_apply, poisson_residual,
    poisson_solve_series, LegendreSeries, SpectralError,
};
use proptest::prelude::*;

fn quad() -> PiQuadrature<f64> {
    PiQuadrature::default()
}

#[test]
fn legendre_values() {
    assert!((legendre_eval(2, 0.5f64) + 0.125).abs() < 1e-15);
    for l in 0..60 {
        assert!((legendre_eval(l, 1.0f64) - 1.0).abs() < 1e-12);
        let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
        assert!((legendre_eval(l, -1.0f64) - sign).abs() < 1e-12);
    }
    // P_7(x) = (429 x^7 - 693 x^5 + 315 x^3 - 35 x) / 16
    let x = 0.3f64;
    let want = (429.0 * x.powi(7) - 693.0 * x.powi(5) + 315.0 * x.powi(3) - 35.0 * x) / 16.0;
    assert!((legendre_eval(7, x) - want).abs() < 1e-15);
}

#[test]
fn orthogonality_up_to_degree_50() {
    let g = gram_matrix(50, &quad());
    for (i, row) in g.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let want = if i == j { 1.0 / (2 * i + 1) as f64 } else { 0.0 };
            assert!((v - want).abs() < 1e-10, "G[{i}][{j}] = {v}");
        }
    }
}

#[test]
fn inner_products() {
    let q = quad();
    let p1 = Observable::legendre(1);
    let v = inner_product_pi(&p1, &p1, &q).unwrap();
    assert!((v - 1.0 / 3.0).abs() < 1e-14);
    let v = inner_product_pi(&Observable::legendre(2), &Observable::legendre(3), &q).unwrap();
    assert!(v.abs() < 1e-14);
    let fa = displacement_observable(50000.0, 1.0).unwrap();
    let n = inner_product_pi(&fa, &fa, &q).unwrap();
    assert!(n.is_finite() && n > 0.0);
    // Closed form: 4 (atanh(x_c) - x_c) + a^2 (1 - x_c), x_c = a / sqrt(a^2 + 4).
    let a = 50000.0f64;
    let xc = a / (a * a + 4.0).sqrt();
    let exact = 4.0 * (xc.atanh() - xc) + a * a * (1.0 - xc);
    assert!((n - exact).abs() < 1e-8 * exact, "{n} vs {exact}");
    let r = inner_product_pi(&Observable::legendre(1), &Observable::from_fn("nan", |_| f64::NAN), &q);
    assert!(matches!(r, Err(SpectralError::NonFinite { .. })));
}

#[test]
fn expansions() {
    let q = quad();
    let s = expand(&Observable::legendre(3), 8, &q);
    for (l, &b) in s.coefficients.iter().enumerate() {
        assert!((b - if l == 3 { 1.0 } else { 0.0 }).abs() < 1e-12, "b_{l} = {b}");
    }
    let cube = expand(&Observable::from_fn("x^3", |x: f64| x * x * x), 6, &q);
    assert!((cube.coefficients[1] - 0.6).abs() < 1e-13);
    assert!((cube.coefficients[3] - 0.4).abs() < 1e-13);
    assert!(cube.coefficients.iter().enumerate().all(|(l, b)| l == 1 || l == 3 || b.abs() < 1e-13));
    let x = 0.37;
    assert!((cube.eval(x) - x * x * x).abs() < 1e-13);
}

#[test]
fn odd_observable_has_no_even_coefficients() {
    let fa = displacement_observable(50000.0, 1.0).unwrap();
    let s = expand(&fa, 200, &quad());
    let scale = s.coefficients[1].abs();
    for l in (0..=200).step_by(2) {
        assert!(s.coefficients[l].abs() < 1e-9 * scale, "b_{l} = {}", s.coefficients[l]);
    }
}

#[test]
fn reconstruction_error_decreases() {
    let q = quad();
    let f = Observable::from_fn("x|x|", |x: f64| x * x.abs()).with_breakpoints(vec![0.0]);
    let norm = f.norm_sq(&q);
    let s = expand(&f, 64, &q);
    let mut prev = f64::INFINITY;
    for n in [1, 3, 7, 15, 31, 63] {
        // ||f - T_n f||^2 = ||f||^2 - ||T_n f||^2 by orthogonality.
        let err = norm - s.truncated(n).norm_sq_pi();
        assert!(err < prev, "{n}: {err}");
        prev = err;
    }
}

#[test]
fn legendre_operator_is_diagonal() {
    let phi2 = LegendreSeries::new(vec![0.0, 0.0, 1.0]);
    assert_eq!(legendre_operator_apply(&phi2).coefficients, vec![0.0, 0.0, -6.0]);
    let constant = LegendreSeries::new(vec![3.0]);
    assert_eq!(legendre_operator_apply(&constant).coefficients, vec![0.0]);
    let half_x = LegendreSeries::new(vec![0.0, 0.5]);
    assert_eq!(legendre_operator_apply(&half_x).coefficients, vec![0.0, -1.0]);
}

#[test]
fn poisson_examples() {
    let q = quad();
    let g = poisson_solve_series(&Observable::legendre(1), 4, None, &q).unwrap();
    assert!((g.coefficients[1] - 0.5).abs() < 1e-14);
    assert!(g.coefficients.iter().enumerate().all(|(l, c)| l == 1 || c.abs() < 1e-14));
    let lg = legendre_operator_apply(&g);
    assert!((lg.coefficients[1] + 1.0).abs() < 1e-14);

    let g = poisson_solve_series(&Observable::legendre(2), 4, None, &q).unwrap();
    assert!((g.coefficients[2] - 1.0 / 6.0).abs() < 1e-14);

    let g = poisson_solve_series(&Observable::from_fn("zero", |_| 0.0), 10, None, &q).unwrap();
    assert!(g.coefficients.iter().all(|&c| c == 0.0));

    let gh = poisson_solve_series(&Observable::legendre(1), 4, Some(0.01), &q).unwrap();
    assert!((gh.coefficients[1] - 0.5 / 0.02).abs() < 1e-10);

    let err = poisson_solve_series(&Observable::from_fn("one", |_| 1.0), 4, None, &q);
    assert!(matches!(err, Err(SpectralError::NotMeanZero { .. })));
}

fn test_family() -> Vec<Observable<f64>> {
    let q = quad();
    vec![
        Observable::legendre(1),
        Observable::legendre(2),
        Observable::legendre(7),
        Observable::from_fn("x^3", |x| x * x * x),
        Observable::from_fn("sin", |x: f64| (std::f64::consts::PI * x).sin()),
        Observable::from_fn("x|x|", |x: f64| x * x.abs()).with_breakpoints(vec![0.0]),
        Observable::from_fn("exp", |x: f64| x.exp()).centered(&q),
        Observable::from_fn("cos", |x: f64| (3.0 * x).cos()).centered(&q),
        Observable::from_fn("step", |x: f64| if x > 0.2 { 1.0 } else { 0.0 })
            .with_breakpoints(vec![0.2])
            .centered(&q),
        displacement_observable(50000.0, 1.0).unwrap(),
    ]
}

#[test]
fn poisson_residual_on_test_family() {
    let q = quad();
    for f in test_family() {
        for n in [10, 50, 200] {
            let fs = expand(&f, n, &q);
            let g = poisson_solve_series(&f, n, None, &q).unwrap();
            let r = poisson_residual(&fs, &g);
            assert!(r <= 1e-9, "{}: n = {n}, residual {r}", f.label());
        }
    }
}

fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let k = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0.ln(), a.1 + p.1.ln()));
    let (sxx, sxy) = points.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0.ln().powi(2), a.1 + p.0.ln() * p.1.ln()));
    (k * sxy - sx * sy) / (k * sxx - sx * sx)
}

#[test]
fn coefficients_decay_for_absolutely_continuous_derivative() {
    let q = quad();
    let f = Observable::from_fn("x|x|", |x: f64| x * x.abs()).with_breakpoints(vec![0.0]);
    let s = expand(&f, 201, &q);
    let points: Vec<(f64, f64)> = (11..=201).step_by(2).map(|l| (l as f64, s.coefficients[l].abs())).collect();
    let slope = loglog_slope(&points);
    assert!(slope <= -1.5, "{slope}");
}

#[test]
fn displacement_coefficients_do_not_decay_below_the_cutoff_scale() {
    // The cut-off sits at 1 - x ~ 2 / a^2, so for l well below a the
    // coefficients of f_a behave like those of the untruncated 1/sqrt(1-x^2)
    // and stay near 4.
    let fa = displacement_observable(50000.0, 1.0).unwrap();
    let s = expand(&fa, 400, &quad());
    for l in [21, 101, 399] {
        assert!((s.coefficients[l] - 4.0).abs() < 0.05, "b_{l} = {}", s.coefficients[l]);
    }
}

#[test]
fn f32_expansion_agrees() {
    let q32 = PiQuadrature::<f32>::default();
    let s = expand(&Observable::<f32>::from_fn("x^3", |x| x * x * x), 6, &q32);
    assert!((s.coefficients[1] - 0.6).abs() < 1e-5);
    assert!((s.coefficients[3] - 0.4).abs() < 1e-5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn legendre_values_are_bounded(l in 0usize..200, x in -1.0f64..=1.0) {
        prop_assert!(legendre_eval(l, x).abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn legendre_parity(l in 0usize..80, x in -1.0f64..=1.0) {
        let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!((legendre_eval(l, -x) - sign * legendre_eval(l, x)).abs() < 1e-12);
    }

    #[test]
    fn operator_and_poisson_are_inverse(coeffs in prop::collection::vec(-5.0f64..5.0, 2..40)) {
        let mut c = coeffs.clone();
        c[0] = 0.0;
        let s = LegendreSeries::new(c.clone());
        let lg = legendre_operator_apply(&s);
        for (l, (&a, &b)) in lg.coefficients.iter().zip(&c).enumerate() {
            prop_assert!((a + (l * (l + 1)) as f64 * b).abs() < 1e-9);
        }
    }
}
