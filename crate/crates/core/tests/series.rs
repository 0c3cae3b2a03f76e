use approx::assert_abs_diff_eq;
use gadqec_core::codes::CodeName;
use gadqec_core::series::*;
use proptest::prelude::*;

fn gamma_basis() -> Vec<Monomial> {
    vec![Monomial::new(2, 0), Monomial::new(3, 0), Monomial::new(4, 0)]
}

#[test]
fn known_polynomial_is_recovered_along_three_rays() {
    let poly = |g: f64, e: f64| Ok(1.0 - 2.0 * g * g - 15.0 * e * e - 15.0 * e * g);
    let s: Vec<f64> = RAYS
        .iter()
        .map(|&r| fit_expansion(poly, &gamma_basis(), SampleBox::default().with_ratio(r)).unwrap().coefficients[0])
        .collect();
    let (g2, eg, e2) = split_rays(s[0], s[1], s[2]);
    assert_abs_diff_eq!(g2, 2.0, epsilon = 1e-10);
    assert_abs_diff_eq!(eg, 15.0, epsilon = 1e-10);
    assert_abs_diff_eq!(e2, 15.0, epsilon = 1e-10);
}

#[test]
fn collinear_basis_is_rejected() {
    let poly = |g: f64, e: f64| Ok(1.0 - g * g - e * e);
    let basis = [Monomial::new(2, 0), Monomial::new(1, 1), Monomial::new(0, 2)];
    let err = fit_expansion(poly, &basis, SampleBox::default().with_ratio(1.0)).unwrap_err();
    assert!(matches!(err, SeriesError::IllConditioned { .. }), "{err:?}");
}

#[test]
fn sample_box_validation() {
    let bad = SampleBox { gamma_min: 0.0, ..SampleBox::default() };
    assert!(matches!(bad.samples(), Err(SeriesError::InvalidBox(_))));
    let s = SampleBox::default().with_ratio(0.5).samples().unwrap();
    assert_eq!(s.len(), 8);
    assert_abs_diff_eq!(s[0].0, 1e-3, epsilon = 1e-15);
    assert_abs_diff_eq!(s[7].0, 2e-2, epsilon = 1e-15);
    assert!(s.iter().all(|&(g, e)| (e - 0.5 * g).abs() < 1e-18));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ray_split_inverts_its_construction(g2 in -50.0..50.0f64, eg in -50.0..50.0f64, e2 in -50.0..50.0f64) {
        let ray = |r: f64| g2 + eg * r + e2 * r * r;
        let (a, b, c) = split_rays(ray(0.0), ray(0.5), ray(1.0));
        prop_assert!((a - g2).abs() < 1e-12 && (b - eg).abs() < 1e-12 && (c - e2).abs() < 1e-12);
    }

    #[test]
    fn least_squares_solves_square_systems(x in prop::collection::vec(-5.0..5.0f64, 3)) {
        let rows = vec![vec![2.0, 0.5, 0.0], vec![0.1, 3.0, 1.0], vec![0.0, -1.0, 4.0], vec![1.0, 1.0, 1.0]];
        let rhs: Vec<f64> = rows.iter().map(|r| r.iter().zip(&x).map(|(a, b)| a * b).sum()).collect();
        let (got, cond) = least_squares(&rows, &rhs).unwrap();
        prop_assert!(cond >= 1.0);
        for (a, b) in got.iter().zip(&x) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn horner_evaluation() {
    assert_eq!(evaluate_reference_polynomial(&shor_nine_polynomial(), 0.0), 1.0);
    assert_eq!(evaluate_reference_polynomial(&css_seven_taylor(), 0.0), 1.0);
    let p = ReferencePolynomial { code: "t".into(), variable: "x".into(), terms: vec![(0, 1.0), (2, -3.0), (5, 2.0)] };
    let x = 0.37f64;
    assert_abs_diff_eq!(evaluate_reference_polynomial(&p, x), 1.0 - 3.0 * x * x + 2.0 * x.powi(5), epsilon = 1e-15);
    let direct: f64 = shor_nine_polynomial().terms.iter().map(|&(e, c)| c * 0.1f64.powi(e as i32)).sum();
    assert_abs_diff_eq!(evaluate_reference_polynomial(&shor_nine_polynomial(), 0.1), direct, epsilon = 1e-15);
}

#[test]
fn seven_qubit_taylor_series_matches_closed_form() {
    assert_abs_diff_eq!(css_seven_closed_form(0.0), 1.0, epsilon = 1e-15);
    for i in 1..=20 {
        let g = 0.2 * i as f64 / 20.0;
        let diff = (css_seven_closed_form(g) - evaluate_reference_polynomial(&css_seven_taylor(), g)).abs();
        assert!(diff < 10.0 * g.powi(10) + 1e-14, "gamma {g}: {diff:e}");
    }
}

#[test]
fn finite_differences_agree_with_fit() {
    let eval = |g: f64, e: f64| code_fidelity(CodeName::FiveQubit, g, e, None);
    let fd = finite_difference_gamma2(eval, 1e-3).unwrap();
    let fit = fit_expansion(eval, &gamma_basis(), SampleBox::default()).unwrap();
    let c = fit.coefficients[0];
    assert!(((fd - c) / c).abs() < 0.01, "fd {fd} fit {c}");
    assert!(fit.condition < MAX_CONDITION);
}

#[test]
fn fit_is_stable_under_a_smaller_box() {
    for code in [CodeName::FiveQubit, CodeName::LeungFour, CodeName::Nonadd6_5] {
        let eval = |g: f64, e: f64| code_fidelity(code, g, e, None);
        let a = fit_expansion(eval, &gamma_basis(), SampleBox::default()).unwrap().coefficients[0];
        let b = fit_expansion(eval, &gamma_basis(), SampleBox::default().halved()).unwrap().coefficients[0];
        assert!(((a - b) / a).abs() < 0.02, "{code}: {a} vs {b}");
    }
}

#[test]
fn five_qubit_damping_coefficient() {
    let report = verify_reference_coefficients(CodeName::FiveQubit, SampleBox::default()).unwrap();
    let g2 = report.check("g^2").unwrap();
    assert!(g2.pass, "{}", report.to_table());
    assert_eq!(report.rays.len(), 3);
    assert!(report.checks.iter().all(|c| c.error >= 0.0));
}

#[test]
fn coefficient_checks() {
    let c = CoefficientCheck::new("g^2", 2.04, 2.0);
    assert!(c.pass);
    assert_abs_diff_eq!(c.error, 0.02, epsilon = 1e-12);
    assert!(!CoefficientCheck::new("g^2", 2.2, 2.0).pass);
    let z = CoefficientCheck::new("g^2", 0.05, 0.0);
    assert!(z.pass && z.tolerance == ZERO_COEFFICIENT_TOL);
    assert!(reference_coefficients(CodeName::LeungFour).is_none());
    assert!(matches!(verify_reference_coefficients(CodeName::LeungFour, SampleBox::default()), Err(SeriesError::NoReference(_))));
}

#[test]
fn reference_series_drops_missing_terms() {
    let r = reference_coefficients(CodeName::Nonadd6_5).unwrap();
    assert_abs_diff_eq!(reference_series(&r, 0.1, 0.05), 1.0 - 0.042, epsilon = 1e-15);
    let shor = reference_coefficients(CodeName::ShorNine).unwrap();
    assert_abs_diff_eq!(reference_series(&shor, 0.1, 0.0), 1.0 - 1.5e-3, epsilon = 1e-15);
}
