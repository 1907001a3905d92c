use std::f64::consts::{E, PI};

use proptest::prelude::*;
use softexp::{
    activate, addmul, dsoftexp_dalpha, dsoftexp_dx, real_domain_lower_bound, softexp,
    softexp_complex, softexp_real, Alpha, CScalar, Error, EvalMode,
};

// mpmath at 60 digits, see tests/oracles/gen_oracles.py
const DALPHA_SEAM: &[(f64, f64, f64)] = &[
    (1e-5, -5.0, 13.499_583_341_145_729),
    (1e-5, 2.0, 3.000_026_666_866_667_7),
    (1e-5, 5.0, 13.500_416_674_479_271),
    (-1e-5, -5.0, 13.500_933_387_861_353),
    (-1e-5, 2.0, 2.999_906_669_216_601),
    (-1e-5, 5.0, 13.499_066_721_188_647),
    (5e-5, -5.0, 13.497_916_861_966_147),
    (5e-5, 2.0, 3.000_133_338_333_466_7),
    (5e-5, 5.0, 13.502_083_528_658_855),
    (-5e-5, -5.0, 13.504_668_030_169_269),
    (-5e-5, 2.0, 2.999_533_397_075_134_4),
    (-5e-5, 5.0, 13.495_334_696_080_935),
    (1e-8, -5.0, 13.499_999_583_333_341),
    (1e-8, 2.0, 3.000_000_026_666_667),
    (1e-8, 5.0, 13.500_000_416_666_674),
    (-1e-8, -5.0, 13.500_000_933_333_388),
    (-1e-8, 2.0, 2.999_999_906_666_669),
    (-1e-8, 5.0, 13.499_999_066_666_721),
];

fn in_log_domain(alpha: f64, x: f64, margin: f64) -> bool {
    alpha >= 0.0 || 1.0 - alpha * (x + alpha) > margin
}

#[test]
fn named_points() {
    assert!((softexp_real(-0.5, 1.0).unwrap() - 0.446_287_102_628_419_5).abs() < 1e-15);
    assert_eq!(softexp_real(0.0, -3.25).unwrap(), -3.25);
    assert!((softexp_real(1.0, 1.0).unwrap() - E).abs() < 4e-16);
    assert!((softexp_real(-1.0, E).unwrap() - 1.0).abs() < 1e-15);
    assert!((addmul(0.5, 3.0, 7.0).unwrap() - 17.625).abs() < 1e-12);
    assert!((addmul(0.25, 2.0, 5.0).unwrap() - 8.828_125).abs() < 1e-12);
}

#[test]
fn alpha_derivative_matches_high_precision() {
    let cases = [(0.3, 1.5, 2.526_981_088_671_190_6), (-0.3, 1.5, 1.210_614_310_925_052_9)];
    for (a, x, want) in cases.into_iter().chain(DALPHA_SEAM.iter().copied()) {
        let got = dsoftexp_dalpha(a, x).unwrap();
        assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "({a}, {x}): {got} vs {want}");
    }
}

#[test]
fn seam_limits() {
    for &a in &[1e-8, -1e-8] {
        for k in 0..=100 {
            let x = -5.0 + 0.1 * k as f64;
            assert!((softexp_real(a, x).unwrap() - x).abs() <= 1e-6);
            assert!((dsoftexp_dx(a, x).unwrap() - 1.0).abs() <= 1e-4);
            assert!((dsoftexp_dalpha(a, x).unwrap() - (x * x / 2.0 + 1.0)).abs() <= 1e-4);
        }
    }
}

#[test]
fn derivatives_match_central_differences_on_grid() {
    let h = 1e-6;
    for i in 0..21 {
        let a = -1.0 + 0.1 * i as f64;
        for j in 0..21 {
            let x = -2.0 + 0.2 * j as f64;
            if !in_log_domain(a, x, 1e-2) || !in_log_domain(a - h, x, 1e-2) {
                continue;
            }
            let fx = (softexp_real(a, x + h).unwrap() - softexp_real(a, x - h).unwrap()) / (2.0 * h);
            let dx = dsoftexp_dx(a, x).unwrap();
            assert!((dx - fx).abs() <= 1e-5 * dx.abs().max(1.0), "d/dx at ({a}, {x})");
            // the two branches differ in second derivative at 0, so step one side only
            let fa = if a.abs() < 2.0 * h {
                (-3.0 * softexp_real(a, x).unwrap() + 4.0 * softexp_real(a + h, x).unwrap()
                    - softexp_real(a + 2.0 * h, x).unwrap())
                    / (2.0 * h)
            } else {
                (softexp_real(a + h, x).unwrap() - softexp_real(a - h, x).unwrap()) / (2.0 * h)
            };
            let da = dsoftexp_dalpha(a, x).unwrap();
            assert!((da - fa).abs() <= 1e-5 * da.abs().max(1.0), "d/dalpha at ({a}, {x}): {da} vs {fa}");
        }
    }
}

#[test]
fn strictly_increasing_in_x_for_fixed_alpha() {
    for i in 0..21 {
        let a = -1.0 + 0.1 * i as f64;
        let lo = if a < 0.0 { real_domain_lower_bound(a) + 1e-3 } else { -5.0 };
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=400 {
            let x = lo + (5.0 - lo) * k as f64 / 400.0;
            let y = softexp_real(a, x).unwrap();
            assert!(y > prev, "alpha {a}: f({x}) = {y} not above {prev}");
            prev = y;
        }
    }
}

#[test]
fn log_domain_boundary() {
    let a = -0.5;
    let b = real_domain_lower_bound(a);
    assert!(matches!(softexp(a, b, EvalMode::RealStrict), Err(Error::Domain { .. })));
    assert!(softexp(a, b - 1.0, EvalMode::ComplexPrincipal).unwrap().im != 0.0);
    assert!(softexp(a, b + 1e-9, EvalMode::RealStrict).is_ok());
}

#[test]
fn imaginary_alpha_is_a_sinusoid() {
    let z = softexp_complex(Alpha::imaginary(2.0), CScalar::new(PI / 4.0, 0.0)).unwrap();
    assert!((z.re - 0.5).abs() < 1e-15 && (z.im - 2.5).abs() < 1e-15, "{z}");
    let z = softexp_complex(Alpha::new(0.3, 0.7).unwrap(), CScalar::new(1.2, -0.4)).unwrap();
    assert!((z.re - 2.029_470_435_915_092_8).abs() < 1e-14);
    assert!((z.im - 0.832_937_057_867_004_6).abs() < 1e-14);
}

fn alpha_and_x() -> impl Strategy<Value = (f64, f64)> {
    (-1.0f64..1.0, -3.0f64..3.0).prop_filter("log domain", |&(a, x)| in_log_domain(a, x, 1e-3))
}

proptest! {
    #[test]
    fn negated_alpha_inverts((a, x) in alpha_and_x()) {
        let y = softexp_real(a, x).unwrap();
        let back = softexp_real(-a, y).unwrap();
        prop_assert!((back - x).abs() <= 1e-9 * x.abs().max(1.0), "{a} {x} -> {y} -> {back}");
    }

    #[test]
    fn monotone_in_x((a, x) in alpha_and_x(), dx in 1e-6f64..1.0) {
        prop_assert!(softexp_real(a, x + dx).unwrap() > softexp_real(a, x).unwrap());
    }

    #[test]
    fn continuous_across_zero_alpha(x in -5.0f64..5.0, e in -12i32..-6) {
        let d = 10f64.powi(e);
        let left = softexp_real(-d, x).unwrap();
        let right = softexp_real(d, x).unwrap();
        // first-order term is d (x^2/2 + 1)
        let bound = 2.0 * d * (x * x / 2.0 + 1.0) + 1e-15 * x.abs().max(1.0);
        prop_assert!((left - x).abs() <= bound && (right - x).abs() <= bound);
    }

    #[test]
    fn real_alpha_complex_path_agrees((a, x) in alpha_and_x()) {
        let real = softexp_real(a, x).unwrap();
        let z = softexp_complex(Alpha::real(a), CScalar::new(x, 0.0)).unwrap();
        prop_assert_eq!(z.im, 0.0);
        prop_assert_eq!(z.re, real);
    }

    #[test]
    fn vanishing_imaginary_part_recovers_real_value(a in 0.0f64..1.0, x in -3.0f64..3.0) {
        let real = softexp_real(a, x).unwrap();
        let z = activate(Alpha::new(a, 1e-9).unwrap(), CScalar::new(x, 0.0), EvalMode::ComplexPrincipal).unwrap();
        prop_assert!((z.re - real).abs() <= 1e-7 * real.abs().max(1.0));
        prop_assert!(z.im.abs() <= 1e-7 * real.abs().max(1.0) + 1e-7);
    }

    #[test]
    fn imaginary_alpha_closed_form(w in prop_oneof![-8.0f64..-1e-3, 1e-3f64..8.0], x in -5.0f64..5.0) {
        let z = softexp_complex(Alpha::imaginary(w), CScalar::new(x, 0.0)).unwrap();
        let re = (w * x).sin() / w;
        let im = w + (1.0 - (w * x).cos()) / w;
        prop_assert!((z.re - re).abs() <= 1e-12 * re.abs().max(1.0), "{} vs {re}", z.re);
        prop_assert!((z.im - im).abs() <= 1e-12 * im.abs().max(1.0), "{} vs {im}", z.im);
    }

    #[test]
    fn addmul_interpolates_between_sum_and_product(p in 0.2f64..5.0, q in 0.2f64..5.0) {
        prop_assert!((addmul(0.0, p, q).unwrap() - (p + q)).abs() <= 1e-12 * (p + q));
        prop_assert!((addmul(1.0, p, q).unwrap() - p * q).abs() <= 1e-9 * (p * q).max(1.0));
    }
}
