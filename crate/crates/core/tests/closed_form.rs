//! Solver results against solutions worked out by hand.

use spectra4::basis::{eigenfunction, null_direction, Side};
use spectra4::ode::{integrate, integrate_fixed, Segment};
use spectra4::oracle::{discretize, solve_discrete};
use spectra4::spectrum::{count_in_disc, find_eigenvalues, ScanConfig};
use spectra4::{parse_config, PotentialExpr, Problem, StateVec, C64};

const ACC: f64 = 1e-10;

fn relaxed(beta: [f64; 2]) -> Problem {
    let text = format!(
        r#"{{"a1":1,"a2":1,"beta":[{},{}],"delta":[0,0],"q_left":"0","q_right":"0","strict_validation":false}}"#,
        beta[0], beta[1]
    );
    parse_config(&text).unwrap()
}

/// `u = (cos z + cosh z) / 2`, `z = s (x + 1)`, and its first three derivatives.
fn even_combination(s: f64, x: f64) -> [f64; 4] {
    let z = s * (x + 1.0);
    let (c, ch, sn, sh) = (z.cos(), z.cosh(), z.sin(), z.sinh());
    [
        0.5 * (c + ch),
        0.5 * s * (sh - sn),
        0.5 * s * s * (ch - c),
        0.5 * s * s * s * (sn + sh),
    ]
}

fn max_diff(y: StateVec, exact: [f64; 4]) -> f64 {
    y.to_array()
        .iter()
        .zip(exact)
        .map(|(a, b)| (a - C64::new(b, 0.0)).norm())
        .fold(0.0, f64::max)
}

#[test]
fn adaptive_integration_matches_trig_hyperbolic_solution() {
    let q = PotentialExpr::constant(0.0);
    let seg = Segment::new(-1.0, 0.0, 1.0, &q).unwrap();
    let s: f64 = 2.0;
    let y = integrate(&seg, StateVec::real(1.0, 0.0, 0.0, 0.0), C64::new(s.powi(4), 0.0), ACC).unwrap();
    assert!(max_diff(y, even_combination(s, 0.0)) < 1e-9);
}

#[test]
fn fixed_step_error_falls_at_fourth_order() {
    let q = PotentialExpr::constant(0.0);
    let seg = Segment::new(-1.0, 0.0, 1.0, &q).unwrap();
    let exact = even_combination(2.0, 0.0);
    let errs: Vec<f64> = [10, 20, 40, 80]
        .iter()
        .map(|&n| {
            let y = integrate_fixed(&seg, StateVec::real(1.0, 0.0, 0.0, 0.0), C64::new(16.0, 0.0), n).unwrap();
            max_diff(y, exact)
        })
        .collect();
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((12.0..=20.0).contains(&ratio), "halving ratio {ratio} from {errs:?}");
    }
}

#[test]
fn coefficient_rescales_the_exponent() {
    // a^4 u'''' = s^4 u is solved by exp(s x / a).
    let q = PotentialExpr::constant(0.0);
    let (a, s): (f64, f64) = (2.0, 3.0);
    let seg = Segment::new(0.0, 1.0, a, &q).unwrap();
    let k = s / a;
    let y = integrate(
        &seg,
        StateVec::real(1.0, k, k * k, k * k * k),
        C64::new(s.powi(4), 0.0),
        ACC,
    )
    .unwrap();
    let e = k.exp();
    assert!(max_diff(y, [e, k * e, k * k * e, k * k * k * e]) < 1e-8 * e * k.powi(3));
}

#[test]
fn linear_potential_integrates_to_a_cubic_at_zero_lambda() {
    // u'''' = 0 with q = 0 and lambda = 0 from (0,0,0,1) at -1: u = (x+1)^3/6.
    let q = PotentialExpr::constant(0.0);
    let seg = Segment::new(-1.0, -0.5, 1.0, &q).unwrap();
    let y = integrate(&seg, StateVec::real(0.0, 0.0, 0.0, 1.0), C64::new(0.0, 0.0), ACC).unwrap();
    let t: f64 = 0.5;
    assert!(max_diff(y, [t.powi(3) / 6.0, t * t / 2.0, t, 1.0]) < 1e-12);
}

#[test]
fn hand_case_has_zero_eigenvalue_with_linear_eigenfunction() {
    let p = relaxed([0.0, 1.0]);
    let cfg = ScanConfig {
        s_max: 3.0,
        ..ScanConfig::default()
    };
    let recs = find_eigenvalues(&p, &cfg).unwrap();
    let zero = recs
        .iter()
        .find(|r| r.lambda.norm() < 1e-8)
        .unwrap_or_else(|| panic!("no zero eigenvalue in {recs:?}"));

    let xs: Vec<f64> = (0..=40).map(|i| -1.0 + i as f64 / 20.0).collect();
    let (k3, k4) = null_direction(&p, zero.lambda, ACC).unwrap();
    let ef = eigenfunction(&p, zero.lambda, k3, k4, &xs, ACC).unwrap();
    // Peak of x + 1 on [-1, 1] is 2.
    let err = ef
        .samples
        .iter()
        .map(|s| (s.u - C64::new((s.x + 1.0) / 2.0, 0.0)).norm())
        .fold(0.0, f64::max);
    assert!(err < 1e-6, "sup error {err}");
    assert_eq!(ef.samples.iter().filter(|s| s.x == 0.0).count(), 2);
    assert!(ef.samples.iter().any(|s| s.x == 0.0 && s.side == Side::Right));
}

/// Right-end determinant for u(-1) = u'(-1) = 0 on [-1, 1] with continuity at 0,
/// from the basis `cosh z - cos z`, `sinh z - sin z`, `z = k (x + 1)`.
fn clamped_left_determinant(k: f64) -> f64 {
    let z = 2.0 * k;
    let l = k.powi(4);
    let (ch, c, sh, s) = (z.cosh(), z.cos(), z.sinh(), z.sin());
    let f = [ch - c, k * (sh + s), k * k * (ch + c), k.powi(3) * (sh - s)];
    let g = [sh - s, k * (ch - c), k * k * (sh + s), k.powi(3) * (ch + c)];
    let row = |v: [f64; 4]| (l * v[0] + v[3], l * v[1] + v[2]);
    let (a, b) = (row(f), row(g));
    a.0 * b.1 - a.1 * b.0
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(lo) * f(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn swapped_beta_hand_case_matches_closed_form() {
    let p = relaxed([1.0, 0.0]);
    let cfg = ScanConfig {
        s_max: 3.0,
        ..ScanConfig::default()
    };
    let recs = find_eigenvalues(&p, &cfg).unwrap();
    assert!(
        recs.iter().all(|r| r.lambda.norm() > 1e-3),
        "lambda = 0 is not an eigenvalue: {recs:?}"
    );

    let k = bisect(clamped_left_determinant, 0.6, 0.9);
    let expected = k.powi(4);
    let found = recs
        .iter()
        .filter(|r| r.lambda.re > 0.0)
        .map(|r| r.lambda.re)
        .fold(f64::INFINITY, f64::min);
    assert!((found - expected).abs() < 1e-9 * expected, "{found} vs {expected}");
    assert_eq!(count_in_disc(&p, C64::new(0.0, 0.0), 0.2, ACC, -0.5).unwrap(), 0);
}

#[test]
fn hand_case_zero_is_counted_once() {
    let p = relaxed([0.0, 1.0]);
    assert_eq!(count_in_disc(&p, C64::new(0.0, 0.0), 0.3, ACC, -0.5).unwrap(), 1);
}

#[test]
fn matrix_oracle_sees_the_hand_case_zero() {
    let p = relaxed([0.0, 1.0]);
    let op = discretize(&p, 200).unwrap();
    let vals = solve_discrete(&op, 3).unwrap();
    let smallest = vals.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
    assert!(smallest < 1e-3, "{vals:?}");
}

#[test]
fn reference_spectrum_starts_where_expected() {
    let p = Problem::reference();
    let cfg = ScanConfig {
        s_max: 5.0,
        ..ScanConfig::default()
    };
    let recs = find_eigenvalues(&p, &cfg).unwrap();
    for (i, r) in recs.iter().enumerate() {
        assert_eq!(r.n, i);
        assert!(r.lambda.im.abs() < 1e-12);
    }
    assert!(recs.windows(2).all(|w| w[0].lambda.re <= w[1].lambda.re));
    // On the positive axis the first root sits left of the first odd multiple of pi/2.
    let first = recs.iter().find(|r| r.lambda.re > 1e-6).unwrap();
    assert!(first.s.re > 1.0 && first.s.re < std::f64::consts::FRAC_PI_2 + 0.2);
}
