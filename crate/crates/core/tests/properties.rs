use proptest::prelude::*;
use spectra4::asymptotics::{AsymGrid, Family};
use spectra4::basis::{Direction, TransmissionMap};
use spectra4::charfn::{char_fn, CharSample};
use spectra4::ode::{integrate, integrate_fixed, Segment};
use spectra4::problem::principal_fourth_root;
use spectra4::spectrum::{renumber, EigRecord, Method};
use spectra4::volterra::{picard_solve, VolterraSpec, Which};
use spectra4::{parse_potential, PotentialExpr, Problem, StateVec, C64};

fn c64() -> impl Strategy<Value = C64> {
    (-10.0..10.0f64, -10.0..10.0f64).prop_map(|(re, im)| C64::new(re, im))
}

fn state() -> impl Strategy<Value = StateVec> {
    (c64(), c64(), c64(), c64()).prop_map(|(a, b, c, d)| StateVec::new(a, b, c, d))
}

fn close(a: StateVec, b: StateVec, tol: f64) -> bool {
    let scale = a.max_norm().max(b.max_norm()).max(1.0);
    a.sub(b).max_norm() <= tol * scale
}

fn problem() -> impl Strategy<Value = Problem> {
    (0.5..2.0f64, 0.5..2.0f64, -2.0..2.0f64, 0.1..3.0f64, 0.1..3.0f64).prop_map(|(a1, a2, b1, d1, d2)| Problem {
        a1,
        a2,
        beta1: b1,
        beta2: 1.0,
        delta1: d1,
        delta2: d2,
        ..Problem::reference()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn potential_matches_direct_evaluation(c1 in -5.0..5.0f64, c2 in -3.0..3.0f64, c3 in 0.1..4.0f64, x in -1.0..1.0f64) {
        let text = format!("{c1}*x^2 + sin({c2}*x) - exp(x)/{c3} + cosh(x)*-1");
        let e = parse_potential(&text).unwrap();
        let direct = c1 * x * x + (c2 * x).sin() - x.exp() / c3 - x.cosh();
        let v = e.eval(x).unwrap();
        prop_assert!((v - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
        prop_assert_eq!(v.to_bits(), e.eval(x).unwrap().to_bits());
    }

    #[test]
    fn potential_display_round_trips(c1 in -5.0..5.0f64, c2 in -3.0..3.0f64, x in -1.0..1.0f64) {
        let e = parse_potential(&format!("({c1} - x)^3 * cos({c2}*x) / (2 + x^2)")).unwrap();
        let again = PotentialExpr::parse(&e.to_string()).unwrap();
        prop_assert_eq!(e.eval(x).unwrap().to_bits(), again.eval(x).unwrap().to_bits());
    }

    #[test]
    fn fourth_root_is_principal(z in c64()) {
        prop_assume!(z.norm() > 1e-6);
        let s = principal_fourth_root(z);
        let arg = s.arg();
        prop_assert!(arg > -std::f64::consts::FRAC_PI_4 - 1e-15 && arg <= std::f64::consts::FRAC_PI_4 + 1e-15);
        let s4 = s * s * s * s;
        prop_assert!((s4 - z).norm() <= 1e-14 * z.norm());
    }

    #[test]
    fn transmission_inverse_and_unit_determinant(p in problem(), l in c64(), y in state()) {
        let fwd = TransmissionMap::new(&p, l, Direction::Forward);
        let back = TransmissionMap::new(&p, l, Direction::Backward);
        prop_assert!(close(back.apply(fwd.apply(y)), y, 1e-13));
        prop_assert!(close(fwd.inverse().apply(fwd.apply(y)), y, 1e-13));
        prop_assert!((fwd.determinant() - C64::new(1.0, 0.0)).norm() <= 1e-14);
    }

    #[test]
    fn grid_spacing_is_a_pi(p in problem(), n in 2usize..40) {
        for fam in [Family::Prime, Family::DoublePrime] {
            let g = AsymGrid::new(&p, fam, n);
            prop_assert_eq!(g.entries.len(), n);
            let a = fam.coefficient(&p);
            for w in g.entries.windows(2) {
                prop_assert!(w[1] > w[0]);
                prop_assert!((w[1] - w[0] - a * std::f64::consts::PI).abs() <= 1e-12 * w[1]);
            }
        }
    }

    #[test]
    fn renumbering_sorts_and_counts_from_zero(vals in proptest::collection::vec(c64(), 0..20)) {
        let mut recs: Vec<EigRecord> = vals.iter().map(|&l| EigRecord::new(l, 0.0, 0.0, Method::Shooting)).collect();
        renumber(&mut recs);
        for (i, r) in recs.iter().enumerate() {
            prop_assert_eq!(r.n, i);
        }
        for w in recs.windows(2) {
            let (a, b) = (w[0].lambda, w[1].lambda);
            prop_assert!(a.re < b.re || (a.re == b.re && a.im <= b.im));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fixed_step_solution_is_linear(y1 in state(), y2 in state(), c in c64(), l in c64(), q0 in -3.0..3.0f64) {
        let q = PotentialExpr::constant(q0);
        let seg = Segment::new(-1.0, 0.0, 1.0, &q).unwrap();
        let lin = integrate_fixed(&seg, y1.add(y2.scale(c)), l, 64).unwrap();
        let sep = integrate_fixed(&seg, y1, l, 64).unwrap().add(integrate_fixed(&seg, y2, l, 64).unwrap().scale(c));
        prop_assert!(close(lin, sep, 1e-12));
    }

    #[test]
    fn real_data_stays_real(u in -2.0..2.0f64, up in -2.0..2.0f64, l in -50.0..50.0f64, q0 in -3.0..3.0f64) {
        let q = parse_potential(&format!("{q0}*sin(3*x)")).unwrap();
        let seg = Segment::new(0.0, 1.0, 1.3, &q).unwrap();
        let y = integrate(&seg, StateVec::real(u, up, 0.5, -1.0), C64::new(l, 0.0), 1e-10).unwrap();
        for v in y.to_array() {
            prop_assert!(v.im == 0.0);
        }
    }

    #[test]
    fn char_fn_commutes_with_conjugation(re in -80.0..80.0f64, im in 0.5..60.0f64) {
        let p = Problem::reference();
        let l = C64::new(re, im);
        let w = char_fn(&p, l, 1e-10).unwrap();
        let wc = char_fn(&p, l.conj(), 1e-10).unwrap();
        let conj = CharSample { w_scaled: w.w_scaled.conj(), lambda: l.conj(), s: wc.s, ..w };
        prop_assert!(conj.relative_difference(&wc) <= 1e-8);
    }

    #[test]
    fn kernel_diagonal_values(sr in 0.2..8.0f64, si in -0.5..0.5f64, a1 in 0.5..2.0f64, q0 in -2.0..2.0f64) {
        let p = Problem { a1, q_left: PotentialExpr::constant(q0), ..Problem::reference() };
        let s = C64::new(sr, si);
        let spec = VolterraSpec::new(&p, s * s * s * s, Which::Phi11, 1e-10).unwrap();
        let [k0, k1, k2] = spec.kernel(0.0);
        let slope = -(a1 * a1) / (2.0 * spec.s * spec.s);
        prop_assert!(k0.norm() <= 1e-12);
        prop_assert!((k1 - slope).norm() <= 1e-12 * slope.norm());
        prop_assert!(k2.norm() <= 1e-12 * slope.norm() * sr / a1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn picard_contracts_within_the_kernel_bound(s in 2.0..4.0f64, q0 in 0.1..1.0f64) {
        let p = Problem { q_left: PotentialExpr::constant(q0), ..Problem::reference() };
        let spec = VolterraSpec::new(&p, C64::new(s.powi(4), 0.0), Which::Phi11, 1e-10).unwrap();
        let sol = picard_solve(&spec, 256, 200).unwrap();
        prop_assert!(sol.kernel_bound < 1.0);
        prop_assert!(sol.contraction_ratio <= sol.kernel_bound);
        prop_assert!(sol.differences.last().copied().unwrap_or(0.0) <= 1e-12 * sol.u.iter().map(|u| u.norm()).fold(1.0, f64::max));
    }
}
