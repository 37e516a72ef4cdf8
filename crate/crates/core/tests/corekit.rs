//! Field arithmetic, ball containment and exact reduction, checked
//! against componentwise rational formulas.

use mahler::corekit::{read_dag, reduce_exact, ComplexBox, DagWriter, Disk, GaussianRational, PrecisionPolicy, SymbolicValue, Transcendental};
use proptest::prelude::*;
use rug::Rational;

fn gauss() -> impl Strategy<Value = GaussianRational> {
    (-200i64..=200, 1i64..=50, -200i64..=200, 1i64..=50)
        .prop_map(|(a, b, c, d)| GaussianRational::new(Rational::from((a, b)), Rational::from((c, d))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn product_matches_components(x in gauss(), y in gauss()) {
        let p = &x * &y;
        prop_assert_eq!(p.re.clone(), Rational::from(&x.re * &y.re) - Rational::from(&x.im * &y.im));
        prop_assert_eq!(p.im.clone(), Rational::from(&x.re * &y.im) + Rational::from(&x.im * &y.re));
    }

    #[test]
    fn division_inverts(x in gauss(), y in gauss()) {
        prop_assume!(!y.is_zero());
        let q = x.checked_div(&y).unwrap();
        prop_assert_eq!(&q * &y, x);
    }

    #[test]
    fn text_round_trip(x in gauss(), r in 1i64..=99) {
        prop_assert_eq!(x.to_string().parse::<GaussianRational>().unwrap(), x.clone());
        let d = Disk::new(x, Rational::from((r, 7))).unwrap();
        prop_assert_eq!(d.to_string().parse::<Disk>().unwrap(), d);
    }

    #[test]
    fn balls_contain_exact_results(x in gauss(), y in gauss(), prec in prop::sample::select(vec![64u32, 128, 256])) {
        let (bx, by) = (ComplexBox::from_gaussian(&x, prec), ComplexBox::from_gaussian(&y, prec));
        prop_assert!(bx.add(&by).contains_gaussian(&(&x + &y)));
        prop_assert!(bx.sub(&by).contains_gaussian(&(&x - &y)));
        prop_assert!(bx.mul(&by).contains_gaussian(&(&x * &y)));
        prop_assert!(bx.pow(3).contains_gaussian(&x.pow(3)));
        if !y.is_zero() {
            prop_assert!(bx.div(&by).unwrap().contains_gaussian(&x.checked_div(&y).unwrap()));
        }
    }

    #[test]
    fn height_bounds_abs(x in gauss()) {
        // |x| <= |re| + |im| and abs_upper is an upper bound on |x|
        let up = x.abs_upper();
        prop_assert!(Rational::from(up.square_ref()) >= x.norm_sqr());
    }

    #[test]
    fn transcendental_parts_cancel(x in gauss(), y in gauss(), a in -8i64..=8) {
        prop_assume!(!y.is_zero() && a != 0);
        let t = SymbolicValue::base_eval(Transcendental::Exp, &SymbolicValue::exact(GaussianRational::ratio(a, 3)));
        let qx = SymbolicValue::exact(x.clone());
        let qy = SymbolicValue::exact(y.clone());
        // (x + t) - t
        let v = SymbolicValue::sub(&SymbolicValue::add(&qx, &t), &t);
        prop_assert_eq!(reduce_exact(&v), Some(x.clone()));
        // (x t) / (y t)
        let policy = PrecisionPolicy::default();
        let w = SymbolicValue::div(&SymbolicValue::mul(&qx, &t), &SymbolicValue::mul(&qy, &t), &policy).unwrap();
        prop_assert_eq!(reduce_exact(&w), Some(x.checked_div(&y).unwrap()));
        // the value itself is not in K
        prop_assert_eq!(reduce_exact(&SymbolicValue::add(&qx, &t)), None);
    }

    #[test]
    fn dag_text_round_trip(x in gauss(), a in -5i64..=5, e in 1u32..=4) {
        let t = SymbolicValue::base_eval(Transcendental::Sin, &SymbolicValue::exact(GaussianRational::ratio(a, 2)));
        let v = SymbolicValue::pow(&SymbolicValue::add(&t, &SymbolicValue::exact(x)), e);
        let mut w = DagWriter::new();
        let root = w.add(&v);
        let lines: Vec<&str> = w.lines().iter().map(String::as_str).collect();
        let back = read_dag(&lines, &PrecisionPolicy::default()).unwrap();
        // hash-consing returns the same node
        prop_assert_eq!(&back[root], &v);
    }
}

#[test]
fn exp_ball_near_pi_i() {
    // e^(i pi) = -1 within the enclosure
    let b = ComplexBox::pi(256);
    let i_pi = ComplexBox::from_parts(rug::Float::new(256), b.re().clone(), b.rad().clone());
    let e = i_pi.exp();
    assert!(e.contains_gaussian(&GaussianRational::from_int(-1)));
    assert!(e.rad_f64() < 1e-70);
}
