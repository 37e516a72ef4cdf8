//! Zero counts against an exact-root oracle: polynomials are built from
//! known Gaussian-rational roots, so membership in a disk is decided in Q.

use mahler::corekit::{Disk, GaussianRational, PrecisionPolicy, SymbolicValue};
use mahler::entire::{BaseFunction, Pencil, Polynomial};
use mahler::rootcount::{count_zeros, rouche_delta};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Rational;

fn q(p: i64, d: i64) -> Rational {
    Rational::from((p, d))
}

fn from_roots(lead: &GaussianRational, roots: &[GaussianRational]) -> Polynomial {
    let mut p = Polynomial::constant(lead.clone());
    for r in roots {
        p = p.mul(&Polynomial::new(vec![-r, GaussianRational::one()]));
    }
    p
}

/// Roots strictly inside, or `None` if one sits on the circle.
fn oracle(roots: &[GaussianRational], disk: &Disk) -> Option<u64> {
    let r2 = Rational::from(disk.radius.square_ref());
    let mut n = 0;
    for z in roots {
        let d = (z - &disk.center).norm_sqr();
        if d == r2 {
            return None;
        }
        if d < r2 {
            n += 1;
        }
    }
    Some(n)
}

fn random_gauss(rng: &mut ChaCha8Rng, span: i64) -> GaussianRational {
    let d = rng.gen_range(1..=4);
    GaussianRational::new(q(rng.gen_range(-span..=span), d), q(rng.gen_range(-span..=span), d))
}

#[test]
fn fifty_random_polynomials_match_the_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let policy = PrecisionPolicy::default();
    let mut checked = 0;
    while checked < 60 {
        let deg = rng.gen_range(1..=6);
        let roots: Vec<GaussianRational> = (0..deg).map(|_| random_gauss(&mut rng, 8)).collect();
        let lead = loop {
            let l = random_gauss(&mut rng, 3);
            if !l.is_zero() {
                break l;
            }
        };
        let p = from_roots(&lead, &roots);
        let disk = Disk::new(random_gauss(&mut rng, 4), q(rng.gen_range(1..=24), rng.gen_range(1..=4))).unwrap();
        let Some(want) = oracle(&roots, &disk) else { continue };
        let got = count_zeros(&p, &disk, &policy).unwrap_or_else(|e| panic!("{p} on {disk}: {e}"));
        assert_eq!(got.count, want, "{p} on {disk}");
        assert!(got.certified);
        checked += 1;
    }
}

#[test]
fn delta_of_square_against_sampling() {
    let policy = PrecisionPolicy::default();
    let g = Polynomial::from_ints(&[0, 0, 1]);
    let p = Polynomial::from_ints(&[2, 1]);
    let d = rouche_delta(&g, &p, &SymbolicValue::zero(), &Rational::from(1), &policy).unwrap();
    // dense sampling of the boundary
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..20000 {
        let z = Complex64::from_polar(1.0, i as f64 * std::f64::consts::TAU / 20000.0);
        lo = lo.min((z * z).norm());
        hi = hi.max((z + 2.0).norm());
    }
    let sampled = lo / hi;
    assert!((sampled - 1.0 / 3.0).abs() < 1e-9);
    assert!(d <= 1.0 / 3.0 && d > (1.0 - 1e-4) / 3.0, "{d}");

    // counts survive ten perturbations at half the radius
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let half = d.to_f64() / 2.0;
    let unit = Disk::origin(Rational::from(1)).unwrap();
    for _ in 0..10 {
        let e = Complex64::from_polar(half, rng.gen_range(0.0..std::f64::consts::TAU));
        let eps = GaussianRational::new(
            Rational::from_f64(e.re).unwrap(),
            Rational::from_f64(e.im).unwrap(),
        );
        let f = Pencil { g: g.clone(), eps: eps.clone(), p: p.clone() };
        assert_eq!(count_zeros(&f, &unit, &policy).unwrap().count, 2);
        // the two roots of z^2 + e z + 2e directly
        let s = (e * e - 8.0 * e).sqrt();
        for r in [(-e + s) / 2.0, (-e - s) / 2.0] {
            assert!(r.norm() < 1.0);
        }
    }
}

#[test]
fn delta_of_exp_is_exp_minus_r() {
    let policy = PrecisionPolicy::default();
    let g = BaseFunction::supplied("exp").unwrap();
    for r in [1i64, 2, 5] {
        let d = rouche_delta(&g, &Polynomial::one(), &SymbolicValue::zero(), &Rational::from(r), &policy).unwrap();
        let want = (-(r as f64)).exp();
        assert!(d <= want && d >= want * (1.0 - 1e-4), "R = {r}: {d}");
    }
    let id = Polynomial::x();
    let d = rouche_delta(&id, &Polynomial::one(), &SymbolicValue::zero(), &Rational::from(1), &policy).unwrap();
    assert!(d <= 1.0 && d > 1.0 - 1e-4, "{d}");
}

#[test]
fn exp_has_no_zeros_anywhere() {
    let g = BaseFunction::supplied("exp").unwrap();
    for r in [1i64, 4, 10] {
        let c = count_zeros(&g, &Disk::origin(Rational::from(r)).unwrap(), &PrecisionPolicy::default()).unwrap();
        assert_eq!(c.count, 0);
    }
    // and the count is checked against the function, not the argument
    assert!(g.eval_c64(Complex64::new(0.0, 3.0)).norm() > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn counts_follow_the_roots(
        roots in prop::collection::vec((-16i64..=16, -16i64..=16, 1i64..=3), 1..=5),
        cx in -3i64..=3, cy in -3i64..=3, rn in 1i64..=40,
    ) {
        let roots: Vec<GaussianRational> = roots.into_iter().map(|(a, b, d)| GaussianRational::new(q(a, d), q(b, d))).collect();
        let disk = Disk::new(GaussianRational::new(q(cx, 1), q(cy, 1)), q(rn, 4)).unwrap();
        let want = oracle(&roots, &disk);
        prop_assume!(want.is_some());
        let p = from_roots(&GaussianRational::one(), &roots);
        let got = count_zeros(&p, &disk, &PrecisionPolicy::default()).unwrap();
        prop_assert_eq!(got.count, want.unwrap());
    }
}
