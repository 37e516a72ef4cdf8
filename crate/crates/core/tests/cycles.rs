//! Composition identity, fixed points of `e^z + z + eps`, and census
//! bookkeeping. Oracles iterate directly in ball arithmetic or use the
//! closed-form fixed points `log(-eps) + 2 pi i j`.

use mahler::corekit::{ComplexBox, Disk, GaussianRational, PrecisionPolicy};
use mahler::cycles::{admissible_multiplier, census, phi_check, search_cycles, CycleStatus, SeedGrid};
use mahler::entire::{BaseFunction, Pencil, Polynomial};
use mahler::rootcount::count_zeros;
use num_complex::Complex64;
use proptest::prelude::*;
use rug::{Float, Rational};

fn g(r: &str) -> GaussianRational {
    r.parse().unwrap()
}

/// Twenty dyadic points spread over the unit disk.
fn samples() -> Vec<GaussianRational> {
    (0..20)
        .map(|i| {
            let t = i as f64 * 2.399963;
            let r = 0.95 * ((i as f64 + 0.5) / 20.0).sqrt();
            let z = Complex64::from_polar(r, t);
            GaussianRational::new(
                Rational::from_f64((z.re * 1024.0).round() / 1024.0).unwrap(),
                Rational::from_f64((z.im * 1024.0).round() / 1024.0).unwrap(),
            )
        })
        .collect()
}

/// `f^k(z) - g^k(z)` by direct iteration at 256 bits.
fn direct_difference(eps: &GaussianRational, k: usize, z: &GaussianRational) -> ComplexBox {
    let e = ComplexBox::from_gaussian(eps, 256);
    let mut a = ComplexBox::from_gaussian(z, 256);
    let mut b = a.clone();
    for _ in 0..k {
        a = a.exp().add(&e);
        b = b.exp();
    }
    a.sub(&b)
}

#[test]
fn phi_one_is_p() {
    let p = Polynomial::from_ints(&[1, -2, 3]);
    let exp = BaseFunction::supplied("exp").unwrap();
    for z in ["1/2:1/4", "-3/8:0", "0:-1/2"] {
        let z = g(z);
        let r = phi_check(&exp, &p, &GaussianRational::ratio(1, 1000), 1, &z, 1e-12, &PrecisionPolicy::default()).unwrap();
        assert_eq!(r.exact, Some(p.eval_exact(&z)));
        assert!(r.phi.contains_gaussian(&p.eval_exact(&z)));
    }
}

#[test]
fn affine_residual_vanishes() {
    let base = BaseFunction::polynomial(Polynomial::new(vec![g("1/4:0"), g("1/2:0")]));
    for k in 1..=4 {
        let r = phi_check(&base, &Polynomial::one(), &g("1/8:0"), k, &g("1/2:-1/4"), 1e-12, &PrecisionPolicy::default()).unwrap();
        assert_eq!(r.residual, 0.0, "k = {k}");
        // phi_k = 1 + 1/2 + ... + 1/2^(k-1)
        let want = Rational::from(2) - Rational::from((1, 1u64 << (k - 1)));
        assert_eq!(r.exact, Some(GaussianRational::real(want)));
    }
}

#[test]
fn exponential_residuals_and_linear_scaling() {
    let exp = BaseFunction::supplied("exp").unwrap();
    let policy = PrecisionPolicy::default();
    let eps = GaussianRational::ratio(1, 1000);
    let half = GaussianRational::ratio(1, 2000);
    for z in samples() {
        for k in 1..=3 {
            let full = phi_check(&exp, &Polynomial::one(), &eps, k, &z, 1e-15, &policy).unwrap();
            assert!(full.residual <= 1e-9, "k = {k}, z = {z}: {}", full.residual);
            let lin = ComplexBox::from_gaussian(&eps, 256).mul(&full.phi);
            let direct = direct_difference(&eps, k, &z);
            assert!(lin.sub(&direct).abs_upper() <= 1e-9);

            let halved = phi_check(&exp, &Polynomial::one(), &half, k, &z, 1e-15, &policy).unwrap();
            let ratio = ComplexBox::from_gaussian(&half, 256).mul(&halved.phi).div(&lin).unwrap();
            let (lo, hi) = (Float::with_val(64, 0.49), Float::with_val(64, 0.51));
            let re_lo = Float::with_val(64, ratio.re() - ratio.rad());
            let re_hi = Float::with_val(64, ratio.re() + ratio.rad());
            assert!(re_lo >= lo && re_hi <= hi, "k = {k}, z = {z}: {ratio}");
            assert!(ratio.im().to_f64().abs() + ratio.rad_f64() < 0.01);
        }
    }
}

fn exp_plus_z(eps: &str) -> Pencil<BaseFunction> {
    Pencil { g: BaseFunction::supplied("exp+z").unwrap(), eps: g(eps), p: Polynomial::one() }
}

#[test]
fn exp_plus_z_has_no_fixed_points() {
    // fixed points of e^z + z are zeros of e^z
    let exp = BaseFunction::supplied("exp").unwrap();
    let policy = PrecisionPolicy::default();
    for r in [1i64, 5, 10, 20] {
        assert_eq!(count_zeros(&exp, &Disk::origin(Rational::from(r)).unwrap(), &policy).unwrap().count, 0);
    }
    let f = exp_plus_z("0:0");
    let found = search_cycles(&f, 1, &"0,10".parse().unwrap(), SeedGrid::default(), &policy).unwrap();
    assert!(found.is_empty());
}

#[test]
fn half_shift_gives_four_fixed_points() {
    let f = exp_plus_z("1/2:0");
    let policy = PrecisionPolicy::default();
    let found = search_cycles(&f, 1, &"0,10".parse().unwrap(), SeedGrid::default(), &policy).unwrap();
    assert_eq!(found.len(), 4);
    // log(1/2) + (2j+1) pi i for j in {-2, -1, 0, 1}
    let mut want: Vec<Complex64> =
        [-3.0, -1.0, 1.0, 3.0].iter().map(|&j: &f64| Complex64::new(0.5f64.ln(), j * std::f64::consts::PI)).collect();
    for c in &found {
        let z = c.points[0].enclosure.center_c64();
        let i = want.iter().position(|w| (w - z).norm() < 1e-12).expect("closed form");
        want.remove(i);
        assert!(c.points[0].enclosure.rad_f64() <= 1e-10);
        assert!(c.multiplier.contains_gaussian(&g("1/2:0")));
        assert!(c.multiplier.rad_f64() <= 1e-10);
        assert!(admissible_multiplier(c));
        assert!(!c.repelling);
    }
}

#[test]
fn unit_shift_is_superattracting() {
    // e^z = -1 puts f' = e^z + 1 at zero
    let f = exp_plus_z("1:0");
    let found = search_cycles(&f, 1, &"0,10".parse().unwrap(), SeedGrid::default(), &PrecisionPolicy::default()).unwrap();
    assert!(!found.is_empty());
    for c in &found {
        assert!(c.multiplier.contains_gaussian(&GaussianRational::zero()));
        assert!(!admissible_multiplier(c));
    }
}

#[test]
fn census_counts_are_consistent() {
    // z^2 - 1: fixed points (1 +- sqrt 5)/2, one 2-cycle {0, -1}
    let f = Polynomial::from_ints(&[-1, 0, 1]);
    let c = census(&f, 2, &"0,3".parse().unwrap(), &[g("0:0"), g("-1:0")], SeedGrid::default(), &PrecisionPolicy::default())
        .unwrap();
    assert!(c.consistent());
    assert_eq!((c.per(1), c.orb(1)), (2, 2));
    assert_eq!((c.per(2), c.orb(2)), (2, 1));
    assert_eq!(c.count_status(2, CycleStatus::Nailed), 1);
    assert_eq!(c.count_status(1, CycleStatus::Free), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn quadratic_cycles_solve_the_period_equation(cr in -8i64..=8, ci in -8i64..=8) {
        let c = GaussianRational::new(Rational::from((cr, 8)), Rational::from((ci, 8)));
        let f = Polynomial::new(vec![c, GaussianRational::zero(), GaussianRational::one()]);
        let found = search_cycles(&f, 2, &"0,3".parse().unwrap(), SeedGrid::default(), &PrecisionPolicy::default()).unwrap();
        prop_assert!(found.len() <= 1);
        for cyc in &found {
            // exact 2-cycles of z^2 + c solve z^2 + z + c + 1 = 0
            for (i, p) in cyc.points.iter().enumerate() {
                let z = &p.enclosure;
                let v = z.square().add(z).add(&ComplexBox::from_gaussian(&f.coeff(0), 256)).add(&ComplexBox::exact_int(1, 256));
                prop_assert!(v.abs_upper() < 1e-20);
                prop_assert!(f.eval_box(z).overlaps(&cyc.points[(i + 1) % 2].enclosure));
            }
        }
    }
}
