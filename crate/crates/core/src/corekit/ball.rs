//! Complex ball arithmetic over MPFR.
//!
//! A [`ComplexBox`] is a disk `|z - c| <= r`. Centers carry a working
//! precision; radii are 64-bit floats rounded upward. Each operation adds
//! a bound for its own rounding error to the output radius.

use std::cmp::Ordering;
use std::fmt;

use num_complex::Complex64;
use rug::float::{Constant, Round};
use rug::ops::AssignRound;
use rug::{Assign, Float, Rational};

use super::gauss::GaussianRational;

pub const RAD_PREC: u32 = 64;

pub(crate) fn up<T>(val: T) -> Float
where
    Float: AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(RAD_PREC, val, Round::Up).0
}

pub(crate) fn down<T>(val: T) -> Float
where
    Float: AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(RAD_PREC, val, Round::Down).0
}

pub(crate) fn mag_zero() -> Float {
    Float::new(RAD_PREC)
}

pub(crate) fn mag_inf() -> Float {
    Float::with_val(RAD_PREC, rug::float::Special::Infinity)
}

/// One unit in the last place of `x`, an upper bound on the error of
/// rounding to nearest.
pub(crate) fn ulp(x: &Float) -> Float {
    if !x.is_finite() {
        return mag_inf();
    }
    match x.get_exp() {
        None => mag_zero(),
        Some(e) => Float::with_val(RAD_PREC, 1u32) << (e - x.prec() as i32),
    }
}

/// `|a| + |b|` rounded up, for two rounding-error terms.
fn ulp2(a: &Float, b: &Float) -> Float {
    up(&ulp(a) + &ulp(b))
}

#[derive(Clone, Debug)]
pub struct ComplexBox {
    re: Float,
    im: Float,
    rad: Float,
}

impl ComplexBox {
    pub fn from_parts(re: Float, im: Float, rad: Float) -> Self {
        let rad = up(&rad);
        ComplexBox { re, im, rad }
    }

    pub fn zero(prec: u32) -> Self {
        ComplexBox { re: Float::new(prec), im: Float::new(prec), rad: mag_zero() }
    }

    pub fn exact_int(n: i64, prec: u32) -> Self {
        ComplexBox { re: Float::with_val(prec, n), im: Float::new(prec), rad: mag_zero() }
    }

    pub fn from_rational(r: &Rational, prec: u32) -> Self {
        let re = Float::with_val(prec, r);
        let rad = ulp(&re);
        ComplexBox { re, im: Float::new(prec), rad }
    }

    pub fn from_gaussian(q: &GaussianRational, prec: u32) -> Self {
        let re = Float::with_val(prec, &q.re);
        let im = Float::with_val(prec, &q.im);
        let rad = ulp2(&re, &im);
        ComplexBox { re, im, rad }
    }

    /// Point box; exact when `prec >= 53`.
    pub fn from_c64(z: Complex64, prec: u32) -> Self {
        let re = Float::with_val(prec, z.re);
        let im = Float::with_val(prec, z.im);
        let rad = if prec >= 53 { mag_zero() } else { ulp2(&re, &im) };
        ComplexBox { re, im, rad }
    }

    /// Disk around `z` with radius `r`.
    pub fn disk_c64(z: Complex64, r: f64, prec: u32) -> Self {
        let mut b = Self::from_c64(z, prec.max(53));
        b.rad = up(&b.rad + r.abs());
        b
    }

    pub fn pi(prec: u32) -> Self {
        let re = Float::with_val(prec, Constant::Pi);
        let rad = ulp(&re);
        ComplexBox { re, im: Float::new(prec), rad }
    }

    pub fn re(&self) -> &Float {
        &self.re
    }

    pub fn im(&self) -> &Float {
        &self.im
    }

    pub fn rad(&self) -> &Float {
        &self.rad
    }

    pub fn prec(&self) -> u32 {
        self.re.prec().max(self.im.prec())
    }

    pub fn center(&self) -> ComplexBox {
        ComplexBox { re: self.re.clone(), im: self.im.clone(), rad: mag_zero() }
    }

    pub fn center_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn rad_f64(&self) -> f64 {
        self.rad.to_f64_round(Round::Up)
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite() && self.rad.is_finite()
    }

    /// Grow the radius by `r` (rounded up).
    pub fn inflate(&self, r: &Float) -> ComplexBox {
        let mut b = self.clone();
        b.rad = up(&self.rad + r);
        b
    }

    pub fn with_rad(&self, r: &Float) -> ComplexBox {
        let mut b = self.clone();
        b.rad = up(r);
        b
    }

    /// Re-round the center to `prec` bits.
    pub fn round_to(&self, prec: u32) -> ComplexBox {
        let re = Float::with_val(prec, &self.re);
        let im = Float::with_val(prec, &self.im);
        let err = ulp2(&re, &im);
        ComplexBox { re, im, rad: up(&self.rad + &err) }
    }

    /// Upper bound on `|center|`.
    pub fn center_abs_upper(&self) -> Float {
        up(self.re.hypot_ref(&self.im))
    }

    /// Lower bound on `|center|`.
    pub fn center_abs_lower(&self) -> Float {
        down(self.re.hypot_ref(&self.im))
    }

    /// Upper bound on `|z|` over the box.
    pub fn abs_upper(&self) -> Float {
        up(&self.center_abs_upper() + &self.rad)
    }

    /// Lower bound on `|z|` over the box, clamped at zero.
    pub fn abs_lower(&self) -> Float {
        let l = down(&self.center_abs_lower() - &self.rad);
        if l.is_sign_negative() || l.is_nan() {
            mag_zero()
        } else {
            l
        }
    }

    pub fn excludes_zero(&self) -> bool {
        self.is_finite() && self.abs_lower() > 0
    }

    fn dist_upper(&self, other: &ComplexBox) -> Float {
        let dr = Float::with_val_round(RAD_PREC, &self.re - &other.re, Round::AwayZero).0;
        let di = Float::with_val_round(RAD_PREC, &self.im - &other.im, Round::AwayZero).0;
        up(dr.hypot_ref(&di))
    }

    fn dist_lower(&self, other: &ComplexBox) -> Float {
        let dr = Float::with_val_round(RAD_PREC, &self.re - &other.re, Round::Zero).0;
        let di = Float::with_val_round(RAD_PREC, &self.im - &other.im, Round::Zero).0;
        down(dr.hypot_ref(&di))
    }

    /// Certified: every point of `other` lies in `self`.
    pub fn contains(&self, other: &ComplexBox) -> bool {
        if !self.is_finite() || !other.is_finite() {
            return false;
        }
        up(&self.dist_upper(other) + &other.rad) <= self.rad
    }

    /// Certified: `other` lies in the interior of `self`.
    pub fn contains_strictly(&self, other: &ComplexBox) -> bool {
        if !self.is_finite() || !other.is_finite() {
            return false;
        }
        up(&self.dist_upper(other) + &other.rad) < self.rad
    }

    /// Certified: the two boxes share no point.
    pub fn disjoint(&self, other: &ComplexBox) -> bool {
        self.is_finite()
            && other.is_finite()
            && self.dist_lower(other) > up(&self.rad + &other.rad)
    }

    /// Not certified disjoint.
    pub fn overlaps(&self, other: &ComplexBox) -> bool {
        !self.disjoint(other)
    }

    pub fn contains_gaussian(&self, q: &GaussianRational) -> bool {
        let p = self.prec().max(64) + 64;
        self.contains(&ComplexBox::from_gaussian(q, p))
    }

    /// Lower bound on distance between a point of `self` and a point of
    /// `other`, clamped at zero.
    pub fn gap_lower(&self, other: &ComplexBox) -> Float {
        let g = down(&self.dist_lower(other) - &up(&self.rad + &other.rad));
        if g.is_sign_negative() || g.is_nan() {
            mag_zero()
        } else {
            g
        }
    }

    /// Smallest ball containing both.
    pub fn hull(&self, other: &ComplexBox) -> ComplexBox {
        let d = self.dist_upper(other);
        let r1 = up(&d + &other.rad);
        let rad = if r1 > self.rad { r1 } else { self.rad.clone() };
        ComplexBox { re: self.re.clone(), im: self.im.clone(), rad }
    }

    pub fn add(&self, o: &ComplexBox) -> ComplexBox {
        let p = self.prec().max(o.prec());
        let re = Float::with_val(p, &self.re + &o.re);
        let im = Float::with_val(p, &self.im + &o.im);
        let rad = up(&up(&self.rad + &o.rad) + &ulp2(&re, &im));
        ComplexBox { re, im, rad }
    }

    pub fn sub(&self, o: &ComplexBox) -> ComplexBox {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> ComplexBox {
        ComplexBox { re: Float::with_val(self.re.prec(), -&self.re), im: Float::with_val(self.im.prec(), -&self.im), rad: self.rad.clone() }
    }

    pub fn mul(&self, o: &ComplexBox) -> ComplexBox {
        let p = self.prec().max(o.prec());
        let wide = |a: &Float, b: &Float| Float::with_val(a.prec() + b.prec(), a * b);
        let ac = wide(&self.re, &o.re);
        let bd = wide(&self.im, &o.im);
        let ad = wide(&self.re, &o.im);
        let bc = wide(&self.im, &o.re);
        let re = Float::with_val(p, &ac - &bd);
        let im = Float::with_val(p, &ad + &bc);
        let a = self.center_abs_upper();
        let b = o.center_abs_upper();
        let r = up(&up(&a * &o.rad) + &up(&b * &self.rad));
        let r = up(&r + &up(&self.rad * &o.rad));
        let rad = up(&r + &ulp2(&re, &im));
        ComplexBox { re, im, rad }
    }

    pub fn square(&self) -> ComplexBox {
        self.mul(self)
    }

    pub fn mul_rational(&self, q: &Rational) -> ComplexBox {
        self.mul(&ComplexBox::from_rational(q, self.prec().max(64)))
    }

    pub fn mul_int(&self, n: i64) -> ComplexBox {
        self.mul(&ComplexBox::exact_int(n, self.prec().max(64)))
    }

    /// Multiply by the exact power of two `2^k`.
    pub fn mul_2si(&self, k: i32) -> ComplexBox {
        let re = Float::with_val(self.re.prec(), &self.re << k);
        let im = Float::with_val(self.im.prec(), &self.im << k);
        let rad = up(&self.rad << k);
        ComplexBox { re, im, rad }
    }

    pub fn pow(&self, e: u32) -> ComplexBox {
        let mut acc = ComplexBox::exact_int(1, self.prec());
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.square();
            }
        }
        acc
    }

    /// Reciprocal, or `None` when the box may contain zero.
    pub fn inv(&self) -> Option<ComplexBox> {
        if !self.excludes_zero() {
            return None;
        }
        let p = self.prec();
        let q = p + 16;
        let n2 = Float::with_val(q, self.re.hypot_ref(&self.im));
        let n2 = Float::with_val(q, n2.square_ref());
        let re = Float::with_val(p, Float::with_val(q, &self.re / &n2));
        let im = Float::with_val(p, -Float::with_val(q, &self.im / &n2));
        let l = self.center_abs_lower();
        // |1/c| * 2^(4-q) covers the intermediate roundings.
        let inv_l = up(&Float::with_val(RAD_PREC, 1u32) / &l);
        let err = up(&inv_l >> (q as i32 - 4));
        let gap = down(&l - &self.rad);
        let denom = down(&l * &gap);
        let r = up(&self.rad / &denom);
        let rad = up(&up(&r + &err) + &ulp2(&re, &im));
        Some(ComplexBox { re, im, rad })
    }

    pub fn div(&self, o: &ComplexBox) -> Option<ComplexBox> {
        o.inv().map(|i| self.mul(&i))
    }

    pub fn exp(&self) -> ComplexBox {
        let p = self.prec();
        let q = p + 20;
        let e = Float::with_val(q, self.re.exp_ref());
        let (mut s, mut c) = (Float::new(q), Float::new(q));
        (&mut s, &mut c).assign(self.im.sin_cos_ref());
        let re = Float::with_val(p, Float::with_val(2 * q, &e * &c));
        let im = Float::with_val(p, Float::with_val(2 * q, &e * &s));
        let e_up = up(self.re.exp_ref());
        if !e_up.is_finite() {
            return ComplexBox { re, im, rad: mag_inf() };
        }
        let err = up(&e_up >> (q as i32 - 4));
        let spread = up(&e_up * &up(self.rad.exp_m1_ref()));
        let rad = up(&up(&spread + &err) + &ulp2(&re, &im));
        ComplexBox { re, im, rad }
    }

    fn mul_i(&self) -> ComplexBox {
        ComplexBox { re: Float::with_val(self.im.prec(), -&self.im), im: self.re.clone(), rad: self.rad.clone() }
    }

    pub fn sin(&self) -> ComplexBox {
        // sin z = (e^{iz} - e^{-iz}) / (2i)
        let iz = self.mul_i();
        let d = iz.exp().sub(&iz.neg().exp());
        d.mul_i().neg().mul_2si(-1)
    }

    pub fn cos(&self) -> ComplexBox {
        let iz = self.mul_i();
        iz.exp().add(&iz.neg().exp()).mul_2si(-1)
    }

    /// The center as an exact element.
    pub fn to_gaussian_center(&self) -> GaussianRational {
        GaussianRational::new(
            self.re.to_rational().unwrap_or_default(),
            self.im.to_rational().unwrap_or_default(),
        )
    }
}

impl fmt::Display for ComplexBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{:.17e} {:+.17e}i +/- {:.3e}]",
            self.re.to_f64(),
            self.im.to_f64(),
            self.rad.to_f64_round(Round::Up)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_one_matches_series() {
        let b = ComplexBox::exact_int(1, 128).exp();
        let e = Float::with_val(256, 1u32).exp();
        let e = ComplexBox::from_parts(e, Float::new(256), mag_zero());
        assert!(b.contains(&e));
        assert!(b.rad_f64() < 1e-35);
    }

    #[test]
    fn inv_rejects_zero() {
        let b = ComplexBox::disk_c64(Complex64::new(0.1, 0.0), 0.2, 64);
        assert!(b.inv().is_none());
        let c = ComplexBox::disk_c64(Complex64::new(2.0, 0.0), 0.5, 64);
        let i = c.inv().unwrap();
        for x in [1.5, 2.0, 2.5] {
            assert!(i.contains(&ComplexBox::from_c64(Complex64::new(1.0 / x, 0.0), 64)));
        }
    }

    #[test]
    fn sin_cos_identity() {
        let z = ComplexBox::from_c64(Complex64::new(0.7, -1.3), 128);
        let s = z.sin();
        let c = z.cos();
        let one = s.square().add(&c.square());
        assert!(one.contains(&ComplexBox::exact_int(1, 128)));
        assert!(one.rad_f64() < 1e-30);
    }

    #[test]
    fn disjoint_and_contains() {
        let a = ComplexBox::disk_c64(Complex64::new(0.0, 0.0), 1.0, 64);
        let b = ComplexBox::disk_c64(Complex64::new(3.0, 0.0), 1.0, 64);
        let c = ComplexBox::disk_c64(Complex64::new(0.5, 0.0), 0.25, 64);
        assert!(a.disjoint(&b));
        assert!(a.contains(&c));
        assert!(!c.contains(&a));
    }
}
