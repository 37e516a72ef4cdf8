//! Exact arithmetic in the Gaussian rationals `Q(i)`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use rug::{Float, Integer, Rational};

use crate::error::{Error, Result};

/// An element `re + im*i` of `Q(i)`.
///
/// ```
/// use mahler::corekit::GaussianRational;
/// let a: GaussianRational = "1/2:1/3".parse().unwrap();
/// let b = &a * &a;
/// assert_eq!(b.to_string(), "5/36:1/3");
/// ```
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct GaussianRational {
    pub re: Rational,
    pub im: Rational,
}

impl GaussianRational {
    pub fn new(re: Rational, im: Rational) -> Self {
        GaussianRational { re, im }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn i() -> Self {
        GaussianRational::new(Rational::new(), Rational::from(1))
    }

    pub fn from_int(n: i64) -> Self {
        GaussianRational::new(Rational::from(n), Rational::new())
    }

    pub fn real(r: Rational) -> Self {
        GaussianRational::new(r, Rational::new())
    }

    /// `p/q` as a real element.
    pub fn ratio(p: i64, q: i64) -> Self {
        GaussianRational::real(Rational::from((p, q)))
    }

    pub fn is_zero(&self) -> bool {
        self.re.cmp0() == Ordering::Equal && self.im.cmp0() == Ordering::Equal
    }

    pub fn conj(&self) -> Self {
        GaussianRational::new(self.re.clone(), Rational::from(-&self.im))
    }

    /// `re^2 + im^2`.
    pub fn norm_sqr(&self) -> Rational {
        Rational::from(self.re.square_ref()) + Rational::from(self.im.square_ref())
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByEnclosedZero("exact zero".into()));
        }
        let n = self.norm_sqr();
        Ok(GaussianRational::new(
            Rational::from(&self.re / &n),
            Rational::from(-&self.im) / &n,
        ))
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self> {
        Ok(self * &other.inv()?)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = GaussianRational::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    /// Largest absolute numerator or denominator over both parts.
    pub fn height(&self) -> Integer {
        let mut h = Integer::from(self.re.numer().abs_ref());
        for x in [self.re.denom(), self.im.denom()] {
            if *x > h {
                h = x.clone();
            }
        }
        let n = Integer::from(self.im.numer().abs_ref());
        if n > h {
            h = n;
        }
        h
    }

    /// Upper bound on `|self|` as an exact dyadic rational.
    pub fn abs_upper(&self) -> Rational {
        if self.im.is_zero() {
            return Rational::from(self.re.abs_ref());
        }
        if self.re.is_zero() {
            return Rational::from(self.im.abs_ref());
        }
        let prec = 64;
        let re = Float::with_val(prec + 64, &self.re);
        let im = Float::with_val(prec + 64, &self.im);
        let (h, _) = Float::with_val_round(prec, re.hypot_ref(&im), rug::float::Round::Up);
        // The parts above were rounded; pad by a relative 2^-60.
        let pad = Float::with_val(prec, &h >> 60);
        let (h, _) = Float::with_val_round(prec, &h + &pad, rug::float::Round::Up);
        h.to_rational().unwrap_or_default()
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }

    /// Nearest dyadic element with denominator `2^bits` in each part.
    pub fn round_dyadic(re: &Float, im: &Float, bits: u32) -> Self {
        let snap = |x: &Float| {
            let scaled = Float::with_val(x.prec() + bits + 8, x << bits);
            let n = scaled.to_integer().unwrap_or_default();
            Rational::from((n, Integer::from(1) << bits))
        };
        GaussianRational::new(snap(re), snap(im))
    }

    /// Numerical lexicographic order on `(re, im)`.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        self.re.cmp(&other.re).then_with(|| self.im.cmp(&other.im))
    }
}

impl fmt::Display for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.re, self.im)
    }
}

impl FromStr for GaussianRational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (re, im) = match s.split_once(':') {
            Some((a, b)) => (a, b),
            None => (s, "0"),
        };
        let parse = |t: &str| {
            Rational::from_str(t.trim()).map_err(|e| Error::Parse(format!("rational {t:?}: {e}")))
        };
        Ok(GaussianRational::new(parse(re)?, parse(im)?))
    }
}

impl<'a> Add<&'a GaussianRational> for &'a GaussianRational {
    type Output = GaussianRational;
    fn add(self, o: &GaussianRational) -> GaussianRational {
        GaussianRational::new(Rational::from(&self.re + &o.re), Rational::from(&self.im + &o.im))
    }
}

impl<'a> Sub<&'a GaussianRational> for &'a GaussianRational {
    type Output = GaussianRational;
    fn sub(self, o: &GaussianRational) -> GaussianRational {
        GaussianRational::new(Rational::from(&self.re - &o.re), Rational::from(&self.im - &o.im))
    }
}

impl<'a> Mul<&'a GaussianRational> for &'a GaussianRational {
    type Output = GaussianRational;
    fn mul(self, o: &GaussianRational) -> GaussianRational {
        let ac = Rational::from(&self.re * &o.re);
        let bd = Rational::from(&self.im * &o.im);
        let ad = Rational::from(&self.re * &o.im);
        let bc = Rational::from(&self.im * &o.re);
        GaussianRational::new(ac - bd, ad + bc)
    }
}

impl Neg for &GaussianRational {
    type Output = GaussianRational;
    fn neg(self) -> GaussianRational {
        GaussianRational::new(Rational::from(-&self.re), Rational::from(-&self.im))
    }
}

impl Add for GaussianRational {
    type Output = GaussianRational;
    fn add(self, o: GaussianRational) -> GaussianRational {
        &self + &o
    }
}

impl Sub for GaussianRational {
    type Output = GaussianRational;
    fn sub(self, o: GaussianRational) -> GaussianRational {
        &self - &o
    }
}

impl Mul for GaussianRational {
    type Output = GaussianRational;
    fn mul(self, o: GaussianRational) -> GaussianRational {
        &self * &o
    }
}

impl Neg for GaussianRational {
    type Output = GaussianRational;
    fn neg(self) -> GaussianRational {
        -&self
    }
}

impl From<i64> for GaussianRational {
    fn from(n: i64) -> Self {
        GaussianRational::from_int(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(s: &str) -> GaussianRational {
        s.parse().unwrap()
    }

    #[test]
    fn height_examples() {
        assert_eq!(g("0").height(), 1);
        assert_eq!(g("-7/3:2/5").height(), 7);
        assert_eq!(g("1:-1").height(), 1);
    }

    #[test]
    fn inverse_of_i() {
        assert_eq!(GaussianRational::i().inv().unwrap(), g("0:-1"));
        assert!(GaussianRational::zero().inv().is_err());
    }

    #[test]
    fn text_round_trip() {
        for s in ["0:0", "1/2:-3/7", "-5:0", "0:1"] {
            assert_eq!(g(s).to_string(), s);
        }
        assert_eq!(g("3").to_string(), "3:0");
    }

    #[test]
    fn abs_upper_is_above() {
        let z = g("3:4");
        let u = z.abs_upper();
        assert!(u >= 5);
        assert!(u < Rational::from((5000001, 1000000)));
    }

    #[test]
    fn dyadic_rounding() {
        let re = Float::with_val(64, 0.3);
        let im = Float::with_val(64, -1.7);
        let q = GaussianRational::round_dyadic(&re, &im, 4);
        assert_eq!(q, g("5/16:-27/16"));
    }
}
