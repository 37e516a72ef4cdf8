//! Dense polynomials with exact coefficients, and their ball images.

use std::fmt;

use num_complex::Complex64;
use rug::Float;

use crate::corekit::{up, ComplexBox, GaussianRational, SymbolicValue};
use crate::error::{Error, Result};

/// Coefficients in ascending order; never has a zero leading coefficient.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Polynomial {
    coeffs: Vec<GaussianRational>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<GaussianRational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn constant(c: GaussianRational) -> Self {
        Polynomial::new(vec![c])
    }

    pub fn one() -> Self {
        Polynomial::constant(GaussianRational::one())
    }

    /// `z`.
    pub fn x() -> Self {
        Polynomial::new(vec![GaussianRational::zero(), GaussianRational::one()])
    }

    /// From integer coefficients, ascending.
    pub fn from_ints(c: &[i64]) -> Self {
        Polynomial::new(c.iter().map(|&n| GaussianRational::from_int(n)).collect())
    }

    /// `prod (z - r)^2`.
    pub fn squared_from_roots(roots: &[GaussianRational]) -> Self {
        let mut p = Polynomial::one();
        for r in roots {
            let lin = Polynomial::new(vec![-r, GaussianRational::one()]);
            p = p.mul(&lin.mul(&lin));
        }
        p
    }

    pub fn coeffs(&self) -> &[GaussianRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeff(&self, k: usize) -> GaussianRational {
        self.coeffs.get(k).cloned().unwrap_or_default()
    }

    pub fn add(&self, o: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(o.coeffs.len());
        Polynomial::new((0..n).map(|k| &self.coeff(k) + &o.coeff(k)).collect())
    }

    pub fn sub(&self, o: &Polynomial) -> Polynomial {
        self.add(&o.scale(&GaussianRational::from_int(-1)))
    }

    pub fn scale(&self, c: &GaussianRational) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn mul(&self, o: &Polynomial) -> Polynomial {
        if self.is_zero() || o.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![GaussianRational::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] = &out[i + j] + &(a * b);
            }
        }
        Polynomial::new(out)
    }

    /// `z^k * self`.
    pub fn shift(&self, k: usize) -> Polynomial {
        if self.is_zero() {
            return Polynomial::zero();
        }
        let mut c = vec![GaussianRational::zero(); k];
        c.extend(self.coeffs.iter().cloned());
        Polynomial::new(c)
    }

    pub fn derivative(&self) -> Polynomial {
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * &GaussianRational::from_int(k as i64))
                .collect(),
        )
    }

    /// Quotient and remainder; errors on a zero divisor.
    pub fn div_rem(&self, d: &Polynomial) -> Result<(Polynomial, Polynomial)> {
        if d.is_zero() {
            return Err(Error::DivisionByEnclosedZero("zero polynomial divisor".into()));
        }
        let lead_inv = d.coeffs.last().unwrap().inv()?;
        let mut r = self.coeffs.clone();
        let dd = d.degree();
        if self.coeffs.len() < d.coeffs.len() {
            return Ok((Polynomial::zero(), self.clone()));
        }
        let mut q = vec![GaussianRational::zero(); self.coeffs.len() - dd];
        for k in (0..q.len()).rev() {
            let c = &r[k + dd] * &lead_inv;
            if !c.is_zero() {
                for (i, dc) in d.coeffs.iter().enumerate() {
                    r[k + i] = &r[k + i] - &(&c * dc);
                }
            }
            q[k] = c;
        }
        r.truncate(dd);
        Ok((Polynomial::new(q), Polynomial::new(r)))
    }

    /// Exact divisibility test.
    pub fn divides(&self, other: &Polynomial) -> bool {
        match other.div_rem(self) {
            Ok((_, r)) => r.is_zero(),
            Err(_) => other.is_zero(),
        }
    }

    pub fn eval_exact(&self, z: &GaussianRational) -> GaussianRational {
        let mut acc = GaussianRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * z) + c;
        }
        acc
    }

    /// Horner evaluation in the value DAG.
    pub fn eval_symbolic(&self, z: &SymbolicValue) -> SymbolicValue {
        let mut acc = SymbolicValue::zero();
        for c in self.coeffs.iter().rev() {
            acc = SymbolicValue::add(&SymbolicValue::mul(&acc, z), &SymbolicValue::exact(c.clone()));
        }
        acc
    }

    pub fn to_ball(&self, prec: u32) -> BallPoly {
        BallPoly::new(self.coeffs.iter().map(|c| ComplexBox::from_gaussian(c, prec)).collect())
    }

    pub fn eval_box(&self, z: &ComplexBox) -> ComplexBox {
        self.to_ball(z.prec()).eval(z)
    }

    /// Upper bound on the sum of coefficient magnitudes.
    pub fn length_upper(&self) -> Float {
        let mut acc = Float::new(64);
        for c in &self.coeffs {
            acc = up(&acc + &Float::with_val(64, &c.abs_upper()));
        }
        acc
    }

    /// Sum of coefficient magnitudes as an enclosure `[lo, hi]`.
    pub fn length(&self) -> (Float, Float) {
        let prec = 128;
        let mut lo = Float::new(prec);
        let mut hi = Float::new(prec);
        for c in &self.coeffs {
            let b = ComplexBox::from_gaussian(c, prec + 64);
            lo = Float::with_val_round(prec, &lo + &b.abs_lower(), rug::float::Round::Down).0;
            hi = Float::with_val_round(prec, &hi + &b.abs_upper(), rug::float::Round::Up).0;
        }
        (lo, hi)
    }

    pub fn to_c64(&self) -> Vec<Complex64> {
        self.coeffs.iter().map(|c| {
            let (a, b) = c.to_f64();
            Complex64::new(a, b)
        }).collect()
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coeffs.iter().map(|c| c.to_string()).collect();
        write!(f, "[{}]", parts.join(" "))
    }
}

/// Polynomial with ball coefficients.
#[derive(Clone, Debug)]
pub struct BallPoly {
    pub coeffs: Vec<ComplexBox>,
}

impl BallPoly {
    pub fn new(coeffs: Vec<ComplexBox>) -> Self {
        BallPoly { coeffs }
    }

    pub fn zero() -> Self {
        BallPoly { coeffs: Vec::new() }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, z: &ComplexBox) -> ComplexBox {
        let mut acc = ComplexBox::zero(z.prec());
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(z).add(c);
        }
        acc
    }

    pub fn eval_c64(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c.center_c64();
        }
        acc
    }

    pub fn derivative(&self) -> BallPoly {
        BallPoly::new(self.coeffs.iter().enumerate().skip(1).map(|(k, c)| c.mul_int(k as i64)).collect())
    }

    pub fn add_assign_shifted(&mut self, other: &BallPoly, scale: &ComplexBox, shift: usize) {
        let prec = scale.prec();
        let need = other.coeffs.len() + shift;
        while self.coeffs.len() < need {
            self.coeffs.push(ComplexBox::zero(prec));
        }
        for (k, c) in other.coeffs.iter().enumerate() {
            self.coeffs[k + shift] = self.coeffs[k + shift].add(&c.mul(scale));
        }
    }

    /// Multiply in place by `(z - r)^2`.
    pub fn mul_squared_linear(&mut self, r: &ComplexBox) {
        for _ in 0..2 {
            let prec = r.prec();
            let mut out = vec![ComplexBox::zero(prec); self.coeffs.len() + 1];
            let neg = r.neg();
            for (k, c) in self.coeffs.iter().enumerate() {
                out[k + 1] = out[k + 1].add(c);
                out[k] = out[k].add(&c.mul(&neg));
            }
            self.coeffs = out;
        }
    }

    /// Upper bound on the sum of coefficient magnitudes.
    pub fn length_upper(&self) -> Float {
        let mut acc = Float::new(64);
        for c in &self.coeffs {
            acc = up(&acc + &c.abs_upper());
        }
        acc
    }

    /// Upper bound on `|p(z)|` for `|z| <= r`.
    pub fn sup_on_disk(&self, r: &Float) -> Float {
        let mut acc = Float::new(64);
        for c in self.coeffs.iter().rev() {
            acc = up(&up(&acc * r) + &c.abs_upper());
        }
        acc
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_examples() {
        let p = Polynomial::from_ints(&[1, -4, 3]);
        let (lo, hi) = p.length();
        assert!(lo <= 8 && hi >= 8 && hi < 8.000001);
        let zn = Polynomial::x().shift(6);
        assert_eq!(zn.length_upper(), 1);
    }

    #[test]
    fn division_round_trip() {
        let a = Polynomial::squared_from_roots(&["1".parse().unwrap(), "0:1".parse().unwrap()]);
        let b = Polynomial::squared_from_roots(&["1".parse().unwrap()]);
        assert!(b.divides(&a));
        assert!(!a.divides(&b));
        let (q, r) = a.div_rem(&b).unwrap();
        assert!(r.is_zero());
        assert_eq!(q, Polynomial::squared_from_roots(&["0:1".parse().unwrap()]));
    }

    #[test]
    fn ball_expansion_matches_exact() {
        let roots: Vec<GaussianRational> = vec!["1/3".parse().unwrap(), "-2:1/5".parse().unwrap()];
        let exact = Polynomial::squared_from_roots(&roots);
        let mut b = BallPoly::new(vec![ComplexBox::exact_int(1, 128)]);
        for r in &roots {
            b.mul_squared_linear(&ComplexBox::from_gaussian(r, 128));
        }
        for (k, c) in exact.coeffs().iter().enumerate() {
            assert!(b.coeffs[k].contains_gaussian(c) || b.coeffs[k].overlaps(&ComplexBox::from_gaussian(c, 256)));
        }
    }
}
