//! Base entire functions `scale * T(z) + q(z)` with `T` one of exp, sin, cos.

use num_complex::Complex64;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};

use super::poly::Polynomial;
use crate::corekit::{mag_inf, up, ComplexBox, GaussianRational, SymbolicValue, Transcendental};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BaseFunction {
    id: String,
    trans: Option<(Transcendental, GaussianRational)>,
    poly: Polynomial,
}

pub const SUPPLIED_BASES: [&str; 4] = ["exp", "exp-1", "sin", "exp+z"];

impl BaseFunction {
    /// One of the supplied bases: `exp`, `exp-1`, `sin`, `exp+z`.
    pub fn supplied(id: &str) -> Result<Self> {
        let exp = Some((Transcendental::Exp, GaussianRational::one()));
        let (trans, poly) = match id {
            "exp" => (exp, Polynomial::zero()),
            "exp-1" => (exp, Polynomial::from_ints(&[-1])),
            "exp+z" => (exp, Polynomial::x()),
            "sin" => (Some((Transcendental::Sin, GaussianRational::one())), Polynomial::zero()),
            _ => return Err(Error::Precondition(format!("unknown base function {id:?}"))),
        };
        Ok(BaseFunction { id: id.to_string(), trans, poly })
    }

    /// Polynomial base, for tests of the machinery on non-transcendental maps.
    pub fn polynomial(p: Polynomial) -> Self {
        BaseFunction { id: format!("poly{p}"), trans: None, poly: p }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn is_transcendental(&self) -> bool {
        self.trans.as_ref().is_some_and(|(_, s)| !s.is_zero())
    }

    pub fn poly_part(&self) -> &Polynomial {
        &self.poly
    }

    pub fn derivative(&self) -> BaseFunction {
        let trans = self.trans.as_ref().map(|(t, s)| match t {
            Transcendental::Exp => (Transcendental::Exp, s.clone()),
            Transcendental::Sin => (Transcendental::Cos, s.clone()),
            Transcendental::Cos => (Transcendental::Sin, -s),
        });
        BaseFunction { id: format!("{}'", self.id), trans, poly: self.poly.derivative() }
    }

    /// Exact Taylor coefficient `b_n`.
    pub fn taylor_coefficient(&self, n: usize) -> GaussianRational {
        let mut c = self.poly.coeff(n);
        if let Some((t, s)) = &self.trans {
            let fact = Integer::from(Integer::factorial(n as u32));
            let inv = GaussianRational::real(Rational::from((Integer::from(1), fact)));
            let sign = match t {
                Transcendental::Exp => Some(1),
                Transcendental::Sin if n % 2 == 1 => Some(if n % 4 == 1 { 1 } else { -1 }),
                Transcendental::Cos if n.is_multiple_of(2) => Some(if n.is_multiple_of(4) { 1 } else { -1 }),
                _ => None,
            };
            if let Some(sg) = sign {
                c = &c + &(&(s * &inv) * &GaussianRational::from_int(sg));
            }
        }
        c
    }

    pub fn eval_box(&self, z: &ComplexBox) -> ComplexBox {
        let p = self.poly.eval_box(z);
        match &self.trans {
            Some((t, s)) => t.eval_box(z).mul(&ComplexBox::from_gaussian(s, z.prec())).add(&p),
            None => p,
        }
    }

    pub fn eval_symbolic(&self, z: &SymbolicValue) -> SymbolicValue {
        let p = self.poly.eval_symbolic(z);
        match &self.trans {
            Some((t, s)) => {
                let tv = SymbolicValue::mul(&SymbolicValue::exact(s.clone()), &SymbolicValue::base_eval(*t, z));
                SymbolicValue::add(&tv, &p)
            }
            None => p,
        }
    }

    pub fn eval_c64(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.poly.to_c64().iter().rev() {
            acc = acc * z + c;
        }
        if let Some((t, s)) = &self.trans {
            let (a, b) = s.to_f64();
            let v = match t {
                Transcendental::Exp => z.exp(),
                Transcendental::Sin => z.sin(),
                Transcendental::Cos => z.cos(),
            };
            acc += Complex64::new(a, b) * v;
        }
        acc
    }

    /// Upper bound on `sum_{n>N} |b_n| R^n`.
    pub fn tail_bound(&self, r: &Float, n: usize) -> Float {
        let mut acc = Float::new(64);
        for (k, c) in self.poly.coeffs().iter().enumerate().skip(n + 1) {
            let t = up(&Float::with_val(64, &c.abs_upper()) * &up(Pow::pow(r, k as u32)));
            acc = up(&acc + &t);
        }
        if let Some((_, s)) = &self.trans {
            // |T_n| <= 1/n!, ratio of consecutive terms <= R/(n+2).
            let s = Float::with_val(64, &s.abs_upper());
            let m = (n + 1) as u32;
            let first = up(&up(Pow::pow(r, m)) / &Float::with_val_round(64, Integer::from(Integer::factorial(m)), rug::float::Round::Down).0);
            let ratio = up(r / (n as u32 + 2));
            let t = if ratio < 1 {
                let one_minus = Float::with_val_round(64, 1 - &ratio, rug::float::Round::Down).0;
                up(&first / &one_minus)
            } else {
                // whole series bound e^R
                let e = up(r.exp_ref());
                if e.is_finite() { e } else { mag_inf() }
            };
            acc = up(&acc + &up(&s * &t));
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficients() {
        let e = BaseFunction::supplied("exp").unwrap();
        assert_eq!(e.taylor_coefficient(3), GaussianRational::ratio(1, 6));
        let s = BaseFunction::supplied("sin").unwrap();
        assert_eq!(s.taylor_coefficient(3), GaussianRational::ratio(-1, 6));
        assert_eq!(s.taylor_coefficient(2), GaussianRational::zero());
        let ez = BaseFunction::supplied("exp+z").unwrap();
        assert_eq!(ez.taylor_coefficient(1), GaussianRational::from_int(2));
        let em = BaseFunction::supplied("exp-1").unwrap();
        assert_eq!(em.taylor_coefficient(0), GaussianRational::zero());
        assert!(BaseFunction::supplied("tan").is_err());
    }

    #[test]
    fn derivative_of_exp_is_exp() {
        let e = BaseFunction::supplied("exp").unwrap();
        let d = e.derivative();
        assert_eq!(d.taylor_coefficient(4), e.taylor_coefficient(4));
        let s = BaseFunction::supplied("sin").unwrap().derivative().derivative();
        assert_eq!(s.taylor_coefficient(1), GaussianRational::from_int(-1));
    }

    #[test]
    fn tail_shrinks() {
        let e = BaseFunction::supplied("exp").unwrap();
        let r = Float::with_val(64, 2);
        let mut last = mag_inf();
        for n in [2, 5, 10, 20, 40] {
            let t = e.tail_bound(&r, n);
            assert!(t < last);
            last = t;
        }
        assert!(last < 1e-30);
    }
}
