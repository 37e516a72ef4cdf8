//! The composition identity `f^k = g^k + eps * phi_k` for `f = g + eps P`,
//! with `phi_k` built by certified quadrature.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;
use rug::{Float, Integer, Rational};

use super::certify_zero;
use crate::corekit::{up, ComplexBox, GaussianRational, PrecisionPolicy};
use crate::entire::{BaseFunction, Holomorphic, Polynomial};
use crate::error::{Error, Result};

const NODES: usize = 8;
const MAX_PIECES: usize = 1 << 12;

/// `P_n` on the real line, as an evaluable for the node search.
struct Legendre(usize);

impl Legendre {
    fn both_box(&self, x: &ComplexBox) -> (ComplexBox, ComplexBox) {
        let prec = x.prec();
        let mut p0 = ComplexBox::exact_int(1, prec);
        let mut p1 = x.clone();
        for k in 1..self.0 {
            let k = k as i64;
            let next = x.mul(&p1).mul_int(2 * k + 1).sub(&p0.mul_int(k)).mul_rational(&Rational::from((1, k + 1)));
            p0 = p1;
            p1 = next;
        }
        (p1, p0)
    }

    /// `P_n' = n (x P_n - P_{n-1}) / (x^2 - 1)` is singular at the ends; use
    /// the derivative recurrence instead.
    fn deriv(&self, x: &ComplexBox) -> ComplexBox {
        let prec = x.prec();
        let mut p0 = ComplexBox::exact_int(1, prec);
        let mut p1 = x.clone();
        let mut d0 = ComplexBox::zero(prec);
        let mut d1 = ComplexBox::exact_int(1, prec);
        for k in 1..self.0 {
            let k = k as i64;
            let inv = Rational::from((1, k + 1));
            let np = x.mul(&p1).mul_int(2 * k + 1).sub(&p0.mul_int(k)).mul_rational(&inv);
            let nd = p1.add(&x.mul(&d1)).mul_int(2 * k + 1).sub(&d0.mul_int(k)).mul_rational(&inv);
            p0 = p1;
            p1 = np;
            d0 = d1;
            d1 = nd;
        }
        d1
    }
}

impl Holomorphic for Legendre {
    fn eval_box(&self, z: &ComplexBox) -> Result<ComplexBox> {
        Ok(self.both_box(z).0)
    }
    fn deriv_box(&self, z: &ComplexBox) -> Result<ComplexBox> {
        Ok(self.deriv(z))
    }
    fn eval_c64(&self, z: Complex64) -> Complex64 {
        self.both_box(&ComplexBox::from_c64(z, 64)).0.center_c64()
    }
    fn deriv_c64(&self, z: Complex64) -> Complex64 {
        self.deriv(&ComplexBox::from_c64(z, 64)).center_c64()
    }
}

type Rule = Vec<(ComplexBox, ComplexBox)>;

/// Certified Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize, prec: u32) -> Result<Rule> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u32), Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(r) = cache.lock().unwrap().get(&(n, prec)) {
        return Ok(r.clone());
    }
    let leg = Legendre(n);
    let policy = PrecisionPolicy::new(prec, prec);
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        let guess = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let x = certify_zero(&leg, Complex64::new(guess, 0.0), &policy)?
            .ok_or_else(|| Error::QuadratureFailure(format!("node {i} of {n}")))?;
        let d = leg.deriv(&x);
        let denom = ComplexBox::exact_int(1, prec).sub(&x.square()).mul(&d.square());
        let w = ComplexBox::exact_int(2, prec)
            .div(&denom)
            .ok_or_else(|| Error::QuadratureFailure(format!("weight {i} of {n}")))?;
        rule.push((x, w));
    }
    cache.lock().unwrap().insert((n, prec), rule.clone());
    Ok(rule)
}

/// `(n!)^4 / ((2n+1) ((2n)!)^3)`, times 2 to cover complex integrands.
fn remainder_constant(n: usize) -> Rational {
    let f = Integer::from(Integer::factorial(n as u32));
    let f2 = Integer::from(Integer::factorial(2 * n as u32));
    let num = Integer::from(rug::ops::Pow::pow(&f, 4u32)) * 2u32;
    let den = Integer::from(rug::ops::Pow::pow(&f2, 3u32)) * (2 * n as u32 + 1);
    Rational::from((num, den))
}

/// `int_0^1 g'(y + t s) dt` with a certified error bound folded into the radius.
fn integrate_derivative(g: &BaseFunction, y: &ComplexBox, s: &ComplexBox, tol: &Float) -> Result<ComplexBox> {
    let prec = y.prec();
    let rule = gauss_legendre(NODES, prec)?;
    let gd = g.derivative();
    let mut high = gd.clone();
    for _ in 0..2 * NODES {
        high = high.derivative();
    }
    let c = remainder_constant(NODES);
    let s_abs = s.abs_upper();
    let mut pieces = 1usize;
    while pieces <= MAX_PIECES {
        let mut total = ComplexBox::zero(prec);
        let mut rem = Float::new(64);
        let h = Rational::from((1, pieces));
        for j in 0..pieces {
            let a = Rational::from((j, pieces));
            let half = h.clone() / 2u32;
            let mid = a + &half;
            let center = y.add(&s.mul_rational(&mid));
            for (x, w) in &rule {
                let t = x.mul_rational(&half);
                let pt = center.add(&s.mul(&t));
                total = total.add(&gd.eval_box(&pt).mul(w).mul_rational(&half));
            }
            let seg = center.inflate(&up(&s_abs * &Float::with_val(64, &half)));
            let sup = high.eval_box(&seg).abs_upper();
            let hs = up(&Float::with_val(64, &h) * &s_abs);
            let hp = up(rug::ops::Pow::pow(&hs, 2 * NODES as u32));
            let piece = up(&up(&up(&hp * &Float::with_val(64, &h)) * &Float::with_val(64, &c)) * &sup);
            rem = up(&rem + &piece);
        }
        if rem.is_finite() && rem <= *tol {
            return Ok(total.inflate(&rem));
        }
        pieces *= 2;
    }
    Err(Error::QuadratureFailure(format!("no bound below {} with {MAX_PIECES} pieces", tol.to_f64())))
}

#[derive(Clone, Debug)]
pub struct PhiReport {
    pub phi: ComplexBox,
    /// Upper bound on `|f^k(z) - g^k(z) - eps phi_k(z)|`.
    pub residual: Float,
    /// `phi_k` in `K` when it is computable there: always for `k = 1`,
    /// and for polynomial `g`.
    pub exact: Option<GaussianRational>,
}

/// Exact recursion for polynomial `g`: the integral of `g'` over the
/// segment is the difference quotient. Checks the identity in `K`.
fn phi_exact(g: &Polynomial, p: &Polynomial, eps: &GaussianRational, k: usize, z: &GaussianRational) -> Result<GaussianRational> {
    let mut y = g.eval_exact(z);
    let mut phi = p.eval_exact(z);
    let mut fz = &y + &(eps * &phi);
    for _ in 1..k {
        let h = eps * &phi;
        let slope = if h.is_zero() {
            g.derivative().eval_exact(&y)
        } else {
            (&g.eval_exact(&(&y + &h)) - &g.eval_exact(&y)).checked_div(&h)?
        };
        phi = &(&phi * &slope) + &p.eval_exact(&(&y + &h));
        y = g.eval_exact(&y);
        fz = &g.eval_exact(&fz) + &(eps * &p.eval_exact(&fz));
    }
    if &(&fz - &y) - &(eps * &phi) != GaussianRational::zero() {
        return Err(Error::Precondition("exact composition identity failed".into()));
    }
    Ok(phi)
}

/// Build `phi_k` by the quadrature recursion and compare with direct
/// iteration of `f = g + eps P`.
pub fn phi_check(
    g: &BaseFunction,
    p: &Polynomial,
    eps: &GaussianRational,
    k: usize,
    z: &GaussianRational,
    tol: f64,
    policy: &PrecisionPolicy,
) -> Result<PhiReport> {
    if k == 0 || eps.is_zero() {
        return Err(Error::Precondition("phi_check needs k >= 1 and eps != 0".into()));
    }
    let prec = policy.start.max(128);
    if !g.is_transcendental() {
        let phi = phi_exact(g.poly_part(), p, eps, k, z)?;
        return Ok(PhiReport { phi: ComplexBox::from_gaussian(&phi, prec), residual: Float::new(64), exact: Some(phi) });
    }
    let tol = Float::with_val(64, tol);
    let e = ComplexBox::from_gaussian(eps, prec);
    let z_exact = z.clone();
    let z = ComplexBox::from_gaussian(z, prec);
    // y runs through g^j(z)
    let mut y = g.eval_box(&z);
    let mut phi = ComplexBox::from_gaussian(&p.eval_exact(&z_exact), prec);
    let mut fz = g.eval_box(&z).add(&e.mul(&p.eval_box(&z)));
    for _ in 1..k {
        let s = e.mul(&phi);
        let integral = integrate_derivative(g, &y, &s, &tol)?;
        phi = phi.mul(&integral).add(&p.eval_box(&y.add(&s)));
        y = g.eval_box(&y);
        fz = g.eval_box(&fz).add(&e.mul(&p.eval_box(&fz)));
    }
    let residual = fz.sub(&y).sub(&e.mul(&phi)).abs_upper();
    let exact = (k == 1).then(|| p.eval_exact(&z_exact));
    Ok(PhiReport { phi, residual, exact })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials() {
        let rule = gauss_legendre(NODES, 128).unwrap();
        let mut s = ComplexBox::zero(128);
        for (x, w) in &rule {
            s = s.add(&x.pow(6).mul(w));
        }
        assert!(s.contains_gaussian(&GaussianRational::ratio(2, 7)));
        assert!(s.rad_f64() < 1e-25);
    }

    #[test]
    fn affine_base_is_exact() {
        let g = BaseFunction::polynomial(Polynomial::x());
        let r = phi_check(&g, &Polynomial::one(), &GaussianRational::ratio(1, 3), 2, &GaussianRational::one(), 1e-12, &PrecisionPolicy::default()).unwrap();
        assert!(r.phi.contains_gaussian(&GaussianRational::from_int(2)));
        assert!(r.residual < 1e-20);
    }

    #[test]
    fn exponential_two_steps() {
        let g = BaseFunction::supplied("exp").unwrap();
        let eps = GaussianRational::ratio(1, 1000);
        let r = phi_check(&g, &Polynomial::one(), &eps, 2, &GaussianRational::zero(), 1e-12, &PrecisionPolicy::default()).unwrap();
        assert!(r.residual < 1e-9, "{}", r.residual);
        // phi_2 = int_0^1 e^(1 + t eps) dt + 1, close to e + 1
        assert!((r.phi.center_c64().re - (std::f64::consts::E + 1.0)).abs() < 1e-2);
    }
}
