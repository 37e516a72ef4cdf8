//! Entire functions: base functions, exact polynomials and the staged
//! construction `f_n`.

pub mod base;
pub mod poly;
pub mod staged;
pub mod tail;

use num_complex::Complex64;

pub use base::{BaseFunction, SUPPLIED_BASES};
pub use poly::{BallPoly, Polynomial};
pub use staged::{PerturbationTerm, StagedDerivative, StagedFunction};
pub use tail::{tail_certificate, TailCertificate};

use crate::corekit::{ComplexBox, GaussianRational, SymbolicValue};
use crate::error::Result;

/// Anything we can enclose together with its derivative.
pub trait Holomorphic {
    fn eval_box(&self, z: &ComplexBox) -> Result<ComplexBox>;
    fn deriv_box(&self, z: &ComplexBox) -> Result<ComplexBox>;
    /// Fast approximate value, for search heuristics only.
    fn eval_c64(&self, z: Complex64) -> Complex64;
    fn deriv_c64(&self, z: Complex64) -> Complex64;
}

impl<T: Holomorphic + ?Sized> Holomorphic for &T {
    fn eval_box(&self, z: &ComplexBox) -> Result<ComplexBox> {
        (**self).eval_box(z)
    }
    fn deriv_box(&self, z: &ComplexBox) -> Result<ComplexBox> {
        (**self).deriv_box(z)
    }
    fn eval_c64(&self, z: Complex64) -> Complex64 {
        (**self).eval_c64(z)
    }
    fn deriv_c64(&self, z: Complex64) -> Complex64 {
        (**self).deriv_c64(z)
    }
}

impl Holomorphic for Polynomial {
    fn eval_box(&self, z: &ComplexBox) -> Result<ComplexBox> {
        Ok(Polynomial::eval_box(self, z))
    }
    fn deriv_box(&self, z: &ComplexBox) -> Result<ComplexBox> {
        Ok(self.derivative().eval_box(z))
    }
    fn eval_c64(&self, z: Complex64) -> Complex64 {
        self.to_c64().iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }
    fn deriv_c64(&self, z: Complex64) -> Complex64 {
        self.derivative().to_c64().iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }
}

impl Holomorphic for BaseFunction {
    fn eval_box(&self, z: &ComplexBox) -> Result<ComplexBox> {
        Ok(BaseFunction::eval_box(self, z))
    }
    fn deriv_box(&self, z: &ComplexBox) -> Result<ComplexBox> {
        Ok(self.derivative().eval_box(z))
    }
    fn eval_c64(&self, z: Complex64) -> Complex64 {
        BaseFunction::eval_c64(self, z)
    }
    fn deriv_c64(&self, z: Complex64) -> Complex64 {
        self.derivative().eval_c64(z)
    }
}

/// `f(z) - alpha`.
pub struct Shifted<F> {
    pub f: F,
    pub alpha: SymbolicValue,
}

impl<F> Shifted<F> {
    pub fn new(f: F, alpha: GaussianRational) -> Self {
        Shifted { f, alpha: SymbolicValue::exact(alpha) }
    }
}

impl<F: Holomorphic> Holomorphic for Shifted<F> {
    fn eval_box(&self, z: &ComplexBox) -> Result<ComplexBox> {
        Ok(self.f.eval_box(z)?.sub(&self.alpha.eval_at(z.prec())?))
    }
    fn deriv_box(&self, z: &ComplexBox) -> Result<ComplexBox> {
        self.f.deriv_box(z)
    }
    fn eval_c64(&self, z: Complex64) -> Complex64 {
        let a = self.alpha.eval_at(64).map(|b| b.center_c64()).unwrap_or_default();
        self.f.eval_c64(z) - a
    }
    fn deriv_c64(&self, z: Complex64) -> Complex64 {
        self.f.deriv_c64(z)
    }
}

/// `f^k(z) - z`; zeros are the points of period dividing `k`.
pub struct IterateMinusId<F> {
    pub f: F,
    pub k: usize,
}

impl<F: Holomorphic> IterateMinusId<F> {
    /// Orbit `z, f(z), ..., f^k(z)` as boxes.
    pub fn orbit_box(&self, z: &ComplexBox) -> Result<Vec<ComplexBox>> {
        let mut out = Vec::with_capacity(self.k + 1);
        out.push(z.clone());
        for _ in 0..self.k {
            let next = self.f.eval_box(out.last().unwrap())?;
            out.push(next);
        }
        Ok(out)
    }
}

impl<F: Holomorphic> Holomorphic for IterateMinusId<F> {
    fn eval_box(&self, z: &ComplexBox) -> Result<ComplexBox> {
        let orb = self.orbit_box(z)?;
        Ok(orb[self.k].sub(z))
    }
    fn deriv_box(&self, z: &ComplexBox) -> Result<ComplexBox> {
        let orb = self.orbit_box(z)?;
        let mut d = ComplexBox::exact_int(1, z.prec());
        for p in &orb[..self.k] {
            d = d.mul(&self.f.deriv_box(p)?);
        }
        Ok(d.sub(&ComplexBox::exact_int(1, z.prec())))
    }
    fn eval_c64(&self, z: Complex64) -> Complex64 {
        let mut w = z;
        for _ in 0..self.k {
            w = self.f.eval_c64(w);
        }
        w - z
    }
    fn deriv_c64(&self, z: Complex64) -> Complex64 {
        let mut w = z;
        let mut d = Complex64::new(1.0, 0.0);
        for _ in 0..self.k {
            d *= self.f.deriv_c64(w);
            w = self.f.eval_c64(w);
        }
        d - 1.0
    }
}

/// `g(z) + eps * p(z)`.
pub struct Pencil<G> {
    pub g: G,
    pub eps: GaussianRational,
    pub p: Polynomial,
}

impl<G: Holomorphic> Holomorphic for Pencil<G> {
    fn eval_box(&self, z: &ComplexBox) -> Result<ComplexBox> {
        let e = ComplexBox::from_gaussian(&self.eps, z.prec());
        Ok(self.g.eval_box(z)?.add(&e.mul(&self.p.eval_box(z))))
    }
    fn deriv_box(&self, z: &ComplexBox) -> Result<ComplexBox> {
        let e = ComplexBox::from_gaussian(&self.eps, z.prec());
        Ok(self.g.deriv_box(z)?.add(&e.mul(&self.p.derivative().eval_box(z))))
    }
    fn eval_c64(&self, z: Complex64) -> Complex64 {
        let (a, b) = self.eps.to_f64();
        self.g.eval_c64(z) + Complex64::new(a, b) * Holomorphic::eval_c64(&self.p, z)
    }
    fn deriv_c64(&self, z: Complex64) -> Complex64 {
        let (a, b) = self.eps.to_f64();
        self.g.deriv_c64(z) + Complex64::new(a, b) * Holomorphic::deriv_c64(&self.p, z)
    }
}
