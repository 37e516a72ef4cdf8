//! Staged functions `f = g + eps0 + sum eps z^e P(z)`.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rug::Rational;

use super::base::BaseFunction;
use super::poly::{BallPoly, Polynomial};
use super::Holomorphic;
use crate::corekit::{ComplexBox, GaussianRational, PrecisionPolicy, SymbolicValue};
use crate::error::Result;

/// One perturbation `eps * z^exponent * P(z)`, where `P` is the squared
/// product over the first `nail_prefix` nail roots of the owning function.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationTerm {
    pub stage: u32,
    pub index: u32,
    pub epsilon: SymbolicValue,
    pub exponent: u32,
    pub nail_prefix: usize,
    pub nu: Rational,
}

struct Collapsed {
    /// `eps0 + sum` as one ball polynomial, then its derivatives.
    derivs: Vec<BallPoly>,
}

pub struct StagedFunction {
    pub base: BaseFunction,
    pub epsilon0: SymbolicValue,
    pub nail_roots: Vec<GaussianRational>,
    pub terms: Vec<PerturbationTerm>,
    policy: PrecisionPolicy,
    balls: Mutex<BTreeMap<u32, Arc<Mutex<Collapsed>>>>,
    exact_prefix: Mutex<HashMap<usize, Arc<Polynomial>>>,
}

impl Clone for StagedFunction {
    fn clone(&self) -> Self {
        StagedFunction::new(
            self.base.clone(),
            self.epsilon0.clone(),
            self.nail_roots.clone(),
            self.terms.clone(),
            self.policy,
        )
    }
}

impl std::fmt::Debug for StagedFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StagedFunction")
            .field("base", &self.base.id())
            .field("epsilon0", &self.epsilon0)
            .field("roots", &self.nail_roots.len())
            .field("terms", &self.terms.len())
            .finish()
    }
}

impl StagedFunction {
    pub fn new(
        base: BaseFunction,
        epsilon0: SymbolicValue,
        nail_roots: Vec<GaussianRational>,
        terms: Vec<PerturbationTerm>,
        policy: PrecisionPolicy,
    ) -> Self {
        StagedFunction {
            base,
            epsilon0,
            nail_roots,
            terms,
            policy,
            balls: Mutex::new(BTreeMap::new()),
            exact_prefix: Mutex::new(HashMap::new()),
        }
    }

    /// `g + eps0` with no terms.
    pub fn plain(base: BaseFunction, epsilon0: GaussianRational, policy: PrecisionPolicy) -> Self {
        Self::new(base, SymbolicValue::exact(epsilon0), Vec::new(), Vec::new(), policy)
    }

    pub fn policy(&self) -> &PrecisionPolicy {
        &self.policy
    }

    /// New function with one more term.
    pub fn with_term(&self, t: PerturbationTerm) -> Self {
        let mut terms = self.terms.clone();
        terms.push(t);
        Self::new(self.base.clone(), self.epsilon0.clone(), self.nail_roots.clone(), terms, self.policy)
    }

    /// New function with extra nail roots appended.
    pub fn with_roots(&self, roots: &[GaussianRational]) -> Self {
        let mut r = self.nail_roots.clone();
        r.extend(roots.iter().cloned());
        Self::new(self.base.clone(), self.epsilon0.clone(), r, self.terms.clone(), self.policy)
    }

    pub fn is_nail_root(&self, z: &GaussianRational) -> bool {
        self.nail_roots.contains(z)
    }

    /// Exact squared product over the first `prefix` nail roots.
    pub fn prefix_poly(&self, prefix: usize) -> Arc<Polynomial> {
        if let Some(p) = self.exact_prefix.lock().unwrap().get(&prefix) {
            return p.clone();
        }
        let p = Arc::new(Polynomial::squared_from_roots(&self.nail_roots[..prefix]));
        self.exact_prefix.lock().unwrap().insert(prefix, p.clone());
        p
    }

    /// Degree of the polynomial part of the perturbation.
    pub fn perturbation_degree(&self) -> usize {
        self.terms.iter().map(|t| t.exponent as usize + 2 * t.nail_prefix).max().unwrap_or(0)
    }

    fn collapsed(&self, prec: u32) -> Result<Arc<Mutex<Collapsed>>> {
        if let Some(c) = self.balls.lock().unwrap().get(&prec) {
            return Ok(c.clone());
        }
        let mut pert = BallPoly::new(vec![self.epsilon0.eval_at(prec)?]);
        let mut prefix = BallPoly::new(vec![ComplexBox::exact_int(1, prec)]);
        let mut done = 0;
        for t in &self.terms {
            if t.nail_prefix < done {
                prefix = BallPoly::new(vec![ComplexBox::exact_int(1, prec)]);
                done = 0;
            }
            while done < t.nail_prefix {
                prefix.mul_squared_linear(&ComplexBox::from_gaussian(&self.nail_roots[done], prec));
                done += 1;
            }
            let eps = t.epsilon.eval_at(prec)?;
            pert.add_assign_shifted(&prefix, &eps, t.exponent as usize);
        }
        let c = Arc::new(Mutex::new(Collapsed { derivs: vec![pert] }));
        self.balls.lock().unwrap().insert(prec, c.clone());
        Ok(c)
    }

    fn pert_deriv(&self, prec: u32, order: usize) -> Result<BallPoly> {
        let c = self.collapsed(prec)?;
        let mut g = c.lock().unwrap();
        while g.derivs.len() <= order {
            let d = g.derivs.last().unwrap().derivative();
            g.derivs.push(d);
        }
        Ok(g.derivs[order].clone())
    }

    /// Enclosure of the `order`-th derivative over `z`.
    pub fn eval_deriv_box(&self, z: &ComplexBox, order: usize) -> Result<ComplexBox> {
        let mut b = self.base.clone();
        for _ in 0..order {
            b = b.derivative();
        }
        let p = self.pert_deriv(z.prec(), order)?;
        Ok(b.eval_box(z).add(&p.eval(z)))
    }

    pub fn eval_deriv_c64(&self, z: Complex64, order: usize) -> Complex64 {
        let mut b = self.base.clone();
        for _ in 0..order {
            b = b.derivative();
        }
        let p = self.pert_deriv(self.policy.start, order).map(|p| p.eval_c64(z)).unwrap_or_default();
        b.eval_c64(z) + p
    }

    /// `z^e * prod_{k<prefix} (z - r_k)^2` in the value DAG. Factors are
    /// kept separate so that a vanishing factor is seen structurally.
    pub fn term_factor_symbolic(&self, z: &SymbolicValue, exponent: u32, prefix: usize) -> SymbolicValue {
        let mut q = SymbolicValue::pow(z, exponent);
        for r in &self.nail_roots[..prefix] {
            let d = SymbolicValue::sub(z, &SymbolicValue::exact(r.clone()));
            q = SymbolicValue::mul(&q, &SymbolicValue::pow(&d, 2));
        }
        q
    }

    /// `g(z) + eps0 + sum_{i<count} term_i(z)`, folded left.
    pub fn eval_symbolic_prefix(&self, z: &SymbolicValue, count: usize) -> SymbolicValue {
        let mut acc = SymbolicValue::add(&self.base.eval_symbolic(z), &self.epsilon0);
        for t in &self.terms[..count] {
            let c = self.term_factor_symbolic(z, t.exponent, t.nail_prefix);
            acc = SymbolicValue::add(&acc, &SymbolicValue::mul(&t.epsilon, &c));
        }
        acc
    }

    pub fn eval_symbolic(&self, z: &SymbolicValue) -> SymbolicValue {
        self.eval_symbolic_prefix(z, self.terms.len())
    }

    /// Taylor coefficient of `z^k` as a value: `b_k` plus every term's
    /// contribution `eps * [z^{k-e}] P`.
    pub fn taylor_coefficient(&self, k: usize) -> SymbolicValue {
        let mut acc = SymbolicValue::exact(self.base.taylor_coefficient(k));
        if k == 0 {
            acc = SymbolicValue::add(&acc, &self.epsilon0);
        }
        for t in &self.terms {
            let e = t.exponent as usize;
            if e > k || k - e > 2 * t.nail_prefix {
                continue;
            }
            let c = self.prefix_poly(t.nail_prefix).coeff(k - e);
            if c.is_zero() {
                continue;
            }
            acc = SymbolicValue::add(&acc, &SymbolicValue::mul(&t.epsilon, &SymbolicValue::exact(c)));
        }
        acc
    }

    /// Ball coefficients of `P_i` (the `i`-th term's polynomial).
    pub fn term_poly_ball(&self, i: usize, prec: u32) -> BallPoly {
        let mut p = BallPoly::new(vec![ComplexBox::exact_int(1, prec)]);
        for r in &self.nail_roots[..self.terms[i].nail_prefix] {
            p.mul_squared_linear(&ComplexBox::from_gaussian(r, prec));
        }
        p
    }

    /// Derivative as an evaluable.
    pub fn derivative(&self) -> StagedDerivative<'_> {
        StagedDerivative { f: self, order: 1 }
    }
}

impl Holomorphic for StagedFunction {
    fn eval_box(&self, z: &ComplexBox) -> Result<ComplexBox> {
        self.eval_deriv_box(z, 0)
    }

    fn deriv_box(&self, z: &ComplexBox) -> Result<ComplexBox> {
        self.eval_deriv_box(z, 1)
    }

    fn eval_c64(&self, z: Complex64) -> Complex64 {
        self.eval_deriv_c64(z, 0)
    }

    fn deriv_c64(&self, z: Complex64) -> Complex64 {
        self.eval_deriv_c64(z, 1)
    }
}

/// `f^(order)` for a staged function.
pub struct StagedDerivative<'a> {
    f: &'a StagedFunction,
    order: usize,
}

impl<'a> StagedDerivative<'a> {
    pub fn derivative(&self) -> StagedDerivative<'a> {
        StagedDerivative { f: self.f, order: self.order + 1 }
    }
}

impl Holomorphic for StagedDerivative<'_> {
    fn eval_box(&self, z: &ComplexBox) -> Result<ComplexBox> {
        self.f.eval_deriv_box(z, self.order)
    }

    fn deriv_box(&self, z: &ComplexBox) -> Result<ComplexBox> {
        self.f.eval_deriv_box(z, self.order + 1)
    }

    fn eval_c64(&self, z: Complex64) -> Complex64 {
        self.f.eval_deriv_c64(z, self.order)
    }

    fn deriv_c64(&self, z: Complex64) -> Complex64 {
        self.f.eval_deriv_c64(z, self.order + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corekit::reduce_exact;

    fn q(s: &str) -> GaussianRational {
        s.parse().unwrap()
    }

    #[test]
    fn exp_at_zero_reduces_to_one() {
        let f = StagedFunction::plain(BaseFunction::supplied("exp").unwrap(), GaussianRational::zero(), PrecisionPolicy::default());
        let v = f.eval_symbolic(&SymbolicValue::zero());
        assert_eq!(reduce_exact(&v).unwrap(), GaussianRational::one());
    }

    #[test]
    fn one_term_substitution() {
        let f = StagedFunction::plain(BaseFunction::supplied("exp").unwrap(), GaussianRational::zero(), PrecisionPolicy::default())
            .with_term(PerturbationTerm {
                stage: 0,
                index: 1,
                epsilon: SymbolicValue::exact(q("1/4")),
                exponent: 2,
                nail_prefix: 0,
                nu: Rational::from(1),
            });
        let v = f.eval_symbolic(&SymbolicValue::int(2));
        let e2 = SymbolicValue::base_eval(crate::corekit::Transcendental::Exp, &SymbolicValue::int(2));
        let diff = SymbolicValue::sub(&v, &e2);
        assert_eq!(reduce_exact(&diff).unwrap(), GaussianRational::one());
        assert_eq!(reduce_exact(&f.taylor_coefficient(2)).unwrap(), q("3/4"));
    }

    #[test]
    fn taylor_with_nail_poly() {
        // eps z^2 (z-1)^2: coefficient of z^2 is b_2 + eps
        let f = StagedFunction::plain(BaseFunction::supplied("exp").unwrap(), GaussianRational::zero(), PrecisionPolicy::default())
            .with_roots(&[q("1")])
            .with_term(PerturbationTerm {
                stage: 0,
                index: 0,
                epsilon: SymbolicValue::exact(q("1/8")),
                exponent: 2,
                nail_prefix: 1,
                nu: Rational::from(1),
            });
        assert_eq!(reduce_exact(&f.taylor_coefficient(2)).unwrap(), q("5/8"));
        assert_eq!(reduce_exact(&f.taylor_coefficient(3)).unwrap(), &q("1/6") + &q("-1/4"));
        let b = f.eval_box(&ComplexBox::exact_int(1, 128)).unwrap();
        let e = ComplexBox::exact_int(1, 128).exp();
        assert!(b.overlaps(&e));
    }
}
