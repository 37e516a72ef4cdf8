//! Exact reduction of value DAGs.
//!
//! A DAG is rewritten as a rational function in "atoms": transcendental
//! leaves, and (in the first pass) any non-exact node referenced from two
//! places. Treating a shared node as an indeterminate is sound because the
//! same node has the same value everywhere. If the rational function is a
//! constant, the value is that constant.

use std::collections::{BTreeMap, HashMap};

use super::gauss::GaussianRational;
use super::symbolic::{post_order, Kind, SymbolicValue};

type Monomial = Vec<(u32, u32)>;

const MAX_TERMS: usize = 4096;
const FULL_EXPANSION_NODES: usize = 4000;

#[derive(Clone, Debug, PartialEq)]
struct Poly(BTreeMap<Monomial, GaussianRational>);

impl Poly {
    fn constant(q: GaussianRational) -> Self {
        let mut m = BTreeMap::new();
        if !q.is_zero() {
            m.insert(Vec::new(), q);
        }
        Poly(m)
    }

    fn atom(i: u32) -> Self {
        let mut m = BTreeMap::new();
        m.insert(vec![(i, 1)], GaussianRational::one());
        Poly(m)
    }

    fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    fn as_constant(&self) -> Option<GaussianRational> {
        match self.0.len() {
            0 => Some(GaussianRational::zero()),
            1 => self.0.get(&Vec::new()).cloned(),
            _ => None,
        }
    }

    fn add(&self, o: &Poly) -> Option<Poly> {
        let mut m = self.0.clone();
        for (k, v) in &o.0 {
            let s = match m.get(k) {
                Some(a) => a + v,
                None => v.clone(),
            };
            if s.is_zero() {
                m.remove(k);
            } else {
                m.insert(k.clone(), s);
            }
        }
        (m.len() <= MAX_TERMS).then_some(Poly(m))
    }

    fn neg(&self) -> Poly {
        Poly(self.0.iter().map(|(k, v)| (k.clone(), -v)).collect())
    }

    fn scale(&self, c: &GaussianRational) -> Poly {
        if c.is_zero() {
            return Poly(BTreeMap::new());
        }
        Poly(self.0.iter().map(|(k, v)| (k.clone(), v * c)).collect())
    }

    fn mul(&self, o: &Poly) -> Option<Poly> {
        if self.0.len() * o.0.len() > MAX_TERMS * 4 {
            return None;
        }
        let mut acc = Poly(BTreeMap::new());
        for (ka, va) in &self.0 {
            let mut part = BTreeMap::new();
            for (kb, vb) in &o.0 {
                part.insert(mono_mul(ka, kb), va * vb);
            }
            acc = acc.add(&Poly(part))?;
        }
        Some(acc)
    }
}

fn mono_mul(a: &Monomial, b: &Monomial) -> Monomial {
    let mut m: BTreeMap<u32, u32> = a.iter().copied().collect();
    for &(i, e) in b {
        *m.entry(i).or_insert(0) += e;
    }
    m.into_iter().collect()
}

/// `num / den`, with `den` kept at 1 whenever possible.
#[derive(Clone, Debug)]
struct Frac {
    num: Poly,
    den: Poly,
}

impl Frac {
    fn poly(p: Poly) -> Self {
        Frac { num: p, den: Poly::constant(GaussianRational::one()) }
    }

    fn normalize(self) -> Frac {
        if let Some(c) = self.den.as_constant() {
            if let Ok(ci) = c.inv() {
                return Frac::poly(self.num.scale(&ci));
            }
        }
        self
    }

    fn add(&self, o: &Frac) -> Option<Frac> {
        if self.den == o.den {
            return Some(Frac { num: self.num.add(&o.num)?, den: self.den.clone() });
        }
        let num = self.num.mul(&o.den)?.add(&o.num.mul(&self.den)?)?;
        Some(Frac { num, den: self.den.mul(&o.den)? }.normalize())
    }

    fn mul(&self, o: &Frac) -> Option<Frac> {
        Some(Frac { num: self.num.mul(&o.num)?, den: self.den.mul(&o.den)? }.normalize())
    }

    fn inv(&self) -> Option<Frac> {
        if self.num.is_zero() {
            return None;
        }
        Some(Frac { num: self.den.clone(), den: self.num.clone() }.normalize())
    }

    fn neg(&self) -> Frac {
        Frac { num: self.num.neg(), den: self.den.clone() }
    }

    /// The constant value if `num = c * den` for a constant `c`.
    fn as_constant(&self) -> Option<GaussianRational> {
        if let Some(c) = self.den.as_constant() {
            let n = self.num.as_constant()?;
            return n.checked_div(&c).ok();
        }
        let (mk, mv) = self.den.0.iter().next_back()?;
        let nv = self.num.0.get(mk)?;
        let c = nv.checked_div(mv).ok()?;
        (self.den.scale(&c) == self.num).then_some(c)
    }
}

/// Reduce to an element of `K`, or `None` if no reduction is found.
///
/// ```
/// use mahler::corekit::{reduce_exact, SymbolicValue, Transcendental};
/// let e = SymbolicValue::base_eval(Transcendental::Exp, &SymbolicValue::int(1));
/// let v = SymbolicValue::add(&SymbolicValue::sub(&e, &e), &SymbolicValue::int(3));
/// assert_eq!(reduce_exact(&v).unwrap().to_string(), "3:0");
/// assert!(reduce_exact(&e).is_none());
/// ```
pub fn reduce_exact(v: &SymbolicValue) -> Option<GaussianRational> {
    if let Some(q) = v.exact_value() {
        return Some(q);
    }
    if let Some(r) = v.node().reduced.get() {
        return r.clone();
    }
    let mut r = normal_form(v, true);
    if r.is_none() {
        let size = post_order(std::slice::from_ref(v), |n| !n.is_structurally_exact()).len();
        if size <= FULL_EXPANSION_NODES {
            r = normal_form(v, false);
        }
    }
    let _ = v.node().reduced.set(r.clone());
    r
}

fn normal_form(root: &SymbolicValue, shared_atoms: bool) -> Option<GaussianRational> {
    let mut indegree: HashMap<u64, u32> = HashMap::new();
    if shared_atoms {
        for n in post_order(std::slice::from_ref(root), |n| !n.is_structurally_exact()) {
            if n.is_structurally_exact() {
                continue;
            }
            for c in n.children() {
                *indegree.entry(c.id()).or_insert(0) += 1;
            }
        }
    }
    let is_atom = |n: &SymbolicValue| {
        !n.is_structurally_exact()
            && (matches!(n.kind(), Kind::BaseEval(..))
                || (*n != *root && indegree.get(&n.id()).copied().unwrap_or(0) >= 2))
    };
    let nodes = post_order(std::slice::from_ref(root), |n| !n.is_structurally_exact() && !is_atom(n));
    let mut atoms: HashMap<u64, u32> = HashMap::new();
    let mut forms: HashMap<u64, Frac> = HashMap::new();
    for n in &nodes {
        let f = if is_atom(n) {
            let next = atoms.len() as u32;
            let i = *atoms.entry(n.id()).or_insert(next);
            Frac::poly(Poly::atom(i))
        } else if n.is_structurally_exact() {
            Frac::poly(Poly::constant(n.exact_value()?))
        } else {
            let get = |c: &SymbolicValue| forms.get(&c.id()).cloned();
            match n.kind() {
                Kind::Exact(q) => Frac::poly(Poly::constant(q.clone())),
                Kind::BaseEval(..) => unreachable!(),
                Kind::Sum(a, b) => get(a)?.add(&get(b)?)?,
                Kind::Product(a, b) => get(a)?.mul(&get(b)?)?,
                Kind::Quotient(a, b) => get(a)?.mul(&get(b)?.inv()?)?,
                Kind::Neg(a) => get(a)?.neg(),
                Kind::Pow(a, e) => {
                    let x = get(a)?;
                    let mut acc = Frac::poly(Poly::constant(GaussianRational::one()));
                    for _ in 0..*e {
                        acc = acc.mul(&x)?;
                    }
                    acc
                }
            }
        };
        forms.insert(n.id(), f);
    }
    forms.get(&root.id())?.as_constant()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corekit::{PrecisionPolicy, Transcendental};

    fn q(s: &str) -> SymbolicValue {
        SymbolicValue::exact(s.parse().unwrap())
    }

    #[test]
    fn product_of_exact() {
        let v = SymbolicValue::mul(&q("2"), &q("0:1"));
        assert_eq!(reduce_exact(&v).unwrap(), "0:2".parse().unwrap());
    }

    #[test]
    fn shared_prefix_cancels() {
        // eps = (t - F) / c; F + eps * c == t
        let p = PrecisionPolicy::default();
        let e1 = SymbolicValue::base_eval(Transcendental::Exp, &q("1/3"));
        let big = SymbolicValue::mul(&e1, &SymbolicValue::base_eval(Transcendental::Sin, &q("2")));
        let f = SymbolicValue::add(&big, &q("1/7"));
        let c = q("5:-2");
        let t = q("3/2:1");
        let eps = SymbolicValue::div(&SymbolicValue::sub(&t, &f), &c, &p).unwrap();
        let fact = SymbolicValue::add(&f, &SymbolicValue::mul(&eps, &c));
        assert_eq!(reduce_exact(&fact).unwrap(), "3/2:1".parse().unwrap());
    }

    #[test]
    fn rational_function_cancels() {
        let p = PrecisionPolicy::default();
        let e = SymbolicValue::base_eval(Transcendental::Exp, &q("1"));
        let num = SymbolicValue::mul(&q("3"), &SymbolicValue::add(&e, &q("1")));
        let den = SymbolicValue::add(&q("1"), &e);
        let v = SymbolicValue::div(&num, &den, &p).unwrap();
        assert_eq!(reduce_exact(&v).unwrap(), "3".parse().unwrap());
    }

    #[test]
    fn transcendental_stays() {
        let e = SymbolicValue::base_eval(Transcendental::Exp, &q("1"));
        let v = SymbolicValue::mul(&e, &e);
        assert!(reduce_exact(&v).is_none());
    }
}
