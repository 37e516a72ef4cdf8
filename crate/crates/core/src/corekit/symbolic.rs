//! Hash-consed value DAG.
//!
//! Every node is interned: two structurally equal expressions built
//! anywhere in the process are the same node. Exactness checks rely on
//! this, since a shared subexpression is recognised by identity.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};
use std::sync::{Arc, Mutex, OnceLock, Weak};

use rug::Float;

use super::ball::ComplexBox;
use super::gauss::GaussianRational;
use super::precision::PrecisionPolicy;
use crate::error::{Error, Result};

/// Leaves whose combined numerator and denominator bits stay below this
/// are folded into a single exact leaf.
const FOLD_BITS: u32 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Transcendental {
    Exp,
    Sin,
    Cos,
}

impl Transcendental {
    pub fn name(self) -> &'static str {
        match self {
            Transcendental::Exp => "exp",
            Transcendental::Sin => "sin",
            Transcendental::Cos => "cos",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "exp" => Some(Transcendental::Exp),
            "sin" => Some(Transcendental::Sin),
            "cos" => Some(Transcendental::Cos),
            _ => None,
        }
    }

    pub fn eval_box(self, z: &ComplexBox) -> ComplexBox {
        match self {
            Transcendental::Exp => z.exp(),
            Transcendental::Sin => z.sin(),
            Transcendental::Cos => z.cos(),
        }
    }

    pub fn at_zero(self) -> GaussianRational {
        match self {
            Transcendental::Sin => GaussianRational::zero(),
            _ => GaussianRational::one(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exactness {
    /// Built from exact leaves only.
    ExactInK,
    /// Contains transcendental leaves but reduces to an element of `K`.
    ExactAlgebraic,
    TranscendentalSymbolic,
}

pub enum Kind {
    Exact(GaussianRational),
    BaseEval(Transcendental, SymbolicValue),
    Sum(SymbolicValue, SymbolicValue),
    Product(SymbolicValue, SymbolicValue),
    Quotient(SymbolicValue, SymbolicValue),
    Neg(SymbolicValue),
    Pow(SymbolicValue, u32),
}

pub(crate) struct Node {
    id: u64,
    kind: Kind,
    structural_exact: bool,
    witness: Option<ComplexBox>,
    encl: Mutex<Option<(u32, ComplexBox)>>,
    exact: OnceLock<GaussianRational>,
    pub(crate) reduced: OnceLock<Option<GaussianRational>>,
}

#[derive(Clone)]
pub struct SymbolicValue(Arc<Node>);

#[derive(Hash, PartialEq, Eq)]
enum Key {
    Exact(GaussianRational),
    Base(Transcendental, u64),
    Sum(u64, u64),
    Prod(u64, u64),
    Quot(u64, u64),
    Neg(u64),
    Pow(u64, u32),
}

struct Interner {
    map: HashMap<Key, Weak<Node>>,
    purge_at: usize,
}

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

fn interner() -> &'static Mutex<Interner> {
    static I: OnceLock<Mutex<Interner>> = OnceLock::new();
    I.get_or_init(|| Mutex::new(Interner { map: HashMap::new(), purge_at: 4096 }))
}

fn intern(key: Key, kind: impl FnOnce() -> (Kind, Option<ComplexBox>)) -> SymbolicValue {
    let mut guard = interner().lock().unwrap();
    if let Some(node) = guard.map.get(&key).and_then(Weak::upgrade) {
        return SymbolicValue(node);
    }
    let (kind, witness) = kind();
    let structural_exact = match &kind {
        Kind::Exact(_) => true,
        Kind::BaseEval(..) => false,
        Kind::Sum(a, b) | Kind::Product(a, b) | Kind::Quotient(a, b) => {
            a.0.structural_exact && b.0.structural_exact
        }
        Kind::Neg(a) | Kind::Pow(a, _) => a.0.structural_exact,
    };
    let node = Arc::new(Node {
        id: NEXT_ID.fetch_add(1, AtomicOrdering::Relaxed),
        kind,
        structural_exact,
        witness,
        encl: Mutex::new(None),
        exact: OnceLock::new(),
        reduced: OnceLock::new(),
    });
    guard.map.insert(key, Arc::downgrade(&node));
    if guard.map.len() > guard.purge_at {
        guard.map.retain(|_, w| w.strong_count() > 0);
        guard.purge_at = (2 * guard.map.len()).max(4096);
    }
    SymbolicValue(node)
}

fn small(q: &GaussianRational) -> bool {
    let bits = q.re.numer().significant_bits()
        + q.re.denom().significant_bits()
        + q.im.numer().significant_bits()
        + q.im.denom().significant_bits();
    bits <= FOLD_BITS
}

impl SymbolicValue {
    pub fn exact(q: GaussianRational) -> Self {
        intern(Key::Exact(q.clone()), || (Kind::Exact(q), None))
    }

    pub fn int(n: i64) -> Self {
        Self::exact(GaussianRational::from_int(n))
    }

    pub fn zero() -> Self {
        Self::int(0)
    }

    pub fn one() -> Self {
        Self::int(1)
    }

    pub fn base_eval(t: Transcendental, arg: &SymbolicValue) -> Self {
        if arg.is_zero_leaf() {
            return Self::exact(t.at_zero());
        }
        intern(Key::Base(t, arg.0.id), || (Kind::BaseEval(t, arg.clone()), None))
    }

    pub fn add(a: &SymbolicValue, b: &SymbolicValue) -> Self {
        if a.is_zero_leaf() {
            return b.clone();
        }
        if b.is_zero_leaf() {
            return a.clone();
        }
        if let (Some(x), Some(y)) = (a.as_exact_leaf(), b.as_exact_leaf()) {
            let s = x + y;
            if small(&s) {
                return Self::exact(s);
            }
        }
        intern(Key::Sum(a.0.id, b.0.id), || (Kind::Sum(a.clone(), b.clone()), None))
    }

    pub fn neg(a: &SymbolicValue) -> Self {
        if let Some(x) = a.as_exact_leaf() {
            return Self::exact(-x);
        }
        if let Kind::Neg(inner) = &a.0.kind {
            return inner.clone();
        }
        intern(Key::Neg(a.0.id), || (Kind::Neg(a.clone()), None))
    }

    pub fn sub(a: &SymbolicValue, b: &SymbolicValue) -> Self {
        Self::add(a, &Self::neg(b))
    }

    pub fn mul(a: &SymbolicValue, b: &SymbolicValue) -> Self {
        if a.is_zero_leaf() || b.is_zero_leaf() {
            return Self::zero();
        }
        if a.is_one_leaf() {
            return b.clone();
        }
        if b.is_one_leaf() {
            return a.clone();
        }
        if let (Some(x), Some(y)) = (a.as_exact_leaf(), b.as_exact_leaf()) {
            let p = x * y;
            if small(&p) {
                return Self::exact(p);
            }
        }
        intern(Key::Prod(a.0.id, b.0.id), || (Kind::Product(a.clone(), b.clone()), None))
    }

    pub fn pow(a: &SymbolicValue, e: u32) -> Self {
        if e == 0 {
            return Self::one();
        }
        if e == 1 {
            return a.clone();
        }
        if let Some(x) = a.as_exact_leaf() {
            if x.is_zero() {
                return Self::zero();
            }
            let p = x.pow(e);
            if small(&p) {
                return Self::exact(p);
            }
        }
        intern(Key::Pow(a.0.id, e), || (Kind::Pow(a.clone(), e), None))
    }

    /// Quotient with a certified nonzero denominator.
    pub fn div(a: &SymbolicValue, b: &SymbolicValue, policy: &PrecisionPolicy) -> Result<Self> {
        if b.is_zero_leaf() {
            return Err(Error::DivisionByEnclosedZero("exact zero denominator".into()));
        }
        if b.is_one_leaf() {
            return Ok(a.clone());
        }
        if a.is_zero_leaf() {
            return Ok(Self::zero());
        }
        if let (Some(x), Some(y)) = (a.as_exact_leaf(), b.as_exact_leaf()) {
            let q = x.checked_div(y)?;
            if small(&q) {
                return Ok(Self::exact(q));
            }
        }
        {
            let guard = interner().lock().unwrap();
            if let Some(node) = guard.map.get(&Key::Quot(a.0.id, b.0.id)).and_then(Weak::upgrade) {
                return Ok(SymbolicValue(node));
            }
        }
        let witness = b.nonzero_witness(policy)?;
        Ok(intern(Key::Quot(a.0.id, b.0.id), || (Kind::Quotient(a.clone(), b.clone()), Some(witness))))
    }

    fn nonzero_witness(&self, policy: &PrecisionPolicy) -> Result<ComplexBox> {
        if let Some(v) = self.exact_value() {
            if v.is_zero() {
                return Err(Error::DivisionByEnclosedZero("denominator reduces to 0".into()));
            }
            let mut p = 64;
            loop {
                let b = ComplexBox::from_gaussian(&v, p);
                if b.excludes_zero() {
                    return Ok(b);
                }
                p *= 2;
            }
        }
        for p in policy.ladder() {
            if let Ok(b) = self.eval_at(p) {
                if b.excludes_zero() {
                    return Ok(b);
                }
            }
        }
        Err(Error::DivisionByEnclosedZero(format!("no witness up to {} bits", policy.ceiling)))
    }

    pub fn kind(&self) -> &Kind {
        &self.0.kind
    }

    pub(crate) fn id(&self) -> u64 {
        self.0.id
    }

    pub(crate) fn node(&self) -> &Node {
        &self.0
    }

    pub fn witness(&self) -> Option<&ComplexBox> {
        self.0.witness.as_ref()
    }

    pub fn as_exact_leaf(&self) -> Option<&GaussianRational> {
        match &self.0.kind {
            Kind::Exact(q) => Some(q),
            _ => None,
        }
    }

    fn is_zero_leaf(&self) -> bool {
        self.as_exact_leaf().is_some_and(|q| q.is_zero())
    }

    fn is_one_leaf(&self) -> bool {
        self.as_exact_leaf().is_some_and(|q| *q == GaussianRational::one())
    }

    /// True when every leaf is an exact element.
    pub fn is_structurally_exact(&self) -> bool {
        self.0.structural_exact
    }

    pub fn exactness_tag(&self) -> Exactness {
        if self.0.structural_exact {
            Exactness::ExactInK
        } else if matches!(self.0.reduced.get(), Some(Some(_))) {
            Exactness::ExactAlgebraic
        } else {
            Exactness::TranscendentalSymbolic
        }
    }

    pub(crate) fn children(&self) -> Vec<&SymbolicValue> {
        match &self.0.kind {
            Kind::Exact(_) => vec![],
            Kind::BaseEval(_, a) | Kind::Neg(a) | Kind::Pow(a, _) => vec![a],
            Kind::Sum(a, b) | Kind::Product(a, b) | Kind::Quotient(a, b) => vec![a, b],
        }
    }

    /// Exact value of a structurally exact node. Intermediate results are
    /// not cached; only the requested node keeps its value.
    pub fn exact_value(&self) -> Option<GaussianRational> {
        if !self.0.structural_exact {
            return None;
        }
        if let Some(v) = self.0.exact.get() {
            return Some(v.clone());
        }
        let mut memo: HashMap<u64, GaussianRational> = HashMap::new();
        for node in post_order(std::slice::from_ref(self), |v| v.0.exact.get().is_none()) {
            if let Some(v) = node.0.exact.get() {
                memo.insert(node.0.id, v.clone());
                continue;
            }
            let get = |v: &SymbolicValue, memo: &HashMap<u64, GaussianRational>| {
                v.0.exact.get().cloned().unwrap_or_else(|| memo[&v.0.id].clone())
            };
            let val = match &node.0.kind {
                Kind::Exact(q) => q.clone(),
                Kind::BaseEval(..) => unreachable!("structurally exact"),
                Kind::Sum(a, b) => &get(a, &memo) + &get(b, &memo),
                Kind::Product(a, b) => &get(a, &memo) * &get(b, &memo),
                Kind::Quotient(a, b) => get(a, &memo).checked_div(&get(b, &memo)).ok()?,
                Kind::Neg(a) => -&get(a, &memo),
                Kind::Pow(a, e) => get(a, &memo).pow(*e),
            };
            memo.insert(node.0.id, val);
        }
        let v = memo.remove(&self.0.id)?;
        let _ = self.0.exact.set(v.clone());
        Some(v)
    }

    /// Enclosure with centers at `prec` bits. Fails when a quotient's
    /// denominator is not separated from zero at this precision.
    pub fn eval_at(&self, prec: u32) -> Result<ComplexBox> {
        let cached = |v: &SymbolicValue| -> Option<ComplexBox> {
            let g = v.0.encl.lock().unwrap();
            g.as_ref().filter(|(p, _)| *p >= prec).map(|(_, b)| b.clone())
        };
        if let Some(b) = cached(self) {
            return Ok(b);
        }
        let mut memo: HashMap<u64, ComplexBox> = HashMap::new();
        let order = post_order(std::slice::from_ref(self), |v| cached(v).is_none());
        for node in order {
            if let Some(b) = cached(&node) {
                memo.insert(node.0.id, b);
                continue;
            }
            let get = |v: &SymbolicValue, memo: &HashMap<u64, ComplexBox>| {
                memo.get(&v.0.id).cloned().or_else(|| cached(v)).expect("child evaluated")
            };
            let b = match &node.0.kind {
                Kind::Exact(q) => ComplexBox::from_gaussian(q, prec),
                Kind::BaseEval(t, a) => t.eval_box(&get(a, &memo)),
                Kind::Sum(a, b) => get(a, &memo).add(&get(b, &memo)),
                Kind::Product(a, b) => get(a, &memo).mul(&get(b, &memo)),
                Kind::Quotient(a, b) => {
                    let d = get(b, &memo);
                    let n = get(a, &memo);
                    n.div(&d).ok_or_else(|| {
                        Error::DivisionByEnclosedZero(format!("denominator {d} at {prec} bits"))
                    })?
                }
                Kind::Neg(a) => get(a, &memo).neg(),
                Kind::Pow(a, e) => get(a, &memo).pow(*e),
            };
            if b.is_finite() {
                *node.0.encl.lock().unwrap() = Some((prec, b.clone()));
            }
            memo.insert(node.0.id, b);
        }
        Ok(memo.remove(&self.0.id).expect("root evaluated"))
    }

    /// Enclosure with radius at most `target`, raising precision along
    /// the policy ladder.
    pub fn enclose(&self, target: &Float, policy: &PrecisionPolicy) -> Result<ComplexBox> {
        let mut last_div = None;
        for p in policy.ladder() {
            match self.eval_at(p) {
                Ok(b) if b.is_finite() && b.rad() <= target => return Ok(b),
                Ok(_) => {}
                Err(e @ Error::DivisionByEnclosedZero(_)) => last_div = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(last_div.unwrap_or_else(|| {
            Error::precision(policy.ceiling, format!("radius {} not reached", target.to_f64()))
        }))
    }

    pub fn enclose_f64(&self, target: f64, policy: &PrecisionPolicy) -> Result<ComplexBox> {
        self.enclose(&Float::with_val(64, target), policy)
    }

    /// Number of distinct nodes reachable from `self`.
    pub fn dag_size(&self) -> usize {
        post_order(std::slice::from_ref(self), |_| true).len()
    }
}

/// Distinct nodes reachable from `roots`, children before parents, in a
/// deterministic order. `descend` decides whether a node's children are
/// visited; the node itself is always emitted.
pub(crate) fn post_order(
    roots: &[SymbolicValue],
    descend: impl Fn(&SymbolicValue) -> bool,
) -> Vec<SymbolicValue> {
    let mut seen: HashMap<u64, ()> = HashMap::new();
    let mut out = Vec::new();
    let mut stack: Vec<(SymbolicValue, bool)> = roots.iter().rev().map(|r| (r.clone(), false)).collect();
    while let Some((v, expanded)) = stack.pop() {
        if expanded {
            if seen.insert(v.0.id, ()).is_none() {
                out.push(v);
            }
            continue;
        }
        if seen.contains_key(&v.0.id) {
            continue;
        }
        stack.push((v.clone(), true));
        if descend(&v) {
            for c in v.children().into_iter().rev() {
                if !seen.contains_key(&c.0.id) {
                    stack.push((c.clone(), false));
                }
            }
        }
    }
    out
}

impl PartialEq for SymbolicValue {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

impl Eq for SymbolicValue {}

impl std::hash::Hash for SymbolicValue {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.id.hash(state)
    }
}

impl From<GaussianRational> for SymbolicValue {
    fn from(q: GaussianRational) -> Self {
        SymbolicValue::exact(q)
    }
}

impl fmt::Debug for SymbolicValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0.kind {
            Kind::Exact(q) if small(q) => write!(f, "{q}"),
            Kind::Exact(_) => write!(f, "<exact#{}>", self.0.id),
            Kind::BaseEval(t, a) => write!(f, "{}({:?})", t.name(), a),
            Kind::Sum(a, b) => write!(f, "({a:?} + {b:?})"),
            Kind::Product(a, b) => write!(f, "({a:?} * {b:?})"),
            Kind::Quotient(a, b) => write!(f, "({a:?} / {b:?})"),
            Kind::Neg(a) => write!(f, "-{a:?}"),
            Kind::Pow(a, e) => write!(f, "{a:?}^{e}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> SymbolicValue {
        SymbolicValue::exact(s.parse().unwrap())
    }

    #[test]
    fn interning_shares_nodes() {
        let e1 = SymbolicValue::base_eval(Transcendental::Exp, &q("1"));
        let e2 = SymbolicValue::base_eval(Transcendental::Exp, &q("1"));
        assert_eq!(e1, e2);
        let s1 = SymbolicValue::add(&e1, &q("3"));
        let s2 = SymbolicValue::add(&e2, &q("3"));
        assert_eq!(s1, s2);
    }

    #[test]
    fn exp_zero_folds() {
        let v = SymbolicValue::base_eval(Transcendental::Exp, &SymbolicValue::zero());
        assert_eq!(v.as_exact_leaf(), Some(&GaussianRational::one()));
    }

    #[test]
    fn division_by_zero_rejected() {
        let p = PrecisionPolicy::default();
        assert!(SymbolicValue::div(&q("1"), &q("0"), &p).is_err());
        let e = SymbolicValue::base_eval(Transcendental::Exp, &q("1"));
        let z = SymbolicValue::sub(&e, &e);
        assert!(matches!(SymbolicValue::div(&q("1"), &z, &p), Err(Error::DivisionByEnclosedZero(_))));
    }

    #[test]
    fn enclose_exact_element() {
        let p = PrecisionPolicy::default();
        let b = q("1/2:1/3").enclose_f64(1e-30, &p).unwrap();
        assert!(b.rad_f64() <= 1e-30);
        assert!(b.contains_gaussian(&"1/2:1/3".parse().unwrap()));
    }
}
