//! Canonical text form of value DAGs: an indexed node list, children
//! before parents.
//!
//! ```text
//! 0 q 1:0
//! 1 b exp 0
//! 2 + 1 0
//! ```

use std::collections::HashMap;

use super::precision::PrecisionPolicy;
use super::symbolic::{post_order, Kind, SymbolicValue, Transcendental};
use crate::error::{Error, Result};

/// Collects nodes reachable from registered roots and assigns indices.
#[derive(Default)]
pub struct DagWriter {
    index: HashMap<u64, usize>,
    lines: Vec<String>,
}

impl DagWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register `v` (and everything below it); returns its index.
    pub fn add(&mut self, v: &SymbolicValue) -> usize {
        if let Some(&i) = self.index.get(&v.id()) {
            return i;
        }
        let known = &self.index;
        for n in post_order(std::slice::from_ref(v), |n| !known.contains_key(&n.id())) {
            if self.index.contains_key(&n.id()) {
                continue;
            }
            let i = self.lines.len();
            let idx = |c: &SymbolicValue| self.index[&c.id()];
            let body = match n.kind() {
                Kind::Exact(q) => format!("q {q}"),
                Kind::BaseEval(t, a) => format!("b {} {}", t.name(), idx(a)),
                Kind::Sum(a, b) => format!("+ {} {}", idx(a), idx(b)),
                Kind::Product(a, b) => format!("* {} {}", idx(a), idx(b)),
                Kind::Quotient(a, b) => format!("/ {} {}", idx(a), idx(b)),
                Kind::Neg(a) => format!("- {}", idx(a)),
                Kind::Pow(a, e) => format!("^ {} {}", idx(a), e),
            };
            self.lines.push(format!("{i} {body}"));
            self.index.insert(n.id(), i);
        }
        self.index[&v.id()]
    }

    pub fn lines(&self) -> &[String] {
        &self.lines
    }
}

/// Rebuild nodes from lines produced by [`DagWriter`].
pub fn read_dag(lines: &[&str], policy: &PrecisionPolicy) -> Result<Vec<SymbolicValue>> {
    let mut nodes: Vec<SymbolicValue> = Vec::with_capacity(lines.len());
    for (k, line) in lines.iter().enumerate() {
        let tok: Vec<&str> = line.split_whitespace().collect();
        let bad = |m: &str| Error::Parse(format!("node line {k}: {m}: {line:?}"));
        let i: usize = tok.first().and_then(|s| s.parse().ok()).ok_or_else(|| bad("index"))?;
        if i != k {
            return Err(bad("out of order"));
        }
        let op = *tok.get(1).ok_or_else(|| bad("missing op"))?;
        let child = |pos: usize| -> Result<SymbolicValue> {
            let j: usize = tok.get(pos).and_then(|s| s.parse().ok()).ok_or_else(|| bad("child"))?;
            nodes.get(j).cloned().ok_or_else(|| bad("forward reference"))
        };
        let v = match op {
            "q" => SymbolicValue::exact(tok.get(2).ok_or_else(|| bad("value"))?.parse()?),
            "b" => {
                let t = tok.get(2).and_then(|s| Transcendental::parse(s)).ok_or_else(|| bad("function"))?;
                SymbolicValue::base_eval(t, &child(3)?)
            }
            "+" => SymbolicValue::add(&child(2)?, &child(3)?),
            "*" => SymbolicValue::mul(&child(2)?, &child(3)?),
            "/" => SymbolicValue::div(&child(2)?, &child(3)?, policy)?,
            "-" => SymbolicValue::neg(&child(2)?),
            "^" => {
                let e: u32 = tok.get(3).and_then(|s| s.parse().ok()).ok_or_else(|| bad("exponent"))?;
                SymbolicValue::pow(&child(2)?, e)
            }
            _ => return Err(bad("unknown op")),
        };
        nodes.push(v);
    }
    Ok(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_identity() {
        let p = PrecisionPolicy::default();
        let x = SymbolicValue::exact("1/3:2".parse().unwrap());
        let e = SymbolicValue::base_eval(Transcendental::Exp, &x);
        let s = SymbolicValue::add(&e, &SymbolicValue::pow(&e, 3));
        let v = SymbolicValue::div(&s, &SymbolicValue::neg(&e), &p).unwrap();
        let mut w = DagWriter::new();
        let root = w.add(&v);
        let text: Vec<&str> = w.lines().iter().map(|s| s.as_str()).collect();
        let back = read_dag(&text, &p).unwrap();
        assert_eq!(back[root], v);
        let mut w2 = DagWriter::new();
        w2.add(&back[root]);
        assert_eq!(w.lines(), w2.lines());
    }
}
