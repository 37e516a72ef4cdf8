//! Stage bookkeeping and the nail polynomial.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rug::Rational;

use super::config::ConstructionConfig;
use super::enumeration::AlgebraicEnumeration;
use crate::corekit::{Disk, GaussianRational};
use crate::entire::{Polynomial, StagedFunction};
use crate::error::{Error, Result};

/// `prod (z - tau)^2` over distinct exact roots, in nailing order.
#[derive(Debug)]
pub struct NailPolynomial {
    pub roots: Vec<GaussianRational>,
    expanded: OnceLock<Polynomial>,
}

impl NailPolynomial {
    pub fn new(roots: Vec<GaussianRational>) -> Self {
        NailPolynomial { roots, expanded: OnceLock::new() }
    }

    pub fn expanded(&self) -> &Polynomial {
        self.expanded.get_or_init(|| Polynomial::squared_from_roots(&self.roots))
    }

    /// Number of distinct roots, `D`.
    pub fn distinct(&self) -> usize {
        let mut seen: Vec<&GaussianRational> = Vec::new();
        for r in &self.roots {
            if !seen.contains(&r) {
                seen.push(r);
            }
        }
        seen.len()
    }

    pub fn degree(&self) -> usize {
        2 * self.roots.len()
    }

    /// Exact test `P(z) = 0`.
    pub fn vanishes_at(&self, z: &GaussianRational) -> bool {
        self.roots.contains(z)
    }
}

/// Which micro-step produced a term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepKind {
    Stabilize,
    NailValue,
    PinDerivative,
    Algebraize,
    Graft,
}

impl StepKind {
    pub fn name(self) -> &'static str {
        match self {
            StepKind::Stabilize => "stabilize",
            StepKind::NailValue => "nail",
            StepKind::PinDerivative => "pin",
            StepKind::Algebraize => "algebraize",
            StepKind::Graft => "graft",
        }
    }

    /// Grafting steps count against `l_n`, the rest against `s_n`.
    pub fn is_graft(self) -> bool {
        self == StepKind::Graft
    }
}

impl FromStr for StepKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "stabilize" => StepKind::Stabilize,
            "nail" => StepKind::NailValue,
            "pin" => StepKind::PinDerivative,
            "algebraize" => StepKind::Algebraize,
            "graft" => StepKind::Graft,
            _ => return Err(Error::Parse(format!("unknown step kind {s:?}"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FactKind {
    /// `f(alpha_i) = t` for a nailed target.
    Value,
    /// `f(tau) = alpha_i` for a registered preimage.
    Preimage,
    /// `f(gamma_j) = gamma_{j+1}` on a grafted orbit.
    Orbit,
}

impl FactKind {
    pub fn name(self) -> &'static str {
        match self {
            FactKind::Value => "value",
            FactKind::Preimage => "preimage",
            FactKind::Orbit => "orbit",
        }
    }
}

impl FromStr for FactKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "value" => FactKind::Value,
            "preimage" => FactKind::Preimage,
            "orbit" => FactKind::Orbit,
            _ => return Err(Error::Parse(format!("unknown fact kind {s:?}"))),
        })
    }
}

/// An exact identity `f(point) = value` that every later stage keeps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fact {
    pub stage: usize,
    pub kind: FactKind,
    pub point: GaussianRational,
    pub value: GaussianRational,
}

/// A certified preimage `tau` of `alpha_target`, with its isolating disk.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegistryEntry {
    pub stage: usize,
    pub target: usize,
    pub tau: GaussianRational,
    pub disk: Disk,
}

/// A grafted cycle `gamma_0 -> ... -> gamma_{k-1} -> gamma_0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Orbit {
    pub stage: usize,
    pub points: Vec<GaussianRational>,
}

impl Orbit {
    pub fn period(&self) -> usize {
        self.points.len()
    }
}

/// One admissibility predicate: perturbations must keep
/// `|f - alpha_target|` on the disk boundary above zero. `margin` is a
/// lower bound taken when the predicate was created, `consumed` an upper
/// bound on what the stage's terms used of it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Margin {
    pub stage: usize,
    pub disk: Disk,
    pub target: usize,
    pub margin: Rational,
    pub consumed: Rational,
}

/// Step budgets of one stage transition `n -> n+1`. The `*_formula`
/// values are the closed-form bounds; the hats are what the stage used
/// for `nu`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Budget {
    pub stage: usize,
    pub s_formula: u64,
    pub s_hat: u64,
    pub l_formula: u64,
    pub l_hat: u64,
    pub s_used: u64,
    pub l_used: u64,
}

impl Budget {
    pub fn total(&self) -> u64 {
        self.s_hat + self.l_hat
    }
}

/// A Taylor coefficient frozen into `K` at `stage`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoefficientRecord {
    pub k: usize,
    pub stage: usize,
    pub value: GaussianRational,
}

#[derive(Clone, Debug)]
pub struct StageState {
    pub config: ConstructionConfig,
    pub m: usize,
    /// `r_1, ..., r_m`.
    pub radii: Vec<Rational>,
    pub f: StagedFunction,
    /// Step kind of each term of `f`.
    pub roles: Vec<StepKind>,
    /// Number of nail roots in `P_k` for `k = 1..=m`.
    pub roots_at_close: Vec<usize>,
    /// Number of terms in `f_k` for `k = 1..=m`.
    pub terms_at_close: Vec<usize>,
    pub facts: Vec<Fact>,
    pub registry: Vec<RegistryEntry>,
    pub orbits: Vec<Orbit>,
    pub margins: Vec<Margin>,
    pub budgets: Vec<Budget>,
    pub coefficients: Vec<CoefficientRecord>,
}

impl StageState {
    pub fn radius(&self) -> &Rational {
        self.radii.last().expect("at least one stage")
    }

    /// `r_k`, 1-based; `r_0 = 0`.
    pub fn radius_at(&self, k: usize) -> Rational {
        if k == 0 {
            Rational::new()
        } else {
            self.radii[k - 1].clone()
        }
    }

    pub fn disk(&self) -> Disk {
        Disk::origin(self.radius().clone()).expect("positive radius")
    }

    /// `alpha_1, ..., alpha_count`.
    pub fn targets(&self, count: usize) -> Vec<GaussianRational> {
        AlgebraicEnumeration::new().prefix(count)
    }

    pub fn nail_poly(&self) -> NailPolynomial {
        NailPolynomial::new(self.f.nail_roots.clone())
    }

    /// `P_k` for a completed stage `k <= m`.
    pub fn nail_poly_at(&self, k: usize) -> NailPolynomial {
        NailPolynomial::new(self.f.nail_roots[..self.roots_at_close[k - 1]].to_vec())
    }

    /// `f_k`: the function as it stood when stage `k` closed.
    pub fn function_at(&self, k: usize) -> StagedFunction {
        let t = self.terms_at_close[k - 1];
        let r = self.roots_at_close[k - 1];
        StagedFunction::new(
            self.f.base.clone(),
            self.f.epsilon0.clone(),
            self.f.nail_roots[..r].to_vec(),
            self.f.terms[..t].to_vec(),
            *self.f.policy(),
        )
    }

    pub fn fact_at(&self, point: &GaussianRational) -> Option<&Fact> {
        self.facts.iter().find(|f| &f.point == point)
    }

    /// Grafted orbits of period `k`.
    pub fn orbits_of(&self, k: usize) -> impl Iterator<Item = &Orbit> {
        self.orbits.iter().filter(move |o| o.period() == k)
    }
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nail_poly_vanishes_doubly() {
        let roots: Vec<GaussianRational> = ["1:1", "-1/2:0"].iter().map(|s| s.parse().unwrap()).collect();
        let p = NailPolynomial::new(roots.clone());
        assert_eq!(p.distinct(), 2);
        assert_eq!(p.degree(), 4);
        for r in &roots {
            assert!(p.expanded().eval_exact(r).is_zero());
            assert!(p.expanded().derivative().eval_exact(r).is_zero());
            assert!(p.vanishes_at(r));
        }
        assert!(!p.vanishes_at(&GaussianRational::zero()));
    }
}
