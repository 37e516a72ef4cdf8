//! Search for a perturbation size at which `g + eps P` has many fixed
//! points and many repelling cycles of each small period.

use rug::Rational;

use super::{search_cycles, CycleRecord, SeedGrid};
use crate::corekit::{ComplexBox, Disk, GaussianRational, PrecisionPolicy};
use crate::entire::{BaseFunction, Pencil, Polynomial};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Regime {
    pub delta1: Rational,
    pub delta2: Rational,
    pub radius: Rational,
    /// The central sample and what was found there.
    pub epsilon: Rational,
    pub fixed_points: Vec<CycleRecord>,
    /// `cycles[t - 2]`: repelling cycles of period `t`.
    pub cycles: Vec<Vec<CycleRecord>>,
}

/// Multiplier enclosure certified to avoid both `0` and `1`.
pub fn admissible_multiplier(c: &CycleRecord) -> bool {
    let prec = c.multiplier.prec();
    c.multiplier.disjoint(&ComplexBox::zero(prec)) && c.multiplier.disjoint(&ComplexBox::exact_int(1, prec))
}

type Found = (Vec<CycleRecord>, Vec<Vec<CycleRecord>>);

/// Checks one `eps`; `Err` carries the reason it failed.
fn probe(
    g: &BaseFunction,
    p: &Polynomial,
    eps: &Rational,
    k: usize,
    m: usize,
    disk: &Disk,
    policy: &PrecisionPolicy,
) -> Result<std::result::Result<Found, String>> {
    let f = Pencil { g: g.clone(), eps: GaussianRational::real(eps.clone()), p: p.clone() };
    let grid = SeedGrid::default();
    let fixed: Vec<CycleRecord> = search_cycles(&f, 1, disk, grid, policy)?.into_iter().filter(admissible_multiplier).collect();
    if fixed.len() < m {
        return Ok(Err(format!("eps {eps}: {} admissible fixed points in {disk}, need {m}", fixed.len())));
    }
    let mut cycles = Vec::new();
    for t in 2..=k {
        let rep: Vec<CycleRecord> = search_cycles(&f, t, disk, grid, policy)?.into_iter().filter(|c| c.repelling).collect();
        if rep.len() < m {
            return Ok(Err(format!("eps {eps}: {} repelling {t}-cycles in {disk}, need {m}", rep.len())));
        }
        cycles.push(rep);
    }
    Ok(Ok((fixed, cycles)))
}

/// Find `0 < delta1 < delta2 < delta` and a radius so that samples of
/// `eps` in `(delta1, delta2)` give at least `m` fixed points with
/// multiplier outside `{0, 1}` and `m` repelling `t`-cycles for each
/// `2 <= t <= k`.
pub fn fixed_point_regime(
    g: &BaseFunction,
    p: &Polynomial,
    k: usize,
    m: usize,
    delta: &Rational,
    policy: &PrecisionPolicy,
) -> Result<Regime> {
    if p.is_zero() || !g.is_transcendental() || *delta <= 0 {
        return Err(Error::Precondition("regime search needs transcendental g, P != 0, delta > 0".into()));
    }
    let mut last = String::from("no radius tried");
    for r in [4u32, 8, 16] {
        let disk = Disk::origin(Rational::from(r))?;
        for j in 1..=8u32 {
            let eps = Rational::from(delta / (1u32 << j));
            let found = match probe(g, p, &eps, k, m, &disk, policy) {
                Ok(Ok(f)) => f,
                Ok(Err(why)) => {
                    last = why;
                    continue;
                }
                Err(Error::Precondition(why)) => {
                    last = why;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let delta1 = &eps * Rational::from((3, 4));
            let delta2 = &eps * Rational::from((5, 4));
            let mut all = true;
            for s in [Rational::from((7, 8)), Rational::from((9, 8))] {
                if let Ok(Err(why)) | Err(Error::Precondition(why)) = probe(g, p, &Rational::from(&eps * &s), k, m, &disk, policy) {
                    last = why;
                    all = false;
                    break;
                }
            }
            if all {
                return Ok(Regime { delta1, delta2, radius: Rational::from(r), epsilon: eps, fixed_points: found.0, cycles: found.1 });
            }
        }
    }
    Err(Error::SearchExhausted(format!("fixed-point regime: {last}")))
}
