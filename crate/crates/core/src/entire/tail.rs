//! Bounds on the stages not yet built.

use rug::float::Round;
use rug::ops::Pow;
use rug::{Float, Rational};

use super::staged::StagedFunction;
use crate::corekit::{up, ComplexBox};
use crate::error::{Error, Result};

/// How many future stages are summed term by term before the geometric
/// remainder takes over.
const EXPLICIT_STAGES: usize = 64;

#[derive(Clone, Debug)]
pub struct TailCertificate {
    pub through_stage: usize,
    pub radius: Rational,
    /// Upper bound on the sum of all stage contributions after `through_stage`
    /// on `|z| <= radius`.
    pub bound: Float,
}

/// Bound the contribution of stages `m > n` on `|z| <= r`.
///
/// Stage `m` adds terms with `|eps| < nu_{m,j}`, so on the disk the whole
/// stage is at most `rho^(m+2) / D` where `D = m + 2/Theta_{m+2}` and
/// `rho = max(1, r) / D`. `big_theta(k)` must return `Theta_k`.
///
/// Also checks that every recorded term respects its own bound.
pub fn tail_certificate(
    f: &StagedFunction,
    r: &Rational,
    n: usize,
    big_theta: &dyn Fn(usize) -> Rational,
) -> Result<TailCertificate> {
    for t in &f.terms {
        let nu = Float::with_val(64, &t.nu);
        let target = Float::with_val_round(64, &t.nu * Rational::from((1, 1u64 << 20)), Round::Down).0;
        let e = t.epsilon.enclose(&target, f.policy())?.abs_upper();
        if !(e < nu) {
            return Err(Error::InvalidSchedule(format!(
                "stage {} term {}: |eps| <= {} is not below nu = {}",
                t.stage,
                t.index,
                e.to_f64(),
                t.nu.to_f64()
            )));
        }
    }
    let big_r = if *r > 1 { r.clone() } else { Rational::from(1) };
    let mut acc = Float::new(64);
    let mut last_term = Float::new(64);
    let mut last_rho = Float::new(64);
    for m in n + 1..=n + EXPLICIT_STAGES {
        let d = Rational::from(m) + Rational::from(2) / big_theta(m + 2);
        let rho = Float::with_val_round(64, Rational::from(&big_r / &d), Round::Up).0;
        if rho >= 1 {
            return Err(Error::Precondition(format!(
                "radius {} too large for stage {m}: no convergent bound",
                r.to_f64()
            )));
        }
        let d_lo = Float::with_val_round(64, &d, Round::Down).0;
        let term = up(&up(Pow::pow(&rho, (m + 2) as u32)) / &d_lo);
        acc = up(&acc + &term);
        last_term = term;
        last_rho = rho;
    }
    // later ratios are at most the last rho since D grows
    let one_minus = Float::with_val_round(64, 1 - &last_rho, Round::Down).0;
    let rest = up(&up(&last_term * &last_rho) / &one_minus);
    acc = up(&acc + &rest);
    Ok(TailCertificate { through_stage: n, radius: r.clone(), bound: acc })
}

/// Widen an enclosure of `f(z)` by a tail bound.
pub fn widen(b: &ComplexBox, t: &TailCertificate) -> ComplexBox {
    b.inflate(&t.bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corekit::{GaussianRational, PrecisionPolicy, SymbolicValue};
    use crate::entire::{BaseFunction, PerturbationTerm};
    use rug::Integer;

    fn theta(k: usize) -> Rational {
        Rational::from((Integer::from(1), Integer::from(2) * Integer::from(Integer::factorial(k as u32))))
    }

    fn big_theta(k: usize) -> Rational {
        (1..=k.max(1)).map(theta).min().unwrap()
    }

    fn exp() -> StagedFunction {
        StagedFunction::plain(BaseFunction::supplied("exp").unwrap(), GaussianRational::zero(), PrecisionPolicy::default())
    }

    #[test]
    fn decreasing_in_stage() {
        let f = exp();
        let one = Rational::from(1);
        let mut last = f64::INFINITY;
        for n in 1..8 {
            let t = tail_certificate(&f, &one, n, &big_theta).unwrap().bound.to_f64();
            assert!(t < last && t > 0.0);
            last = t;
        }
    }

    #[test]
    fn violation_is_reported() {
        let f = exp().with_term(PerturbationTerm {
            stage: 1,
            index: 1,
            epsilon: SymbolicValue::exact(GaussianRational::ratio(1, 10)),
            exponent: 3,
            nail_prefix: 0,
            nu: Rational::from((1, 100)),
        });
        assert!(matches!(tail_certificate(&f, &Rational::from(1), 1, &big_theta), Err(Error::InvalidSchedule(_))));
    }
}
