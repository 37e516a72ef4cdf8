//! Staged construction: grafted orbits stay exact through later stages,
//! every `nu` matches its closed form, and stage files are reproducible.

use std::sync::OnceLock;

use mahler::construct::{init_stage, run_stage, statefile, ConstructionConfig, StageState};
use mahler::corekit::{reduce_exact, ComplexBox, GaussianRational, SymbolicValue};
use mahler::entire::Holomorphic;
use mahler::verify::{check_stage, geometric_sum, theta_chain, Status};
use mahler::Error;
use rug::{Integer, Rational};

/// `sigma = {2: 1}` through stage 4, every state kept.
fn two_cycle_run() -> &'static Vec<StageState> {
    static RUN: OnceLock<Vec<StageState>> = OnceLock::new();
    RUN.get_or_init(|| {
        let cfg: ConstructionConfig = "base = exp\nsigma = 2:1\nmax_stage = 4\nseed = 3".parse().unwrap();
        let mut out = vec![init_stage(&cfg).unwrap()];
        for _ in 0..3 {
            let next = run_stage(out.last().unwrap()).unwrap();
            out.push(next);
        }
        out
    })
}

fn exact_image(s: &StageState, f_stage: usize, z: &GaussianRational) -> Option<GaussianRational> {
    reduce_exact(&s.function_at(f_stage).eval_symbolic(&SymbolicValue::exact(z.clone())))
}

#[test]
fn grafted_two_cycle_is_exact_and_persists() {
    let run = two_cycle_run();
    assert_eq!(run[0].orbits_of(2).count(), 0);
    assert_eq!(run[1].orbits_of(2).count(), 1, "#Orb(2) goes up by exactly one");
    let orbit = run[1].orbits_of(2).next().unwrap().clone();
    let (g0, g1) = (&orbit.points[0], &orbit.points[1]);
    assert_ne!(g0, g1);
    for s in &run[1..] {
        assert_eq!(s.orbits_of(2).count(), 1);
        for k in 2..=s.m {
            assert_eq!(exact_image(s, k, g0).as_ref(), Some(g1), "stage {k}");
            assert_eq!(exact_image(s, k, g1).as_ref(), Some(g0), "stage {k}");
        }
        // independent numeric check of the same identities
        let b0 = ComplexBox::from_gaussian(g0, 256);
        let b1 = ComplexBox::from_gaussian(g1, 256);
        assert!(s.f.eval_box(&b0).unwrap().overlaps(&b1));
        assert!(s.f.eval_box(&b1).unwrap().overlaps(&b0));
    }
    let last = run.last().unwrap();
    let rep = check_stage(last);
    assert!(rep.accepted(), "{rep}");
    assert_eq!(rep.entry("orbits").unwrap().status, Status::Certified);
}

fn factorial(k: u32) -> Integer {
    Integer::from(Integer::factorial(k))
}

#[test]
fn every_nu_matches_its_closed_form() {
    let s = two_cycle_run().last().unwrap();
    for t in &s.f.terms {
        let n = t.stage as usize;
        let p = s.f.prefix_poly(t.nail_prefix);
        // sum of |c| bracketed from doubles
        let l: f64 = p.coeffs().iter().map(|c| {
            let (a, b) = c.to_f64();
            a.hypot(b)
        }).sum();
        let budget = s.budgets.iter().find(|b| b.stage == n + 1).unwrap();
        let big_theta = (1..=n as u32 + 2).map(|j| Rational::from((Integer::from(1), factorial(j) * 2u32))).min().unwrap();
        let base = Rational::from(n) + Rational::from(2) / big_theta;
        let power = Rational::from(rug::ops::Pow::pow(&base, (n + 3 + p.degree()) as u32));
        let rest = power * Rational::from(budget.s_hat + budget.l_hat);
        let at = |l: f64| (Rational::from_f64(l).unwrap() * &rest).recip();
        assert!(t.nu <= at(l * (1.0 - 1e-12)) && t.nu >= at(l * (1.0 + 1e-12)), "term {}.{}", t.stage, t.index);
        let eps = t.epsilon.enclose_f64(1e-30, s.f.policy()).unwrap();
        assert!(eps.abs_upper() < rug::Float::with_val(64, &t.nu));
    }
}

#[test]
fn theta_chain_and_ledger() {
    let s = two_cycle_run().last().unwrap();
    let chain = theta_chain(s);
    assert!(chain.holds());
    assert!(!chain.links.is_empty());
    for k in 1..=6 {
        let t = Rational::from((1, k));
        assert_eq!(geometric_sum(&t), t / 2);
    }
}

#[test]
fn state_files_round_trip_and_detect_edits() {
    let s = two_cycle_run().last().unwrap();
    let text = statefile::to_text(s);
    let back = statefile::from_text(&text).unwrap();
    assert_eq!(statefile::to_text(&back), text);
    let edited = text.replacen("[orbits]\norbit 2 ", "[orbits]\norbit 3 ", 1);
    assert_ne!(edited, text);
    assert_eq!(statefile::from_text(&edited).unwrap_err(), Error::Checksum);
    assert!(statefile::from_text(&statefile::reseal(&edited).unwrap()).is_ok());
}

#[test]
fn reruns_are_identical() {
    let cfg: ConstructionConfig = "base = sin\nsigma = 1:1\nmax_stage = 2\nseed = 11".parse().unwrap();
    let once = || statefile::to_text(&run_stage(&init_stage(&cfg).unwrap()).unwrap());
    assert_eq!(once(), once());
}

#[test]
fn first_stage_follows_the_epsilon_rule() {
    // b_0 + eps_0 must stay off zero, eps_0 below theta_0
    for (base, a0) in [("exp", "9/8:0"), ("exp-1", "1/8:0"), ("sin", "1/8:0")] {
        let s = init_stage(&format!("base = {base}").parse().unwrap()).unwrap();
        assert_eq!(s.coefficients[0].value.to_string(), a0);
        assert_eq!(s.m, 1);
        assert!(check_stage(&s).accepted());
    }
    let s = init_stage(&"base = exp\ntheta = 0:1/10".parse().unwrap()).unwrap();
    assert_eq!(s.coefficients[0].value.to_string(), "17/16:0");
}

#[test]
fn max_stage_is_enforced() {
    let s = init_stage(&"max_stage = 1".parse().unwrap()).unwrap();
    assert!(matches!(run_stage(&s), Err(Error::Precondition(_))));
}
