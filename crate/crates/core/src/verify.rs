//! Independent re-check of a completed stage. Everything is recomputed
//! from the state itself; failures are reported, never repaired.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rug::float::Round;
use rug::ops::Pow;
use rug::{Float, Rational};

use crate::construct::{nu_bound, FactKind, StageState, StepKind};
use crate::corekit::{reduce_exact, up, ComplexBox, Disk, GaussianRational, SymbolicValue};
use crate::cycles::multiplier;
use crate::entire::{tail_certificate, Holomorphic, Shifted, StagedFunction, TailCertificate};
use crate::rootcount::{boundary_min_abs, count_zeros};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Certified,
    Failed,
    NotApplicable,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Certified => "certified",
            Status::Failed => "failed",
            Status::NotApplicable => "not-applicable",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Entry {
    /// Short key: `i` .. `vii`, `orbits`, `margins`, `census`, ...
    pub key: &'static str,
    pub title: &'static str,
    pub status: Status,
    pub notes: Vec<String>,
}

/// `|a_k - b_k|` against `theta_k`.
#[derive(Clone, Debug)]
pub struct ThetaRow {
    pub k: usize,
    pub exact: Option<GaussianRational>,
    pub distance: Float,
    pub theta: Rational,
    pub ok: bool,
}

#[derive(Clone, Debug)]
pub struct NuRow {
    pub stage: u32,
    pub index: u32,
    pub role: StepKind,
    pub eps_upper: Float,
    pub nu: Rational,
    pub ok: bool,
}

#[derive(Clone, Debug)]
pub struct CensusRow {
    pub k: usize,
    pub want: usize,
    pub grafted: usize,
}

#[derive(Clone, Debug)]
pub struct InvariantReport {
    pub stage: usize,
    pub entries: Vec<Entry>,
    pub theta: Vec<ThetaRow>,
    pub nu: Vec<NuRow>,
    pub census: Vec<CensusRow>,
    pub chain: ThetaChain,
    pub mahler: MahlerReport,
}

impl InvariantReport {
    /// Every applicable entry is certified.
    pub fn accepted(&self) -> bool {
        self.entries.iter().all(|e| e.status != Status::Failed)
    }

    pub fn failed(&self) -> Vec<&Entry> {
        self.entries.iter().filter(|e| e.status == Status::Failed).collect()
    }

    pub fn entry(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    /// One `entry <key> <status>` line per entry, then the ledgers.
    pub fn to_text(&self) -> String {
        let mut out = format!("mahler-report v1\nstage {}\naccepted {}\n", self.stage, self.accepted());
        for e in &self.entries {
            out += &format!("entry {} {}\n", e.key, e.status.name());
            for n in &e.notes {
                out += &format!("  note {n}\n");
            }
        }
        for t in &self.theta {
            out += &format!(
                "theta {} {} {:.3e} {} {}\n",
                t.k,
                t.exact.as_ref().map_or("-".to_string(), |q| q.to_string()),
                t.distance.to_f64(),
                t.theta,
                t.ok
            );
        }
        for n in &self.nu {
            out += &format!("nu {} {} {} {:.3e} {:.3e} {}\n", n.stage, n.index, n.role, n.eps_upper.to_f64(), n.nu.to_f64(), n.ok);
        }
        for c in &self.census {
            out += &format!("census {} {} {}\n", c.k, c.want, c.grafted);
        }
        for l in &self.chain.links {
            out += &format!("chain {} {} {:.3e} {:.3e} {}\n", l.coefficient, l.name, l.lhs.to_f64(), l.rhs.to_f64(), l.holds);
        }
        if let Some(t) = &self.mahler.tail {
            out += &format!("tail {} {:.3e}\n", t.radius, t.bound.to_f64());
        }
        out
    }
}

impl fmt::Display for InvariantReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "stage {}: {}", self.stage, if self.accepted() { "accepted" } else { "REJECTED" })?;
        for e in &self.entries {
            writeln!(f, "  {:<11} {:<15} {}", e.key, e.status.name(), e.title)?;
            if e.status == Status::Failed {
                for n in e.notes.iter().take(5) {
                    writeln!(f, "      {n}")?;
                }
            }
        }
        Ok(())
    }
}

struct Builder {
    entries: Vec<Entry>,
}

impl Builder {
    fn push(&mut self, key: &'static str, title: &'static str, notes: Vec<String>) {
        let status = if notes.is_empty() { Status::Certified } else { Status::Failed };
        self.entries.push(Entry { key, title, status, notes });
    }

    fn skip(&mut self, key: &'static str, title: &'static str, why: &str) {
        self.entries.push(Entry { key, title, status: Status::NotApplicable, notes: vec![why.to_string()] });
    }
}

fn float_up(q: &Rational) -> Float {
    Float::with_val_round(64, q, Round::Up).0
}

fn float_down(q: &Rational) -> Float {
    Float::with_val_round(64, q, Round::Down).0
}

fn exact_value_of(f: &StagedFunction, z: &GaussianRational) -> Option<GaussianRational> {
    reduce_exact(&f.eval_symbolic(&SymbolicValue::exact(z.clone())))
}

fn deriv_nonzero(f: &StagedFunction, z: &GaussianRational) -> bool {
    f.deriv_box(&ComplexBox::from_gaussian(z, 256)).map(|d| d.excludes_zero()).unwrap_or(false)
}

/// Structural sanity: close counts, term bookkeeping and exponents.
fn check_terms(s: &StageState) -> Vec<String> {
    let mut bad = Vec::new();
    let m = s.m;
    if s.roles.len() != s.f.terms.len() {
        bad.push(format!("{} roles for {} terms", s.roles.len(), s.f.terms.len()));
    }
    if s.radii.len() != m || s.roots_at_close.len() != m || s.terms_at_close.len() != m {
        bad.push("close records do not cover every stage".into());
        return bad;
    }
    if s.terms_at_close[0] != 0 || s.roots_at_close[0] != 0 {
        bad.push("stage 1 must have no terms".into());
    }
    for k in 1..m {
        if s.terms_at_close[k] < s.terms_at_close[k - 1] || s.roots_at_close[k] < s.roots_at_close[k - 1] {
            bad.push(format!("close counts shrink at stage {}", k + 1));
        }
    }
    if s.terms_at_close[m - 1] != s.f.terms.len() || s.roots_at_close[m - 1] != s.f.nail_roots.len() {
        bad.push("last close counts do not match the function".into());
    }
    for k in 1..m {
        let n = k as u32;
        for i in s.terms_at_close[k - 1]..s.terms_at_close[k].min(s.f.terms.len()) {
            let t = &s.f.terms[i];
            let role = s.roles.get(i).copied().unwrap_or(StepKind::Stabilize);
            if t.stage != n {
                bad.push(format!("term {i} claims stage {} inside transition {n}", t.stage));
            }
            let want = if role == StepKind::Stabilize { n + 1 } else { n + 2 };
            if t.exponent != want {
                bad.push(format!("term {i} ({role}) has exponent {} instead of {want}", t.exponent));
            }
            if t.nail_prefix > s.roots_at_close[k] {
                bad.push(format!("term {i} uses roots not yet nailed at stage {}", k + 1));
            }
        }
    }
    bad
}

/// Nail set, divisibility, radii and orbit counts.
fn check_nails(s: &StageState) -> Vec<String> {
    let mut bad = Vec::new();
    let roots = &s.f.nail_roots;
    let set: BTreeSet<String> = roots.iter().map(|r| r.to_string()).collect();
    if set.len() != roots.len() {
        bad.push("repeated nail root".into());
    }
    if roots.iter().any(|r| r.is_zero()) {
        bad.push("0 is a nail root".into());
    }
    let mut expect: BTreeSet<String> = BTreeSet::new();
    for f in s.facts.iter().filter(|f| f.kind == FactKind::Value) {
        expect.insert(f.point.to_string());
    }
    for r in &s.registry {
        expect.insert(r.tau.to_string());
    }
    for o in &s.orbits {
        for p in &o.points {
            expect.insert(p.to_string());
        }
    }
    for x in expect.difference(&set) {
        bad.push(format!("{x} should be a nail root"));
    }
    for x in set.difference(&expect) {
        bad.push(format!("nail root {x} has no role"));
    }
    for (j, a) in s.targets(s.m).iter().enumerate().skip(1) {
        if !roots.contains(a) {
            bad.push(format!("alpha_{} = {a} is not nailed", j + 1));
        }
    }
    for k in 1..s.m {
        let lo = s.nail_poly_at(k);
        let hi = s.nail_poly_at(k + 1);
        if !lo.expanded().divides(hi.expanded()) {
            bad.push(format!("P_{k} does not divide P_{}", k + 1));
        }
        let r = s.radius_at(k);
        let r1 = s.radius_at(k + 1);
        if !(r1 > k + 1 && r1 > r) {
            bad.push(format!("r_{} = {r1} is not above max({}, {r})", k + 1, k + 1));
        }
    }
    if s.m >= 2 {
        for k in 1..=s.m {
            let want = s.config.s(k).capped(s.m);
            let got = s.orbits_of(k).count();
            if want != got {
                bad.push(format!("{got} grafted {k}-orbits, expected {want}"));
            }
        }
    }
    bad
}

/// Every fact reduces exactly; `f'` is separated from 0 at nailed targets
/// and preimages; each `alpha_j`, `j >= 2`, has a registered preimage.
fn check_facts(s: &StageState) -> Vec<String> {
    let mut bad = Vec::new();
    for fact in &s.facts {
        match exact_value_of(&s.f, &fact.point) {
            Some(v) if v == fact.value => {}
            Some(v) => bad.push(format!("f({}) = {v}, recorded {}", fact.point, fact.value)),
            None => bad.push(format!("f({}) does not reduce in K", fact.point)),
        }
        if fact.kind != FactKind::Orbit && !deriv_nonzero(&s.f, &fact.point) {
            bad.push(format!("f'({}) not separated from 0", fact.point));
        }
    }
    let targets = s.targets(s.m);
    for j in 2..=s.m {
        let w = &targets[j - 1];
        let hit = s.registry.iter().any(|r| r.target == j && s.facts.iter().any(|f| f.point == r.tau && &f.value == w));
        if !hit {
            bad.push(format!("no registered preimage of alpha_{j} = {w}"));
        }
    }
    bad
}

fn eps_upper(t: &crate::entire::PerturbationTerm, s: &StageState) -> Option<(Float, Float)> {
    let target = float_down(&(t.nu.clone() / Rational::from(1u64 << 20)));
    let b = t.epsilon.enclose(&target, &s.config.policy).ok()?;
    Some((b.abs_upper(), b.abs_lower()))
}

/// `0 < |eps| < nu` with `nu` no larger than the formula allows, and the
/// step budgets.
fn check_nu(s: &StageState, rows: &mut Vec<NuRow>) -> Vec<String> {
    let mut bad = Vec::new();
    for (i, t) in s.f.terms.iter().enumerate() {
        let n = t.stage as usize;
        let role = s.roles.get(i).copied().unwrap_or(StepKind::Stabilize);
        let Some(budget) = s.budgets.iter().find(|b| b.stage == n + 1) else {
            bad.push(format!("term {i}: no budget for stage {}", n + 1));
            continue;
        };
        let p = s.f.prefix_poly(t.nail_prefix);
        let length = p.length_upper().to_rational().unwrap_or_default();
        let formula = nu_bound(n, &length, budget.total(), &s.config.big_theta(n + 2), p.degree());
        let mut ok = t.nu <= formula && t.nu > 0;
        if !ok {
            bad.push(format!("term {i}: recorded nu {:.3e} exceeds the formula {:.3e}", t.nu.to_f64(), formula.to_f64()));
        }
        let (hi, lo) = eps_upper(t, s).unwrap_or((Float::with_val(64, f64::INFINITY), Float::new(64)));
        if !(hi < float_down(&t.nu)) || !(lo > 0) {
            ok = false;
            bad.push(format!("term {i}: |eps| in [{:.3e}, {:.3e}] is not inside (0, nu = {:.3e})", lo.to_f64(), hi.to_f64(), t.nu.to_f64()));
        }
        rows.push(NuRow { stage: t.stage, index: t.index, role, eps_upper: hi, nu: t.nu.clone(), ok });
    }
    for b in &s.budgets {
        let n = b.stage - 1;
        let (lo, hi) = (
            s.terms_at_close.get(n - 1).copied().unwrap_or(0),
            s.terms_at_close.get(n).copied().unwrap_or(0),
        );
        let roles = &s.roles[lo.min(s.roles.len())..hi.min(s.roles.len())];
        let grafts = roles.iter().filter(|r| r.is_graft()).count() as u64;
        let others = roles.len() as u64 - grafts;
        if others != b.s_used || grafts != b.l_used {
            bad.push(format!("stage {}: budget records {}+{} steps, found {others}+{grafts}", b.stage, b.s_used, b.l_used));
        }
        if b.s_used > b.s_hat || b.l_used > b.l_hat {
            bad.push(format!("stage {}: {}+{} steps exceed {}+{}", b.stage, b.s_used, b.l_used, b.s_hat, b.l_hat));
        }
        if n >= 1 && n <= s.m {
            let f_n = s.function_at(n);
            let deg_p = 2 * s.roots_at_close[n - 1];
            let formula = 1 + (n * f_n.perturbation_degree().max(n + 1 + deg_p)) as u64;
            if b.s_formula != formula || b.s_hat < formula {
                bad.push(format!("stage {}: s-budget {} does not cover {formula}", b.stage, b.s_hat));
            }
        }
    }
    bad
}

/// Coefficients `a_k`: exact in `K` for `k <= m`, within `theta_k` of
/// `b_k` for every touched `k`.
fn check_coefficients(s: &StageState, rows: &mut Vec<ThetaRow>) -> Vec<String> {
    let mut bad = Vec::new();
    let top = s.f.perturbation_degree().max(s.m);
    for k in 0..=top {
        let a = s.f.taylor_coefficient(k);
        let b = s.f.base.taylor_coefficient(k);
        let theta = s.config.theta(k);
        let exact = if k <= s.m { reduce_exact(&a) } else { None };
        if k <= s.m {
            match &exact {
                None => bad.push(format!("a_{k} does not reduce in K")),
                Some(q) => {
                    if let Some(rec) = s.coefficients.iter().find(|c| c.k == k) {
                        if &rec.value != q {
                            bad.push(format!("a_{k} = {q} but recorded {}", rec.value));
                        }
                    }
                    if q.is_zero() {
                        bad.push(format!("a_{k} = 0"));
                    }
                }
            }
        }
        let diff = SymbolicValue::sub(&a, &SymbolicValue::exact(b));
        let distance = match &exact {
            Some(q) => {
                let d = q - &s.f.base.taylor_coefficient(k);
                float_up(&d.abs_upper())
            }
            None => diff
                .enclose(&Float::with_val(64, &float_down(&theta) >> 40), &s.config.policy)
                .map(|e| e.abs_upper())
                .unwrap_or_else(|_| Float::with_val(64, f64::INFINITY)),
        };
        let ok = match &exact {
            Some(q) => (q - &s.f.base.taylor_coefficient(k)).norm_sqr() < Rational::from(theta.square_ref()),
            None => distance < float_down(&theta),
        };
        if !ok {
            bad.push(format!("|a_{k} - b_{k}| <= {:.3e} is not below theta_{k} = {theta}", distance.to_f64()));
        }
        rows.push(ThetaRow { k, exact, distance, theta, ok });
    }
    bad
}

/// Zero counts of `f - alpha_i` on `B(0, r_m)` and `B(0, r_{m-1})` match
/// the registry.
fn check_counts(s: &StageState) -> Vec<String> {
    let mut bad = Vec::new();
    if s.m < 2 {
        return bad;
    }
    let targets = s.targets(s.m);
    let policy = s.config.policy;
    for (stage, upto) in [(s.m, s.m), (s.m - 1, s.m - 1)] {
        let r = s.radius_at(stage);
        let Ok(disk) = Disk::origin(r.clone()) else { continue };
        for i in 2..=upto {
            let g = Shifted::new(&s.f, targets[i - 1].clone());
            let expected = s
                .registry
                .iter()
                .filter(|e| e.target == i && e.tau.norm_sqr() < Rational::from(r.square_ref()))
                .count() as u64;
            match count_zeros(&g, &disk, &policy) {
                Ok(c) if c.count == expected => {}
                Ok(c) => bad.push(format!("f - alpha_{i} has {} zeros in {disk}, registry has {expected}", c.count)),
                Err(e) => bad.push(format!("count of f - alpha_{i} on {disk}: {e}")),
            }
        }
    }
    for r in &s.registry {
        let g = Shifted::new(&s.f, targets.get(r.target - 1).cloned().unwrap_or_else(GaussianRational::zero));
        match count_zeros(&g, &r.disk, &policy) {
            Ok(c) if c.count == 1 => {}
            Ok(c) => bad.push(format!("{} zeros in the disk of {}", c.count, r.tau)),
            Err(e) => bad.push(format!("disk of {}: {e}", r.tau)),
        }
    }
    bad
}

/// If `alpha_k` was not a root of `P_{k-1}`, its nailed value is not a
/// root of `P_k`.
fn check_values_free(s: &StageState) -> Vec<String> {
    let mut bad = Vec::new();
    for f in s.facts.iter().filter(|f| f.kind == FactKind::Value) {
        let p = s.nail_poly_at(f.stage.min(s.m));
        if p.vanishes_at(&f.value) {
            bad.push(format!("value {} of {} is a root of P_{}", f.value, f.point, f.stage));
        }
    }
    bad
}

/// Grafted orbits: exact links, distinct nailed points inside the disk,
/// repelling; and no cycle among facts that is not a recorded orbit.
fn check_orbits(s: &StageState) -> Vec<String> {
    let mut bad = Vec::new();
    let link: BTreeMap<String, String> = s.facts.iter().map(|f| (f.point.to_string(), f.value.to_string())).collect();
    for o in &s.orbits {
        let k = o.points.len();
        let names: BTreeSet<String> = o.points.iter().map(|p| p.to_string()).collect();
        if names.len() != k || k == 0 {
            bad.push(format!("orbit at stage {} has repeated points", o.stage));
            continue;
        }
        let disk = Disk::origin(s.radius_at(o.stage.min(s.m)));
        for (i, p) in o.points.iter().enumerate() {
            let next = &o.points[(i + 1) % k];
            if link.get(&p.to_string()) != Some(&next.to_string()) {
                bad.push(format!("no fact {p} -> {next}"));
            }
            match exact_value_of(&s.f, p) {
                Some(v) if &v == next => {}
                _ => bad.push(format!("f({p}) does not reduce to {next}")),
            }
            if !s.f.is_nail_root(p) {
                bad.push(format!("orbit point {p} is not nailed"));
            }
            if let Ok(d) = &disk {
                if !d.contains_box(&ComplexBox::from_gaussian(p, 128)) {
                    bad.push(format!("orbit point {p} outside {d}"));
                }
            }
        }
        let boxes: Vec<ComplexBox> = o.points.iter().map(|p| ComplexBox::from_gaussian(p, 256)).collect();
        match multiplier(&s.f, &boxes) {
            Ok(m) if m.abs_lower() > 1 => {}
            _ => bad.push(format!("orbit through {} is not certified repelling", o.points[0])),
        }
    }
    // cycles of the fact graph
    let recorded: BTreeSet<Vec<String>> = s
        .orbits
        .iter()
        .map(|o| {
            let mut v: Vec<String> = o.points.iter().map(|p| p.to_string()).collect();
            v.sort();
            v
        })
        .collect();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for start in link.keys() {
        if seen.contains(start) {
            continue;
        }
        let mut path: Vec<String> = Vec::new();
        let mut cur = start.clone();
        while let Some(next) = link.get(&cur) {
            if seen.contains(&cur) {
                break;
            }
            if let Some(pos) = path.iter().position(|p| p == &cur) {
                let mut cyc = path[pos..].to_vec();
                cyc.sort();
                if !recorded.contains(&cyc) {
                    bad.push(format!("unrecorded cycle through {}", cyc[0]));
                }
                break;
            }
            path.push(cur.clone());
            cur = next.clone();
        }
        seen.extend(path);
    }
    bad
}

/// Recorded margins are genuine lower bounds (up to the search tolerance)
/// and no more than half of each was spent.
fn check_margins(s: &StageState) -> Vec<String> {
    let mut bad = Vec::new();
    let targets = s.targets(s.m);
    for mg in &s.margins {
        if mg.stage < 2 || mg.stage > s.m {
            bad.push(format!("margin with stage {}", mg.stage));
            continue;
        }
        if Rational::from(&mg.consumed * 2) > mg.margin {
            bad.push(format!("more than half of the margin on {} spent", mg.disk));
        }
        let f = s.function_at(mg.stage - 1);
        let Some(w) = targets.get(mg.target.wrapping_sub(1)) else {
            bad.push(format!("margin target {}", mg.target));
            continue;
        };
        match boundary_min_abs(&Shifted::new(&f, w.clone()), &mg.disk, &s.config.policy) {
            Ok(fresh) => {
                let slack = up(&fresh * &Float::with_val(64, 1.0 + 1.0 / 32.0));
                if slack < float_down(&mg.margin) {
                    bad.push(format!(
                        "margin {:.3e} on {} for alpha_{} exceeds the recomputed {:.3e}",
                        mg.margin.to_f64(),
                        mg.disk,
                        mg.target,
                        fresh.to_f64()
                    ));
                }
            }
            Err(e) => bad.push(format!("margin on {}: {e}", mg.disk)),
        }
    }
    bad
}

/// One link of the coefficient inequality chain.
#[derive(Clone, Debug)]
pub struct ChainLink {
    pub coefficient: usize,
    pub name: &'static str,
    pub lhs: Float,
    pub rhs: Float,
    pub holds: bool,
}

#[derive(Clone, Debug, Default)]
pub struct ThetaChain {
    pub links: Vec<ChainLink>,
}

impl ThetaChain {
    pub fn holds(&self) -> bool {
        self.links.iter().all(|l| l.holds)
    }
}

/// `sum_{k >= 1} (1 + 2/theta)^-k`, which is `theta / 2`.
pub fn geometric_sum(theta: &Rational) -> Rational {
    let r = (Rational::from(1) + Rational::from(2) / theta).recip();
    let one_minus = Rational::from(1) - &r;
    r / one_minus
}

/// For each transition `n -> n+1`, bound the drift of coefficient `n+1`
/// caused by earlier stages:
///
/// `|c(F_n)| <= sum |eps| L(P) <= sum nu L(P) <= sum_j D_j^-(n+2) < theta_{n+1} / 2`.
///
/// A term of stage `j` touches coefficient `n+1` only when
/// `e + deg P >= n+1`, and `e <= j+2`, so its `nu` carries at least
/// `D_j^-(n+2)` with `D_j = j + 2/Theta_{j+2}`.
pub fn theta_chain(s: &StageState) -> ThetaChain {
    let mut links = Vec::new();
    for n in 1..s.m {
        let k = n + 1;
        let t_end = s.terms_at_close.get(n - 1).copied().unwrap_or(0);
        let f_n = s.function_at(n);
        let drift = SymbolicValue::sub(&f_n.taylor_coefficient(k), &SymbolicValue::exact(f_n.base.taylor_coefficient(k)));
        let lhs = drift
            .enclose(&Float::with_val(64, 1e-300), &s.config.policy)
            .map(|b| b.abs_upper())
            .unwrap_or_else(|_| Float::with_val(64, f64::INFINITY));
        let mut by_eps = Float::new(64);
        let mut by_nu = Rational::new();
        let mut touched: BTreeMap<u32, u64> = BTreeMap::new();
        for t in &s.f.terms[..t_end.min(s.f.terms.len())] {
            let e = t.exponent as usize;
            if e > k || k - e > 2 * t.nail_prefix {
                continue;
            }
            let l = s.f.prefix_poly(t.nail_prefix).length_upper();
            let eu = eps_upper(t, s).map(|x| x.0).unwrap_or_else(|| Float::with_val(64, f64::INFINITY));
            by_eps = up(&by_eps + &up(&eu * &l));
            by_nu += &t.nu * l.to_rational().unwrap_or_default();
            *touched.entry(t.stage).or_insert(0) += 1;
        }
        let mut geometric = Rational::new();
        for (&j, &count) in &touched {
            let j = j as usize;
            let budget = s.budgets.iter().find(|b| b.stage == j + 1).map_or(1, |b| b.total().max(1));
            let d = Rational::from(j) + Rational::from(2) / s.config.big_theta(j + 2);
            let dk = Rational::from(Pow::pow(&d, (k + 1) as u32));
            geometric += Rational::from((count, budget)) / dk;
        }
        let half = s.config.theta(k) / Rational::from(2);
        links.push(ChainLink { coefficient: k, name: "drift<=sum|eps|L", holds: lhs <= by_eps, lhs: lhs.clone(), rhs: by_eps.clone() });
        links.push(ChainLink {
            coefficient: k,
            name: "sum|eps|L<=sum(nu)L",
            holds: by_eps <= float_down(&by_nu),
            lhs: by_eps,
            rhs: float_up(&by_nu),
        });
        links.push(ChainLink {
            coefficient: k,
            name: "sum(nu)L<=sum(D^-(k+1))",
            holds: by_nu <= geometric,
            lhs: float_up(&by_nu),
            rhs: float_down(&geometric),
        });
        links.push(ChainLink {
            coefficient: k,
            name: "sum(D^-(k+1))<theta/2",
            holds: geometric < half,
            lhs: float_up(&geometric),
            rhs: float_down(&half),
        });
    }
    ThetaChain { links }
}

#[derive(Clone, Debug, Default)]
pub struct MahlerReport {
    /// `f_{m'}(alpha_i)` exact and unchanged for every later stage `m'`.
    pub forward: Vec<String>,
    /// Registered preimages with exact values.
    pub backward: Vec<String>,
    pub tail: Option<TailCertificate>,
    /// Smallest unspent margin of the last stage.
    pub clearance: Option<Float>,
    pub failures: Vec<String>,
}

/// Persistence of every fact through the recorded stages, the preimage
/// direction, and a tail bound for all later stages against the unspent
/// margins. `sample_budget` boundary points of `B(0, r_m)` are checked
/// with tail-widened enclosures.
pub fn mahler_certificate(s: &StageState, sample_budget: usize) -> MahlerReport {
    let mut rep = MahlerReport::default();
    let targets = s.targets(s.m);
    let stages: Vec<StagedFunction> = (1..=s.m).map(|k| s.function_at(k)).collect();
    let zero = GaussianRational::zero();
    match exact_value_of(&stages[s.m - 1], &zero) {
        Some(v) => rep.forward.push(format!("f(0) = {v}")),
        None => rep.failures.push("f(0) does not reduce".into()),
    }
    for fact in &s.facts {
        for k in fact.stage..=s.m {
            match exact_value_of(&stages[k - 1], &fact.point) {
                Some(v) if v == fact.value => {}
                _ => rep.failures.push(format!("f_{k}({}) lost its value {}", fact.point, fact.value)),
            }
        }
        match fact.kind {
            FactKind::Value => rep.forward.push(format!("f({}) = {}", fact.point, fact.value)),
            FactKind::Preimage => rep.backward.push(format!("f({}) = {}", fact.point, fact.value)),
            FactKind::Orbit => {}
        }
    }
    if s.m < 2 {
        return rep;
    }
    let r = s.radius().clone();
    let tail = match tail_certificate(&s.f, &r, s.m, &|k| s.config.big_theta(k)) {
        Ok(t) => t,
        Err(e) => {
            rep.failures.push(format!("tail: {e}"));
            return rep;
        }
    };
    let last: Vec<_> = s.margins.iter().filter(|g| g.stage == s.m).collect();
    let clearance = last
        .iter()
        .map(|g| float_down(&Rational::from(&g.margin - &g.consumed)))
        .min_by(|a, b| a.total_cmp(b));
    if let Some(c) = &clearance {
        if !(tail.bound < *c) {
            rep.failures.push(format!("tail {:.3e} is not below the clearance {:.3e}", tail.bound.to_f64(), c.to_f64()));
        }
    }
    let prec = 128;
    for i in 0..sample_budget {
        let theta = ComplexBox::pi(prec).mul_rational(&Rational::from((2 * i as i64, sample_budget.max(1) as i64)));
        let e = ComplexBox::from_parts(Float::new(prec), theta.re().clone(), theta.rad().clone()).exp();
        let z = e.mul_rational(&r);
        let Ok(v) = s.f.eval_box(&z) else { continue };
        let v = crate::entire::tail::widen(&v, &tail);
        for (j, w) in targets.iter().enumerate() {
            if !v.sub(&ComplexBox::from_gaussian(w, prec)).excludes_zero() {
                rep.failures.push(format!("alpha_{} reachable near the boundary sample {i}", j + 1));
            }
        }
    }
    rep.tail = Some(tail);
    rep.clearance = clearance;
    rep
}

/// Recompute every invariant of `state`.
pub fn check_stage(state: &StageState) -> InvariantReport {
    let s = state;
    let mut b = Builder { entries: Vec::new() };
    let mut theta_rows = Vec::new();
    let mut nu_rows = Vec::new();
    let structure = check_terms(s);
    let sound = structure.is_empty();
    b.push("i", "term structure and exponents", structure);
    if !sound {
        for (key, title) in [
            ("ii", "nail set, divisibility, radii, orbit counts"),
            ("iii", "exact facts and preimages"),
            ("iv", "epsilon below nu, step budgets"),
            ("v", "coefficients in K and within theta"),
            ("vi", "zero counts match the registry"),
            ("vii", "nailed values avoid the nail polynomial"),
            ("orbits", "grafted orbits"),
            ("margins", "admissibility margins"),
            ("census", "orbit census against sigma"),
            ("theta-chain", "coefficient drift chain"),
            ("mahler", "persistence and tail"),
        ] {
            b.skip(key, title, "term structure is broken");
        }
        return InvariantReport {
            stage: s.m,
            entries: b.entries,
            theta: theta_rows,
            nu: nu_rows,
            census: Vec::new(),
            chain: ThetaChain::default(),
            mahler: MahlerReport::default(),
        };
    }
    b.push("ii", "nail set, divisibility, radii, orbit counts", check_nails(s));
    b.push("iii", "exact facts and preimages", check_facts(s));
    b.push("iv", "epsilon below nu, step budgets", check_nu(s, &mut nu_rows));
    b.push("v", "coefficients in K and within theta", check_coefficients(s, &mut theta_rows));
    if s.m >= 2 {
        b.push("vi", "zero counts match the registry", check_counts(s));
    } else {
        b.skip("vi", "zero counts match the registry", "no targets beyond alpha_1 at stage 1");
    }
    b.push("vii", "nailed values avoid the nail polynomial", check_values_free(s));
    b.push("orbits", "grafted orbits", check_orbits(s));
    if s.margins.is_empty() {
        b.skip("margins", "admissibility margins", "no perturbation yet");
    } else {
        b.push("margins", "admissibility margins", check_margins(s));
    }
    let census: Vec<CensusRow> = (1..=s.m)
        .map(|k| CensusRow { k, want: if s.m >= 2 { s.config.s(k).capped(s.m) } else { 0 }, grafted: s.orbits_of(k).count() })
        .collect();
    if s.m >= 2 {
        let bad = census
            .iter()
            .filter(|c| c.want != c.grafted)
            .map(|c| format!("#Orb({}) = {}, expected {}", c.k, c.grafted, c.want))
            .collect();
        b.push("census", "orbit census against sigma", bad);
    } else {
        b.skip("census", "orbit census against sigma", "orbits start at stage 2");
    }
    let chain = theta_chain(s);
    if chain.links.is_empty() {
        b.skip("theta-chain", "coefficient drift chain", "no transitions yet");
    } else {
        let bad = chain
            .links
            .iter()
            .filter(|l| !l.holds)
            .map(|l| format!("coefficient {}: {} fails ({:.3e} vs {:.3e})", l.coefficient, l.name, l.lhs.to_f64(), l.rhs.to_f64()))
            .collect();
        b.push("theta-chain", "coefficient drift chain", bad);
    }
    let mahler = mahler_certificate(s, 64);
    b.push("mahler", "persistence and tail", mahler.failures.clone());
    InvariantReport { stage: s.m, entries: b.entries, theta: theta_rows, nu: nu_rows, census, chain, mahler }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_series_is_half_theta() {
        for t in [Rational::from((1, 2)), Rational::from((1, 12)), Rational::from((3, 7))] {
            assert_eq!(geometric_sum(&t), t.clone() / Rational::from(2));
        }
    }
}
