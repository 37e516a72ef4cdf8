//! The stage engine. `init_stage` builds `f_1 = g + eps_0`; `run_stage`
//! performs one transition `f_n -> f_{n+1}` on a copy of the state.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::float::Round;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};

use super::config::ConstructionConfig;
use super::state::{
    Budget, CoefficientRecord, Fact, FactKind, Margin, Orbit, RegistryEntry, StageState, StepKind,
};
use crate::corekit::{down, up, ComplexBox, Disk, GaussianRational, PrecisionPolicy, SymbolicValue};
use crate::cycles::{certify_zero, locate_zeros, multiplier, newton_box, search_cycles, CycleRecord, CycleStatus, SeedGrid};
use crate::entire::{BallPoly, Holomorphic, PerturbationTerm, Shifted, StagedFunction};
use crate::error::{Error, Result};
use crate::rootcount::{boundary_clear, boundary_min_abs, count_zeros};

/// `nu = 1 / (L * budget * (n + 2/Theta_{n+2})^(n+3+deg P))`.
pub fn nu_bound(n: usize, length: &Rational, budget: u64, big_theta: &Rational, deg_p: usize) -> Rational {
    let d = Rational::from(n) + Rational::from(2) / big_theta;
    let e = (n + 3 + deg_p) as u32;
    let den = (length * Rational::from(budget)) * Rational::from(Pow::pow(&d, e));
    den.recip()
}

fn quarter() -> Rational {
    Rational::from((1, 4))
}

fn dyadic(j: u32) -> Rational {
    Rational::from((Integer::from(1), Integer::from(1) << j))
}

fn float_down(q: &Rational) -> Float {
    Float::with_val_round(64, q, Round::Down).0
}

fn float_up(q: &Rational) -> Float {
    Float::with_val_round(64, q, Round::Up).0
}

/// `2^-bits` with `2^-bits <= x / 16`.
fn bits_below(x: &Float) -> u32 {
    (5 - x.get_exp().unwrap_or(-1000)).max(8) as u32
}

/// Stage one: `f_1 = g + eps_0` with `eps_0` the first of `1/8, 1/16, ...`
/// below `theta_0` that keeps `b_0 + eps_0` off zero.
pub fn init_stage(config: &ConstructionConfig) -> Result<StageState> {
    config.validate()?;
    let g = config.base_function()?;
    let b0 = g.taylor_coefficient(0);
    let theta0 = config.theta(0);
    let mut j = 3;
    let eps0 = loop {
        let e = GaussianRational::real(dyadic(j));
        if e.re < theta0 && !(&b0 + &e).is_zero() {
            break e;
        }
        j += 1;
    };
    let f = StagedFunction::plain(g, eps0.clone(), config.policy);
    let mut r = Rational::from(2);
    loop {
        let disk = Disk::origin(r.clone())?;
        if boundary_clear(&f, &[SymbolicValue::zero()], &disk, &config.policy)?.clear {
            break;
        }
        r += quarter();
        if r > config.radius_cap {
            return Err(Error::SearchExhausted("no clear first radius".into()));
        }
    }
    Ok(StageState {
        config: config.clone(),
        m: 1,
        radii: vec![r],
        f,
        roles: Vec::new(),
        roots_at_close: vec![0],
        terms_at_close: vec![0],
        facts: Vec::new(),
        registry: Vec::new(),
        orbits: Vec::new(),
        margins: Vec::new(),
        budgets: Vec::new(),
        coefficients: vec![CoefficientRecord { k: 0, stage: 1, value: &b0 + &eps0 }],
    })
}

#[derive(Clone)]
struct PlannedZero {
    target: usize,
    approx: ComplexBox,
    disk: Disk,
    existing: Option<GaussianRational>,
}

#[derive(Clone)]
struct Pred {
    disk: Disk,
    target: usize,
    margin: Rational,
    consumed: Float,
}

/// What a new term may use: its `nu`, the admissible radius, and each
/// predicate's sup of `|z^e P|`.
struct Allowance {
    nu: Rational,
    bound: Float,
    sups: Vec<Float>,
}

struct Stage {
    s: StageState,
    n: usize,
    policy: PrecisionPolicy,
    targets: Vec<GaussianRational>,
    radius: Rational,
    zeros: Vec<PlannedZero>,
    need: Vec<(usize, usize)>,
    preds: Vec<Pred>,
    budget: Budget,
    nail_value: Option<GaussianRational>,
    rng: ChaCha8Rng,
    index: u32,
}

/// One stage transition. The input state is never modified.
pub fn run_stage(state: &StageState) -> Result<StageState> {
    let mut st = Stage::begin(state)?;
    st.select_radius()?;
    st.plan_registry()?;
    st.plan_budget()?;
    st.record_margins()?;
    st.stabilize()?;
    st.nail_and_pin()?;
    st.algebraize()?;
    st.graft()?;
    st.close()
}

fn free_repelling(f: &StagedFunction, k: usize, disk: &Disk, policy: &PrecisionPolicy) -> Result<Option<Vec<CycleRecord>>> {
    let found = match search_cycles(f, k, disk, SeedGrid::default(), policy) {
        Ok(c) => c,
        Err(Error::Precondition(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    Ok(Some(
        found
            .into_iter()
            .map(|mut c| {
                c.classify(&f.nail_roots);
                c
            })
            .filter(|c| c.status == CycleStatus::Free && c.repelling)
            .collect(),
    ))
}

impl Stage {
    fn begin(state: &StageState) -> Result<Self> {
        let n = state.m;
        if n >= state.config.max_stage {
            return Err(Error::Precondition(format!("stage {n} is already max_stage")));
        }
        let targets = state.targets(n + 1);
        let need = (1..=n + 1)
            .map(|k| (k, state.config.s(k).capped(n + 1).saturating_sub(state.orbits_of(k).count())))
            .collect();
        Ok(Stage {
            s: state.clone(),
            n,
            policy: state.config.policy,
            targets,
            radius: Rational::new(),
            zeros: Vec::new(),
            need,
            preds: Vec::new(),
            budget: Budget { stage: n + 1, s_formula: 0, s_hat: 0, l_formula: 0, l_hat: 0, s_used: 0, l_used: 0 },
            nail_value: None,
            rng: ChaCha8Rng::seed_from_u64(state.config.seed ^ ((n as u64) << 32)),
            index: 0,
        })
    }

    fn f(&self) -> &StagedFunction {
        &self.s.f
    }

    fn target_values(&self, count: usize) -> Vec<SymbolicValue> {
        self.targets[..count].iter().cloned().map(SymbolicValue::exact).collect()
    }

    /// Smallest quarter step past `max(n+1, r_n)` whose circle misses all
    /// targets, whose disk holds a preimage of each target after `alpha_1`
    /// and the free cycles still needed.
    fn select_radius(&mut self) -> Result<()> {
        let n = self.n;
        let floor = Rational::from(n + 1).max(self.s.radius().clone());
        let mut r = floor + quarter();
        let targets = self.target_values(n + 1);
        'radius: while r <= self.s.config.radius_cap {
            let disk = Disk::origin(r.clone())?;
            if boundary_clear(self.f(), &targets, &disk, &self.policy)?.clear {
                // every target past alpha_1 needs a preimage to register
                for w in &self.targets[1..] {
                    if count_zeros(&Shifted::new(self.f(), w.clone()), &disk, &self.policy)?.count == 0 {
                        r += quarter();
                        continue 'radius;
                    }
                }
                for &(k, want) in &self.need {
                    if want == 0 {
                        continue;
                    }
                    match free_repelling(self.f(), k, &disk, &self.policy)? {
                        Some(c) if c.len() >= want => {}
                        _ => {
                            r += quarter();
                            continue 'radius;
                        }
                    }
                }
                self.radius = r;
                return Ok(());
            }
            r += quarter();
        }
        Err(Error::SearchExhausted(format!(
            "no radius up to {} clears the targets and holds the cycles for stage {}",
            self.s.config.radius_cap,
            n + 1
        )))
    }

    /// Zeros of `f_n - alpha_i` in the new disk for `i = 2..=n+1`, with
    /// isolating disks.
    fn plan_registry(&mut self) -> Result<()> {
        let disk = Disk::origin(self.radius.clone())?;
        let mut zeros = Vec::new();
        for i in 2..=self.n + 1 {
            let w = &self.targets[i - 1];
            let g = Shifted::new(self.f(), w.clone());
            let count = count_zeros(&g, &disk, &self.policy)?.count as usize;
            for b in locate_zeros(&g, &disk, count, &self.policy)? {
                if b.contains_gaussian(&GaussianRational::zero()) {
                    continue;
                }
                let existing = self
                    .s
                    .registry
                    .iter()
                    .find(|e| e.target == i && b.contains_gaussian(&e.tau))
                    .map(|e| e.tau.clone());
                zeros.push(PlannedZero { target: i, approx: b, disk: disk.clone(), existing });
            }
        }
        // isolating disks: half the distance to the other zeros and the circle
        let centers: Vec<GaussianRational> = zeros
            .iter()
            .map(|z| z.existing.clone().unwrap_or_else(|| GaussianRational::round_dyadic(z.approx.re(), z.approx.im(), 48)))
            .collect();
        let c64: Vec<(f64, f64)> = centers.iter().map(|c| c.to_f64()).collect();
        let r = self.radius.to_f64();
        for j in 0..zeros.len() {
            let (x, y) = c64[j];
            let mut gap = r - x.hypot(y);
            for (k, &(u, v)) in c64.iter().enumerate() {
                if k != j {
                    gap = gap.min((x - u).hypot(y - v) / 2.0);
                }
            }
            let mut e = 1u32;
            while 2f64.powi(-(e as i32)) > gap / 2.0 {
                e += 1;
            }
            zeros[j].disk = Disk::new(centers[j].clone(), dyadic(e))?;
        }
        for j in 0..zeros.len() {
            let d = &zeros[j].disk;
            let inside = {
                let room = Rational::from(&self.radius - &d.radius);
                room > 0 && d.center.norm_sqr() < Rational::from(room.square_ref())
            };
            let apart = zeros.iter().enumerate().all(|(k, o)| {
                k == j || {
                    let s = Rational::from(&d.radius + &o.disk.radius);
                    (&d.center - &o.disk.center).norm_sqr() > Rational::from(s.square_ref())
                }
            });
            if !inside || !apart || !d.contains_box(&zeros[j].approx) {
                return Err(Error::SearchExhausted(format!("could not isolate the zero near {}", d.center)));
            }
        }
        self.zeros = zeros;
        Ok(())
    }

    fn plan_budget(&mut self) -> Result<()> {
        let n = self.n;
        let alpha = &self.targets[n];
        let nails = if self.f().is_nail_root(alpha) { 0 } else { 2 };
        let fresh = self.zeros.iter().filter(|z| z.existing.is_none()).count() as u64;
        let s_plan = 1 + nails + fresh;
        let l_plan: u64 = self.need.iter().map(|&(k, c)| (k * c) as u64).sum();
        let deg_p = 2 * self.f().nail_roots.len();
        let s_formula = 1 + (n * self.f().perturbation_degree().max(n + 1 + deg_p)) as u64;
        // periodic points of period <= n already in B(0, r_n)
        let old = self.s.disk();
        let mut l_formula = 0u64;
        for k in 1..=n {
            if let Ok(found) = search_cycles(self.f(), k, &old, SeedGrid::default(), &self.policy) {
                l_formula += (k * found.len()) as u64;
            }
        }
        self.budget.s_formula = s_formula;
        self.budget.s_hat = s_formula.max(s_plan);
        self.budget.l_formula = l_formula;
        self.budget.l_hat = l_formula.max(l_plan);
        Ok(())
    }

    /// Admissibility predicates on `B(0, r_n)`, `B(0, r_{n+1})` and every
    /// isolating disk.
    fn record_margins(&mut self) -> Result<()> {
        let n = self.n;
        let mut spots: Vec<(Disk, usize)> = Vec::new();
        let old = self.s.disk();
        for i in 1..=n {
            spots.push((old.clone(), i));
        }
        let new = Disk::origin(self.radius.clone())?;
        for i in 1..=n + 1 {
            spots.push((new.clone(), i));
        }
        for z in &self.zeros {
            spots.push((z.disk.clone(), z.target));
        }
        for (disk, i) in spots {
            let g = Shifted::new(self.f(), self.targets[i - 1].clone());
            let m = boundary_min_abs(&g, &disk, &self.policy)?;
            let m = Float::with_val_round(32, &m, Round::Down).0;
            let margin = m.to_rational().unwrap_or_default();
            if margin <= 0 {
                return Err(Error::BoundaryContact(format!("no margin for target {i} on {disk}")));
            }
            self.preds.push(Pred { disk, target: i, margin, consumed: Float::new(64) });
        }
        Ok(())
    }

    fn allowance(&self, exponent: u32) -> Result<Allowance> {
        let f = self.f();
        let prefix = f.nail_roots.len();
        let p = f.prefix_poly(prefix);
        let length = p.length_upper().to_rational().unwrap_or_default();
        let nu = nu_bound(self.n, &length, self.budget.total(), &self.s.config.big_theta(self.n + 2), p.degree());
        let mut bound = float_down(&nu);
        let ball: BallPoly = p.to_ball(128);
        let mut sups = Vec::with_capacity(self.preds.len());
        for pr in &self.preds {
            let big_r = up(&float_up(&pr.disk.center.abs_upper()) + &float_up(&pr.disk.radius));
            let sup = up(&ball.sup_on_disk(&big_r) * &up(Pow::pow(&big_r, exponent)));
            let half = Float::with_val_round(64, &pr.margin / Rational::from(2), Round::Down).0;
            let room = down(&half - &pr.consumed);
            if room <= 0 {
                return Err(Error::InvalidSchedule(format!("margin for target {} on {} is spent", pr.target, pr.disk)));
            }
            bound = bound.min(&down(&room / &sup));
            sups.push(sup);
        }
        Ok(Allowance { nu, bound, sups })
    }

    /// Upper bound on `|eps|` if `0 < |eps| < bound` is certified.
    fn certify_eps(&self, eps: &SymbolicValue, bound: &Float) -> Result<Option<Float>> {
        let mut target = Float::with_val(64, bound >> 24);
        for _ in 0..4 {
            let b = match eps.enclose(&target, &self.policy) {
                Ok(b) => b,
                Err(Error::PrecisionExhausted { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            let hi = b.abs_upper();
            if hi >= *bound {
                return Ok(None);
            }
            if b.abs_lower() > 0 {
                return Ok(Some(hi));
            }
            target >>= 64;
        }
        Ok(None)
    }

    fn commit(&mut self, kind: StepKind, epsilon: SymbolicValue, exponent: u32, a: &Allowance, eps_up: &Float) {
        for (pr, sup) in self.preds.iter_mut().zip(&a.sups) {
            pr.consumed = up(&pr.consumed + &up(eps_up * sup));
        }
        let t = PerturbationTerm {
            stage: self.n as u32,
            index: self.index,
            epsilon,
            exponent,
            nail_prefix: self.s.f.nail_roots.len(),
            nu: a.nu.clone(),
        };
        self.index += 1;
        self.s.f = self.s.f.with_term(t);
        self.s.roles.push(kind);
        if kind.is_graft() {
            self.budget.l_used += 1;
        } else {
            self.budget.s_used += 1;
        }
    }

    fn nail(&mut self, z: &GaussianRational) {
        self.s.f = self.s.f.with_roots(std::slice::from_ref(z));
    }

    /// A point of `K` within `radius` of `v`, accepted by `accept`: the
    /// rounded center plus a seeded offset.
    fn steer(&mut self, v: &SymbolicValue, radius: &Float, accept: &dyn Fn(&GaussianRational) -> bool) -> Result<GaussianRational> {
        let bits = bits_below(radius);
        let grain = dyadic(bits);
        let c = v.enclose(&Float::with_val(64, &grain / Rational::from(16)), &self.policy)?;
        let base = GaussianRational::round_dyadic(c.re(), c.im(), bits);
        for _ in 0..self.s.config.retries.max(1) {
            let a: i64 = self.rng.gen_range(1..=3) * if self.rng.gen_bool(0.5) { 1 } else { -1 };
            let b: i64 = self.rng.gen_range(1..=3) * if self.rng.gen_bool(0.5) { 1 } else { -1 };
            let off = GaussianRational::new(Rational::from(a) * &grain, Rational::from(b) * &grain);
            let q = &base + &off;
            if accept(&q) {
                return Ok(q);
            }
        }
        Err(Error::retry("steer", format!("no acceptable point near {c}")))
    }

    /// Steer `a_{n+1}` into `K \ {0}` within `theta_{n+1}` of `b_{n+1}`.
    fn stabilize(&mut self) -> Result<()> {
        let n = self.n;
        let k = n + 1;
        let exponent = k as u32;
        let f = self.f();
        let c = f.taylor_coefficient(k);
        let p0 = f.prefix_poly(f.nail_roots.len()).coeff(0);
        if p0.is_zero() {
            return Err(Error::DegenerateArgument("P_n(0) = 0".into()));
        }
        let p0_abs = ComplexBox::from_gaussian(&p0, 128).abs_lower();
        let b = f.base.taylor_coefficient(k);
        let theta = self.s.config.theta(k);
        let a = self.allowance(exponent)?;
        let mut radius = down(&a.bound * &p0_abs);
        for _ in 0..self.s.config.retries.max(1) {
            let accept = |q: &GaussianRational| {
                !q.is_zero() && (q - &b).norm_sqr() < Rational::from(theta.square_ref())
            };
            let q = self.steer(&c, &radius, &accept)?;
            let eps = SymbolicValue::div(
                &SymbolicValue::sub(&SymbolicValue::exact(q.clone()), &c),
                &SymbolicValue::exact(p0.clone()),
                &self.policy,
            )?;
            if let Some(e) = self.certify_eps(&eps, &a.bound)? {
                self.commit(StepKind::Stabilize, eps, exponent, &a, &e);
                self.s.coefficients.push(CoefficientRecord { k, stage: n + 1, value: q });
                return Ok(());
            }
            radius >>= 1;
        }
        Err(Error::retry("stabilize", format!("coefficient {k}")))
    }

    /// Nail `f(alpha_{n+1})` to a point of `K`, then pin it with a second
    /// term carrying `(z - alpha)^2`.
    fn nail_and_pin(&mut self) -> Result<()> {
        let n = self.n;
        let alpha = self.targets[n].clone();
        if self.f().is_nail_root(&alpha) {
            return Ok(());
        }
        if alpha.is_zero() {
            return Err(Error::DegenerateArgument("nail target 0".into()));
        }
        let exponent = (n + 2) as u32;
        let za = SymbolicValue::exact(alpha.clone());
        let mut done = false;
        for _ in 0..self.s.config.retries.max(1) {
            let f = self.f();
            let v = f.eval_symbolic(&za);
            let c = f.term_factor_symbolic(&za, exponent, f.nail_roots.len());
            let c_abs = c.eval_at(256)?.abs_lower();
            let a = self.allowance(exponent)?;
            let radius = down(&a.bound * &c_abs);
            let roots = f.nail_roots.clone();
            let accept = |t: &GaussianRational| !roots.contains(t) && t != &alpha;
            let t = self.steer(&v, &radius, &accept)?;
            let eps = SymbolicValue::div(&SymbolicValue::sub(&SymbolicValue::exact(t.clone()), &v), &c, &self.policy)?;
            let Some(e) = self.certify_eps(&eps, &a.bound)? else {
                continue;
            };
            let saved = (self.s.clone(), self.preds.clone(), self.index, self.budget.clone());
            self.commit(StepKind::NailValue, eps, exponent, &a, &e);
            let d = self.f().deriv_box(&ComplexBox::from_gaussian(&alpha, 256))?;
            if !d.excludes_zero() {
                (self.s, self.preds, self.index, self.budget) = saved;
                continue;
            }
            self.s.facts.push(Fact { stage: n + 1, kind: FactKind::Value, point: alpha.clone(), value: t.clone() });
            self.nail(&alpha);
            self.nail_value = Some(t);
            done = true;
            break;
        }
        if !done {
            return Err(Error::retry("nail", format!("alpha_{} = {alpha}", n + 1)));
        }
        let a = self.allowance(exponent)?;
        let mut j = bits_below(&a.bound);
        loop {
            let eps = SymbolicValue::exact(GaussianRational::real(dyadic(j)));
            if let Some(e) = self.certify_eps(&eps, &a.bound)? {
                self.commit(StepKind::PinDerivative, eps, exponent, &a, &e);
                break;
            }
            j += 1;
        }
        let d = self.f().deriv_box(&ComplexBox::from_gaussian(&alpha, 256))?;
        if !d.excludes_zero() {
            return Err(Error::retry("pin", format!("f'({alpha}) not separated from 0")));
        }
        Ok(())
    }

    /// Replace each new zero by a nearby exact point and force the value.
    fn algebraize(&mut self) -> Result<()> {
        let n = self.n;
        let exponent = (n + 2) as u32;
        let fresh: Vec<PlannedZero> = self.zeros.iter().filter(|z| z.existing.is_none()).cloned().collect();
        for z in fresh {
            let w = self.targets[z.target - 1].clone();
            let zero = {
                let g = Shifted::new(self.f(), w.clone());
                certify_zero(&g, z.approx.center_c64(), &self.policy)?
                    .filter(|b| z.disk.contains_box(b))
                    .ok_or_else(|| Error::PersistenceLost(format!("zero near {} moved", z.disk.center)))?
            };
            let a = self.allowance(exponent)?;
            let f = self.f();
            let c_abs = f.term_factor_symbolic(&SymbolicValue::exact(z.disk.center.clone()), exponent, f.nail_roots.len()).eval_at(256)?.abs_lower();
            let d_abs = f.deriv_box(&zero)?.abs_upper();
            let mut bits = bits_below(&down(&down(&a.bound * &c_abs) / &d_abs));
            let mut placed = false;
            for _ in 0..self.s.config.retries.max(1) {
                let prec = (bits + 128).max(self.policy.start);
                let f = self.f();
                let g = Shifted::new(f, w.clone());
                let hi = newton_box(&g, zero.round_to(prec), 16)?;
                let tau = GaussianRational::round_dyadic(hi.re(), hi.im(), bits);
                let in_disk = (&tau - &z.disk.center).norm_sqr() < Rational::from(z.disk.radius.square_ref());
                let clash = tau.is_zero()
                    || f.is_nail_root(&tau)
                    || self.s.facts.iter().any(|x| x.value == tau)
                    || !in_disk;
                if clash {
                    bits += 8;
                    continue;
                }
                let zt = SymbolicValue::exact(tau.clone());
                let v = f.eval_symbolic(&zt);
                let c = f.term_factor_symbolic(&zt, exponent, f.nail_roots.len());
                let eps = SymbolicValue::div(&SymbolicValue::sub(&SymbolicValue::exact(w.clone()), &v), &c, &self.policy)?;
                let a = self.allowance(exponent)?;
                let Some(e) = self.certify_eps(&eps, &a.bound)? else {
                    bits += 8;
                    continue;
                };
                let saved = (self.s.clone(), self.preds.clone(), self.index, self.budget.clone());
                self.commit(StepKind::Algebraize, eps, exponent, &a, &e);
                let d = self.f().deriv_box(&ComplexBox::from_gaussian(&tau, 256))?;
                let count = count_zeros(&Shifted::new(self.f(), w.clone()), &z.disk, &self.policy)?.count;
                if !d.excludes_zero() {
                    (self.s, self.preds, self.index, self.budget) = saved;
                    bits += 8;
                    continue;
                }
                if count != 1 {
                    return Err(Error::NonSimpleZero(count));
                }
                self.s.facts.push(Fact { stage: n + 1, kind: FactKind::Preimage, point: tau.clone(), value: w.clone() });
                self.s.registry.push(RegistryEntry { stage: n + 1, target: z.target, tau: tau.clone(), disk: z.disk.clone() });
                self.nail(&tau);
                placed = true;
                break;
            }
            if !placed {
                return Err(Error::retry("algebraize", format!("zero of f - {w} near {}", z.disk.center)));
            }
        }
        Ok(())
    }

    fn graft(&mut self) -> Result<()> {
        let disk = Disk::origin(self.radius.clone())?;
        for (k, want) in self.need.clone() {
            for _ in 0..want {
                let cycle = free_repelling(self.f(), k, &disk, &self.policy)?
                    .and_then(|c| c.into_iter().find(|c| c.inside(&disk)))
                    .ok_or_else(|| Error::SearchExhausted(format!("no free repelling {k}-cycle left in {disk}")))?;
                self.graft_one(&cycle)?;
            }
        }
        Ok(())
    }

    /// Chain `gamma_0 -> ... -> gamma_{k-1} -> gamma_0` of exact points near
    /// a free repelling cycle, nailing each point after its link.
    fn graft_one(&mut self, cycle: &CycleRecord) -> Result<()> {
        let n = self.n;
        let k = cycle.period;
        let exponent = (n + 2) as u32;
        let a = self.allowance(exponent)?;
        let f = self.f();
        let mut c_min: Option<Float> = None;
        for p in &cycle.points {
            let z = SymbolicValue::exact(p.enclosure.to_gaussian_center());
            let c = f.term_factor_symbolic(&z, exponent, f.nail_roots.len()).eval_at(256)?.abs_lower();
            c_min = Some(match c_min {
                Some(m) => m.min(&c),
                None => c,
            });
        }
        let lam = up(&cycle.multiplier.abs_upper() + &Float::with_val(64, 1));
        let scale = down(&down(&a.bound * &c_min.unwrap_or_else(|| Float::new(64))) / &lam);
        let mut bits = bits_below(&scale) + 4 * k as u32;
        let saved = (self.s.clone(), self.preds.clone(), self.index, self.budget.clone());
        for _ in 0..self.s.config.retries.max(1) {
            match self.try_chain(cycle, bits)? {
                Some(points) => {
                    let boxes: Vec<ComplexBox> = points.iter().map(|g| ComplexBox::from_gaussian(g, 256)).collect();
                    let m = multiplier(self.f(), &boxes)?;
                    if m.abs_lower() > 1 {
                        self.s.orbits.push(Orbit { stage: n + 1, points });
                        return Ok(());
                    }
                    (self.s, self.preds, self.index, self.budget) = saved.clone();
                    return Err(Error::PersistenceLost(format!("grafted {k}-cycle is not repelling")));
                }
                None => {
                    (self.s, self.preds, self.index, self.budget) = saved.clone();
                    bits += 32;
                }
            }
        }
        Err(Error::retry("graft", format!("{k}-cycle near {}", cycle.points[0].enclosure)))
    }

    fn try_chain(&mut self, cycle: &CycleRecord, bits: u32) -> Result<Option<Vec<GaussianRational>>> {
        let n = self.n;
        let k = cycle.period;
        let exponent = (n + 2) as u32;
        let prec = (bits + 128).max(self.policy.start);
        let g0 = {
            let g = crate::entire::IterateMinusId { f: self.f(), k };
            let b = newton_box(&g, cycle.points[0].enclosure.round_to(prec), 16)?;
            GaussianRational::round_dyadic(b.re(), b.im(), bits)
        };
        let grain = Float::with_val(64, &dyadic(bits + 8));
        let mut points = vec![g0.clone()];
        let mut cur = g0.clone();
        for i in 0..k {
            if cur.is_zero() || self.f().is_nail_root(&cur) {
                return Ok(None);
            }
            let z = SymbolicValue::exact(cur.clone());
            let f = self.f();
            let v = f.eval_symbolic(&z);
            let next = if i + 1 < k {
                let e = v.enclose(&grain, &self.policy)?;
                GaussianRational::round_dyadic(e.re(), e.im(), bits)
            } else {
                g0.clone()
            };
            if i + 1 < k && points.contains(&next) {
                return Ok(None);
            }
            let c = f.term_factor_symbolic(&z, exponent, f.nail_roots.len());
            let eps = SymbolicValue::div(&SymbolicValue::sub(&SymbolicValue::exact(next.clone()), &v), &c, &self.policy)?;
            let a = self.allowance(exponent)?;
            let Some(e) = self.certify_eps(&eps, &a.bound)? else {
                return Ok(None);
            };
            self.commit(StepKind::Graft, eps, exponent, &a, &e);
            self.s.facts.push(Fact { stage: n + 1, kind: FactKind::Orbit, point: cur.clone(), value: next.clone() });
            self.nail(&cur);
            if i + 1 < k {
                points.push(next.clone());
                cur = next;
            }
        }
        Ok(Some(points))
    }

    fn close(mut self) -> Result<StageState> {
        let n = self.n;
        if self.budget.s_used > self.budget.s_hat || self.budget.l_used > self.budget.l_hat {
            return Err(Error::BudgetOverflow(format!(
                "stage {}: used {}+{} steps, budget {}+{}",
                n + 1,
                self.budget.s_used,
                self.budget.l_used,
                self.budget.s_hat,
                self.budget.l_hat
            )));
        }
        for pr in &self.preds {
            let half = Float::with_val_round(64, &pr.margin / Rational::from(2), Round::Down).0;
            if pr.consumed > half {
                return Err(Error::InvalidSchedule(format!("margin on {} overspent", pr.disk)));
            }
        }
        if let Some(t) = &self.nail_value {
            if self.s.f.is_nail_root(t) {
                return Err(Error::InvalidSchedule(format!("nailed value {t} became a nail root")));
            }
        }
        let s = &mut self.s;
        s.m = n + 1;
        s.radii.push(self.radius.clone());
        s.roots_at_close.push(s.f.nail_roots.len());
        s.terms_at_close.push(s.f.terms.len());
        for pr in &self.preds {
            s.margins.push(Margin {
                stage: n + 1,
                disk: pr.disk.clone(),
                target: pr.target,
                margin: pr.margin.clone(),
                consumed: pr.consumed.to_rational().unwrap_or_default(),
            });
        }
        s.budgets.push(self.budget.clone());
        Ok(self.s)
    }
}
