//! Certified zero counts on disks by the argument principle, and the
//! boundary estimates used to keep counts stable under perturbation.
//!
//! The boundary circle is cut into dyadic arcs. Each arc is covered by a
//! ball, `f` is enclosed over that ball, and arcs are split until every
//! enclosure passes the caller's test.

use std::f64::consts::PI;

use rug::{Float, Rational};

use crate::corekit::{down, up, ComplexBox, Disk, PrecisionPolicy, SymbolicValue};
use crate::entire::{Holomorphic, Polynomial, Shifted};
use crate::error::{Error, Result};

const START_DEPTH: u32 = 4;
const MAX_EXTRA_DEPTH: u32 = 24;
/// Arc images must satisfy `rad < SECTOR * |center|` for winding; keeps
/// each image inside a sector narrower than a right angle.
const SECTOR: f64 = 0.7;
/// Relative accuracy of boundary extrema.
const EXTREMUM_TOL: f64 = 1.0 / 64.0;

/// Enclosure of `f` over one dyadic arc `[k, k+1] / 2^depth` of the circle.
#[derive(Clone, Debug)]
pub struct ArcImage {
    pub k: u64,
    pub depth: u32,
    pub image: ComplexBox,
}

/// Arc images covering a disk boundary, in order around the circle.
#[derive(Clone, Debug)]
pub struct BoundaryEnclosure {
    pub disk: Disk,
    pub arcs: Vec<ArcImage>,
    pub prec: u32,
}

#[derive(Clone, Debug)]
pub struct ZeroCount {
    pub count: u64,
    pub disk: Disk,
    pub certified: bool,
    /// Lower bound on `|f|` over the boundary.
    pub margin: Float,
    pub arcs: usize,
}

/// Clearance of a boundary from a list of target values.
#[derive(Clone, Debug)]
pub struct BoundaryClearance {
    pub clear: bool,
    /// Lower bound on `min |f - t|` over the boundary, per target.
    pub margins: Vec<Float>,
}

enum Verdict {
    Accept,
    Refine,
}

enum WalkEnd {
    /// An arc stayed unacceptable at full depth and precision was not the
    /// limiting factor.
    Contact(ComplexBox),
    Precision,
}

fn circle_point(disk: &Disk, s: &Rational, prec: u32) -> ComplexBox {
    let theta = ComplexBox::pi(prec).mul_rational(&(Rational::from(2) * s));
    let i_theta = ComplexBox::from_parts(
        Float::new(prec),
        theta.re().clone(),
        theta.rad().clone(),
    );
    let e = i_theta.exp();
    ComplexBox::from_gaussian(&disk.center, prec).add(&e.mul_rational(&disk.radius))
}

/// Cover of the arc and an enclosure of `f` over it; the smaller of the
/// direct and mean-value enclosures.
fn arc_image(f: &dyn Holomorphic, disk: &Disk, k: u64, depth: u32, prec: u32) -> Result<ComplexBox> {
    let den = Rational::from(1u64 << (depth + 1));
    let mid = Rational::from(2 * k + 1) / den;
    let p = circle_point(disk, &mid, prec);
    // half arc length R * pi / 2^depth, with 355/113 > pi
    let half = Rational::from((355, 113 * (1u64 << depth))) * &disk.radius;
    let h = up(&half);
    let cover = p.inflate(&h);
    let direct = f.eval_box(&cover)?;
    let d = f.deriv_box(&cover)?;
    let mv = f.eval_box(&p)?.inflate(&up(&d.abs_upper() * &h));
    Ok(if mv.rad() < direct.rad() { mv } else { direct })
}

fn precision_limited(b: &ComplexBox, prec: u32) -> bool {
    if !b.is_finite() {
        return true;
    }
    let scale = b.center_abs_upper().max(&Float::with_val(64, 1));
    let floor = Float::with_val(64, &scale) >> (prec as i32 - 20);
    b.rad() < &floor
}

fn walk(
    f: &dyn Holomorphic,
    disk: &Disk,
    policy: &PrecisionPolicy,
    judge: &dyn Fn(&ComplexBox) -> Verdict,
) -> Result<std::result::Result<BoundaryEnclosure, WalkEnd>> {
    let max_depth = START_DEPTH + MAX_EXTRA_DEPTH;
    'ladder: for prec in policy.ladder() {
        let mut arcs = Vec::new();
        let mut stack: Vec<(u64, u32)> = (0..1u64 << START_DEPTH).rev().map(|k| (k, START_DEPTH)).collect();
        while let Some((k, d)) = stack.pop() {
            let image = arc_image(f, disk, k, d, prec)?;
            match judge(&image) {
                Verdict::Accept => arcs.push(ArcImage { k, depth: d, image }),
                Verdict::Refine if d < max_depth => {
                    stack.push((2 * k + 1, d + 1));
                    stack.push((2 * k, d + 1));
                }
                Verdict::Refine => {
                    if precision_limited(&image, prec) {
                        continue 'ladder;
                    }
                    return Ok(Err(WalkEnd::Contact(image)));
                }
            }
        }
        return Ok(Ok(BoundaryEnclosure { disk: disk.clone(), arcs, prec }));
    }
    Ok(Err(WalkEnd::Precision))
}

fn sector_ok(b: &ComplexBox) -> bool {
    b.excludes_zero() && *b.rad() < Float::with_val(64, SECTOR) * b.center_abs_lower()
}

/// Number of zeros of `f` in the open disk, with multiplicity.
pub fn count_zeros(f: &dyn Holomorphic, disk: &Disk, policy: &PrecisionPolicy) -> Result<ZeroCount> {
    let cover = match walk(f, disk, policy, &|b| if sector_ok(b) { Verdict::Accept } else { Verdict::Refine })? {
        Ok(c) => c,
        Err(WalkEnd::Contact(b)) => {
            return Err(Error::BoundaryZero(format!("f meets 0 near {b} on the boundary of {disk}")))
        }
        Err(WalkEnd::Precision) => return Err(Error::precision(policy.ceiling, "boundary winding")),
    };
    let args: Vec<f64> = cover.arcs.iter().map(|a| a.image.center_c64().arg()).collect();
    let mut total = 0.0;
    for i in 0..args.len() {
        let mut d = args[(i + 1) % args.len()] - args[i];
        while d > PI {
            d -= 2.0 * PI;
        }
        while d <= -PI {
            d += 2.0 * PI;
        }
        total += d;
    }
    let n = (total / (2.0 * PI)).round();
    if (total - 2.0 * PI * n).abs() > 1e-6 || n < 0.0 {
        return Err(Error::precision(cover.prec, "winding sum"));
    }
    let margin = cover.arcs.iter().map(|a| a.image.abs_lower()).min_by(|a, b| a.total_cmp(b)).unwrap();
    Ok(ZeroCount { count: n as u64, disk: disk.clone(), certified: true, margin, arcs: cover.arcs.len() })
}

/// Certified lower bound on `min |f|` over the boundary, within a few
/// percent of the true minimum.
pub fn boundary_min_abs(f: &dyn Holomorphic, disk: &Disk, policy: &PrecisionPolicy) -> Result<Float> {
    let tol = Float::with_val(64, EXTREMUM_TOL);
    let judge = |b: &ComplexBox| {
        if b.excludes_zero() && *b.rad() <= Float::with_val(64, &tol * &b.center_abs_lower()) {
            Verdict::Accept
        } else {
            Verdict::Refine
        }
    };
    match walk(f, disk, policy, &judge)? {
        Ok(c) => Ok(c.arcs.iter().map(|a| a.image.abs_lower()).min_by(|a, b| a.total_cmp(b)).unwrap()),
        Err(WalkEnd::Contact(b)) => Err(Error::BoundaryContact(format!("value {b} on the boundary of {disk}"))),
        Err(WalkEnd::Precision) => Err(Error::precision(policy.ceiling, "boundary minimum")),
    }
}

/// Certified upper bound on `max |f|` over the boundary.
pub fn boundary_max_abs(f: &dyn Holomorphic, disk: &Disk, policy: &PrecisionPolicy) -> Result<Float> {
    let mut scale: f64 = 0.0;
    for k in 0..64u64 {
        let p = circle_point(disk, &Rational::from((k, 64u64)), 64);
        scale = scale.max(f.eval_c64(p.center_c64()).norm());
    }
    if !scale.is_finite() || scale == 0.0 {
        scale = 1.0;
    }
    let cap = Float::with_val(64, scale * EXTREMUM_TOL);
    let judge = |b: &ComplexBox| if b.is_finite() && *b.rad() <= cap { Verdict::Accept } else { Verdict::Refine };
    match walk(f, disk, policy, &judge)? {
        Ok(c) => Ok(c.arcs.iter().map(|a| a.image.abs_upper()).max_by(|a, b| a.total_cmp(b)).unwrap()),
        Err(_) => Err(Error::precision(policy.ceiling, "boundary maximum")),
    }
}

/// Arc ordered by its key, largest first.
struct Keyed {
    key: f64,
    k: u64,
    depth: u32,
    bound: Float,
}

impl PartialEq for Keyed {
    fn eq(&self, o: &Self) -> bool {
        self.key.total_cmp(&o.key).is_eq()
    }
}
impl Eq for Keyed {}
impl PartialOrd for Keyed {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Keyed {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.key.total_cmp(&o.key)
    }
}

/// Branch and bound on the boundary for `min |f|` (or `max |f|` when
/// `maximize`): only arcs that could still hold the extremum are split.
/// Returns a certified bound on the extremum from the right side.
fn sharpen(f: &dyn Holomorphic, disk: &Disk, maximize: bool, policy: &PrecisionPolicy) -> Result<Float> {
    // balls around a flat stretch of |f| lose O(arc length), so the
    // tolerance is relative and modest
    const DEPTH: u32 = 40;
    const STEPS: usize = 1 << 17;
    let prec = policy.start.max(128);
    let tol = 2e-5;
    let bound_of = |b: &ComplexBox| if maximize { b.abs_upper() } else { b.abs_lower() };
    let key_of = |x: &Float| if maximize { x.to_f64() } else { -x.to_f64() };
    let point = |k: u64, d: u32| -> Result<f64> {
        let mid = Rational::from(2 * k + 1) / Rational::from(1u64 << (d + 1));
        Ok(f.eval_box(&circle_point(disk, &mid, prec))?.center_c64().norm())
    };
    let mut heap = std::collections::BinaryHeap::new();
    // best value actually attained at a sample point
    let mut attained: f64 = if maximize { 0.0 } else { f64::INFINITY };
    for k in 0..1u64 << START_DEPTH {
        let b = bound_of(&arc_image(f, disk, k, START_DEPTH, prec)?);
        let v = point(k, START_DEPTH)?;
        attained = if maximize { attained.max(v) } else { attained.min(v) };
        heap.push(Keyed { key: key_of(&b), k, depth: START_DEPTH, bound: b });
    }
    for _ in 0..STEPS {
        let top = heap.peek().expect("arcs cover the circle");
        let gap = (top.bound.to_f64() - attained).abs();
        if gap <= tol * attained.abs() || top.depth >= DEPTH {
            break;
        }
        let top = heap.pop().expect("peeked");
        for k in [2 * top.k, 2 * top.k + 1] {
            let d = top.depth + 1;
            let b = bound_of(&arc_image(f, disk, k, d, prec)?);
            let v = point(k, d)?;
            attained = if maximize { attained.max(v) } else { attained.min(v) };
            heap.push(Keyed { key: key_of(&b), k, depth: d, bound: b });
        }
    }
    let top = heap.pop().expect("arcs cover the circle");
    if !top.bound.is_finite() || (!maximize && top.bound <= 0) {
        return Err(Error::BoundaryContact(format!("no bound for |f| on the boundary of {disk}")));
    }
    Ok(top.bound)
}

/// Lower bound on `min_{|z|=R} |g - alpha| / max_{|z|=R} |P|`: any
/// `0 < |eps| < delta` leaves the number of solutions of `g + eps P = alpha`
/// in `B(0, R)` unchanged.
pub fn rouche_delta(
    g: &dyn Holomorphic,
    p: &Polynomial,
    alpha: &SymbolicValue,
    r: &Rational,
    policy: &PrecisionPolicy,
) -> Result<Float> {
    if p.is_zero() {
        return Err(Error::Precondition("rouche_delta needs a nonzero polynomial".into()));
    }
    let disk = Disk::origin(r.clone())?;
    let shifted = Shifted { f: g, alpha: alpha.clone() };
    // the coarse walk certifies the boundary is clear first
    boundary_min_abs(&shifted, &disk, policy)?;
    let lo = sharpen(&shifted, &disk, false, policy)?;
    let hi = sharpen(p, &disk, true, policy)?;
    Ok(down(&lo / &hi))
}

/// Whether `f` stays clear of every target on the boundary.
pub fn boundary_clear(
    f: &dyn Holomorphic,
    targets: &[SymbolicValue],
    disk: &Disk,
    policy: &PrecisionPolicy,
) -> Result<BoundaryClearance> {
    let mut margins = Vec::with_capacity(targets.len());
    for t in targets {
        let shifted = Shifted { f, alpha: t.clone() };
        let judge = |b: &ComplexBox| if b.excludes_zero() { Verdict::Accept } else { Verdict::Refine };
        match walk(&shifted, disk, policy, &judge)? {
            Ok(c) => margins.push(c.arcs.iter().map(|a| a.image.abs_lower()).min_by(|a, b| a.total_cmp(b)).unwrap()),
            Err(WalkEnd::Contact(_)) => return Ok(BoundaryClearance { clear: false, margins }),
            Err(WalkEnd::Precision) => return Err(Error::precision(policy.ceiling, "boundary clearance")),
        }
    }
    Ok(BoundaryClearance { clear: true, margins })
}
