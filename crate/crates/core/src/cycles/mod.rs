//! Periodic orbits: search, certification, multipliers and census.

mod phi;
mod regime;

use std::collections::BTreeMap;

use num_complex::Complex64;
use rug::Float;

pub use phi::{gauss_legendre, phi_check, PhiReport};
pub use regime::{admissible_multiplier, fixed_point_regime, Regime};

use crate::corekit::{ComplexBox, Disk, GaussianRational, PrecisionPolicy, SymbolicValue};
use crate::entire::{Holomorphic, IterateMinusId};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CycleStatus {
    Free,
    Nailed,
    Mixed,
}

impl CycleStatus {
    pub fn name(self) -> &'static str {
        match self {
            CycleStatus::Free => "free",
            CycleStatus::Nailed => "nailed",
            CycleStatus::Mixed => "mixed",
        }
    }
}

#[derive(Clone, Debug)]
pub struct CyclePoint {
    pub enclosure: ComplexBox,
    /// Exact value, for grafted or nailed points.
    pub exact: Option<SymbolicValue>,
}

#[derive(Clone, Debug)]
pub struct CycleRecord {
    pub period: usize,
    pub points: Vec<CyclePoint>,
    pub multiplier: ComplexBox,
    pub repelling: bool,
    pub status: CycleStatus,
}

impl CycleRecord {
    /// Build from certified point enclosures in orbit order.
    pub fn from_points(f: &dyn Holomorphic, points: Vec<CyclePoint>) -> Result<Self> {
        let boxes: Vec<ComplexBox> = points.iter().map(|p| p.enclosure.clone()).collect();
        let m = multiplier(f, &boxes)?;
        let repelling = m.abs_lower() > 1;
        Ok(CycleRecord { period: points.len(), points, multiplier: m, repelling, status: CycleStatus::Free })
    }

    pub fn boxes(&self) -> Vec<ComplexBox> {
        self.points.iter().map(|p| p.enclosure.clone()).collect()
    }

    /// Set `status` from the nail roots: a point counts as nailed unless its
    /// enclosure is certified to avoid every root.
    pub fn classify(&mut self, nail_roots: &[GaussianRational]) {
        let nailed = self
            .points
            .iter()
            .filter(|p| nail_roots.iter().any(|r| !p.enclosure.disjoint(&ComplexBox::from_gaussian(r, p.enclosure.prec()))))
            .count();
        self.status = if nailed == 0 {
            CycleStatus::Free
        } else if nailed == self.points.len() {
            CycleStatus::Nailed
        } else {
            CycleStatus::Mixed
        };
    }

    /// Certified: every point lies inside the open disk.
    pub fn inside(&self, disk: &Disk) -> bool {
        self.points.iter().all(|p| disk.contains_box(&p.enclosure))
    }

    /// Whether `other` may be the same orbit.
    pub fn overlaps(&self, other: &CycleRecord) -> bool {
        self.period == other.period
            && self.points.iter().any(|p| other.points.iter().any(|q| p.enclosure.overlaps(&q.enclosure)))
    }
}

/// `prod f'(z_i)` over the orbit.
pub fn multiplier(f: &dyn Holomorphic, points: &[ComplexBox]) -> Result<ComplexBox> {
    let prec = points.first().map(|p| p.prec()).unwrap_or(64);
    let mut m = ComplexBox::exact_int(1, prec);
    for p in points {
        m = m.mul(&f.deriv_box(p)?);
    }
    Ok(m)
}

/// Cycles found inside a disk, by period.
#[derive(Clone, Debug, Default)]
pub struct CycleCensus {
    pub per_period: BTreeMap<usize, Vec<CycleRecord>>,
}

impl CycleCensus {
    pub fn insert(&mut self, c: CycleRecord) {
        self.per_period.entry(c.period).or_default().push(c);
    }

    /// Periodic points of exact period `k` found.
    pub fn per(&self, k: usize) -> usize {
        self.per_period.get(&k).map_or(0, |v| v.iter().map(|c| c.points.len()).sum())
    }

    pub fn orb(&self, k: usize) -> usize {
        self.per_period.get(&k).map_or(0, Vec::len)
    }

    pub fn count_status(&self, k: usize, s: CycleStatus) -> usize {
        self.per_period.get(&k).map_or(0, |v| v.iter().filter(|c| c.status == s).count())
    }

    /// `#Orb(k) = #Per(k) / k` for every period present.
    pub fn consistent(&self) -> bool {
        self.per_period.keys().all(|&k| self.per(k) == k * self.orb(k))
    }
}

/// Search and certification knobs.
#[derive(Clone, Copy, Debug)]
pub struct SeedGrid {
    /// Grid points per axis across the disk's bounding square.
    pub per_axis: usize,
    pub newton_steps: usize,
}

impl Default for SeedGrid {
    fn default() -> Self {
        SeedGrid { per_axis: 48, newton_steps: 60 }
    }
}

fn newton_c64(g: &dyn Holomorphic, mut z: Complex64, steps: usize, scale: f64) -> Option<Complex64> {
    for _ in 0..steps {
        let v = g.eval_c64(z);
        let d = g.deriv_c64(z);
        let mut step = v / d;
        if !step.re.is_finite() || !step.im.is_finite() {
            return None;
        }
        if step.norm() > scale {
            step *= scale / step.norm();
        }
        z -= step;
        if step.norm() < 1e-13 * (1.0 + z.norm()) {
            return Some(z);
        }
    }
    None
}

/// Newton refinement at working precision from a point center.
pub(crate) fn newton_box(g: &dyn Holomorphic, z: ComplexBox, steps: usize) -> Result<ComplexBox> {
    let mut z = z.center();
    for _ in 0..steps {
        let v = g.eval_box(&z)?;
        let d = g.deriv_box(&z)?;
        match v.center().div(&d.center()) {
            Some(s) if s.is_finite() => z = z.sub(&s).center(),
            _ => break,
        }
    }
    Ok(z)
}

/// Krawczyk test on the ball of radius `r` around `z0`: returns an
/// enclosure of the unique zero of `g` in that ball, if certified.
pub fn krawczyk(g: &dyn Holomorphic, z0: &ComplexBox, r: &Float) -> Result<Option<ComplexBox>> {
    let prec = z0.prec();
    let c = z0.center();
    let x = c.with_rad(r);
    let d0 = g.deriv_box(&c)?;
    let y = match ComplexBox::exact_int(1, prec).div(&d0.center()) {
        Some(y) if y.is_finite() => y.center(),
        _ => return Ok(None),
    };
    let fc = g.eval_box(&c)?;
    let dx = g.deriv_box(&x)?;
    let one = ComplexBox::exact_int(1, prec);
    let spread = one.sub(&y.mul(&dx)).mul(&ComplexBox::zero(prec).with_rad(r));
    let k = c.sub(&y.mul(&fc)).add(&spread);
    Ok(if x.contains_strictly(&k) && k.is_finite() { Some(k) } else { None })
}

/// Certify a zero of `g` near `z`; the result is a small ball holding
/// exactly one zero.
pub fn certify_zero(g: &dyn Holomorphic, z: Complex64, policy: &PrecisionPolicy) -> Result<Option<ComplexBox>> {
    for prec in policy.ladder().into_iter().take(3) {
        let c = newton_box(g, ComplexBox::from_c64(z, prec), 6)?;
        let scale = 1.0 + c.center_c64().norm();
        for rel in [1e-24, 1e-16, 1e-10, 1e-7] {
            let r = Float::with_val(64, rel * scale);
            if let Some(k) = krawczyk(g, &c, &r)? {
                return Ok(Some(k));
            }
        }
    }
    Ok(None)
}

/// Certified simple zeros of `g` inside `disk`, exactly `expected` of
/// them, found by Newton from successively finer seed grids.
pub fn locate_zeros(g: &dyn Holomorphic, disk: &Disk, expected: usize, policy: &PrecisionPolicy) -> Result<Vec<ComplexBox>> {
    let mut out: Vec<ComplexBox> = Vec::new();
    if expected == 0 {
        return Ok(out);
    }
    let c = disk.center_c64();
    let r = disk.radius_f64();
    let mut tried: Vec<Complex64> = Vec::new();
    for n in [32usize, 64, 128, 256] {
        for iy in 0..n {
            for ix in 0..n {
                let s = Complex64::new(
                    -r + 2.0 * r * (ix as f64 + 0.5) / n as f64,
                    -r + 2.0 * r * (iy as f64 + 0.5) / n as f64,
                );
                if s.norm() >= r {
                    continue;
                }
                let Some(z) = newton_c64(g, c + s, 60, r / 4.0) else {
                    continue;
                };
                if !disk.contains_c64(z) || tried.iter().any(|w| (w - z).norm() < 1e-8 * (1.0 + z.norm())) {
                    continue;
                }
                tried.push(z);
                if let Some(b) = certify_zero(g, z, policy)? {
                    if disk.contains_box(&b) && out.iter().all(|o| o.disjoint(&b)) {
                        out.push(b);
                    }
                }
                if out.len() == expected {
                    out.sort_by(|a, b| {
                        let (x, y) = (a.center_c64(), b.center_c64());
                        (x.re, x.im).partial_cmp(&(y.re, y.im)).unwrap_or(std::cmp::Ordering::Equal)
                    });
                    return Ok(out);
                }
            }
        }
    }
    Err(Error::SearchExhausted(format!("located {} of {expected} zeros in {disk}", out.len())))
}

fn boundary_looks_clear(g: &dyn Holomorphic, disk: &Disk) -> bool {
    let c = disk.center_c64();
    let r = disk.radius_f64();
    (0..256).all(|i| {
        let z = c + Complex64::from_polar(r, i as f64 * std::f64::consts::TAU / 256.0);
        let v = g.eval_c64(z);
        !(v.norm() <= 1e-12 * (1.0 + z.norm()))
    })
}

/// Certify the cycle through `z` of exact period `k`, if any.
pub fn certify_cycle(f: &dyn Holomorphic, k: usize, z: Complex64, policy: &PrecisionPolicy) -> Result<Option<CycleRecord>> {
    let g = IterateMinusId { f, k };
    let Some(b) = certify_zero(&g, z, policy)? else {
        return Ok(None);
    };
    let orbit = g.orbit_box(&b)?;
    let boxes = &orbit[..k];
    for i in 0..k {
        for j in i + 1..k {
            if !boxes[i].disjoint(&boxes[j]) {
                return Ok(None);
            }
        }
    }
    let points = boxes.iter().map(|e| CyclePoint { enclosure: e.clone(), exact: None }).collect();
    Ok(Some(canonical(CycleRecord::from_points(f, points)?)))
}

/// Rotate so the point with the smallest center (lexicographic) is first.
fn canonical(mut c: CycleRecord) -> CycleRecord {
    let key = |p: &CyclePoint| {
        let z = p.enclosure.center_c64();
        (z.re, z.im)
    };
    let i = (0..c.points.len())
        .min_by(|&a, &b| key(&c.points[a]).partial_cmp(&key(&c.points[b])).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap_or(0);
    c.points.rotate_left(i);
    c
}

/// Certified cycles of exact period `k` lying entirely inside `disk`,
/// found by Newton from a seed grid. Fewer than `want` is an error.
pub fn find_cycles(
    f: &dyn Holomorphic,
    k: usize,
    disk: &Disk,
    want: usize,
    grid: SeedGrid,
    policy: &PrecisionPolicy,
) -> Result<Vec<CycleRecord>> {
    let found = search_cycles(f, k, disk, grid, policy)?;
    if found.len() < want {
        return Err(Error::SearchExhausted(format!(
            "period {k} in {disk}: wanted {want} cycles, found {} with a {}x{} seed grid",
            found.len(),
            grid.per_axis,
            grid.per_axis
        )));
    }
    Ok(found)
}

/// All cycles the seed grid reaches; no minimum.
pub fn search_cycles(
    f: &dyn Holomorphic,
    k: usize,
    disk: &Disk,
    grid: SeedGrid,
    policy: &PrecisionPolicy,
) -> Result<Vec<CycleRecord>> {
    if k == 0 {
        return Err(Error::Precondition("period must be positive".into()));
    }
    let g = IterateMinusId { f, k };
    if !boundary_looks_clear(&g, disk) {
        return Err(Error::Precondition(format!("period-{k} points on or near the boundary of {disk}")));
    }
    let c = disk.center_c64();
    let r = disk.radius_f64();
    let n = grid.per_axis.max(2);
    let mut roots: Vec<Complex64> = Vec::new();
    let mut out: Vec<CycleRecord> = Vec::new();
    for iy in 0..n {
        for ix in 0..n {
            let s = Complex64::new(
                -r + 2.0 * r * (ix as f64 + 0.5) / n as f64,
                -r + 2.0 * r * (iy as f64 + 0.5) / n as f64,
            );
            if s.norm() >= r {
                continue;
            }
            let Some(z) = newton_c64(&g, c + s, grid.newton_steps, r / 4.0) else {
                continue;
            };
            if !disk.contains_c64(z) || roots.iter().any(|w| (w - z).norm() < 1e-8 * (1.0 + z.norm())) {
                continue;
            }
            roots.push(z);
            let Some(cyc) = certify_cycle(f, k, z, policy)? else {
                continue;
            };
            for p in &cyc.points {
                roots.push(p.enclosure.center_c64());
            }
            if cyc.inside(disk) && !out.iter().any(|o| o.overlaps(&cyc)) {
                out.push(cyc);
            }
        }
    }
    out.sort_by(|a, b| {
        let (x, y) = (a.points[0].enclosure.center_c64(), b.points[0].enclosure.center_c64());
        (x.re, x.im).partial_cmp(&(y.re, y.im)).unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(out)
}

/// Census of periods `1..=max_period` inside `disk`.
pub fn census(
    f: &dyn Holomorphic,
    max_period: usize,
    disk: &Disk,
    nail_roots: &[GaussianRational],
    grid: SeedGrid,
    policy: &PrecisionPolicy,
) -> Result<CycleCensus> {
    let mut c = CycleCensus::default();
    for k in 1..=max_period {
        for mut cyc in search_cycles(f, k, disk, grid, policy)? {
            cyc.classify(nail_roots);
            c.insert(cyc);
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entire::{BaseFunction, Polynomial};

    #[test]
    fn two_cycle_of_basilica() {
        let f = Polynomial::from_ints(&[-1, 0, 1]);
        let cs = find_cycles(&f, 2, &"0,2".parse().unwrap(), 1, SeedGrid::default(), &PrecisionPolicy::default()).unwrap();
        assert_eq!(cs.len(), 1);
        let c = &cs[0];
        assert!(c.points[0].enclosure.contains_gaussian(&GaussianRational::from_int(-1)));
        assert!(c.points[1].enclosure.contains_gaussian(&GaussianRational::zero()));
        assert!(c.multiplier.contains_gaussian(&GaussianRational::zero()));
        assert!(!c.repelling);
    }

    #[test]
    fn exp_has_no_fixed_point_in_unit_disk() {
        let e = BaseFunction::supplied("exp").unwrap();
        let cs = search_cycles(&e, 1, &"0,1".parse().unwrap(), SeedGrid::default(), &PrecisionPolicy::default()).unwrap();
        assert!(cs.is_empty());
    }

    #[test]
    fn identity_is_rejected() {
        let f = Polynomial::x();
        let r = search_cycles(&f, 1, &"0,1".parse().unwrap(), SeedGrid::default(), &PrecisionPolicy::default());
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn affine_multiplier() {
        let f = Polynomial::new(vec![GaussianRational::one(), GaussianRational::ratio(1, 2)]);
        let cs = find_cycles(&f, 1, &"0,4".parse().unwrap(), 1, SeedGrid::default(), &PrecisionPolicy::default()).unwrap();
        assert!(cs[0].multiplier.contains_gaussian(&GaussianRational::ratio(1, 2)));
        assert!(cs[0].points[0].enclosure.contains_gaussian(&GaussianRational::from_int(2)));
    }
}
