use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rug::{Float, Rational};

use super::ball::{up, ComplexBox};
use super::gauss::GaussianRational;
use crate::error::{Error, Result};

/// Closed disk `|z - center| <= radius` with exact data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Disk {
    pub center: GaussianRational,
    pub radius: Rational,
}

impl Disk {
    pub fn new(center: GaussianRational, radius: Rational) -> Result<Self> {
        if radius <= 0 {
            return Err(Error::Precondition(format!("disk radius {radius} is not positive")));
        }
        Ok(Disk { center, radius })
    }

    pub fn origin(radius: Rational) -> Result<Self> {
        Disk::new(GaussianRational::zero(), radius)
    }

    pub fn radius_f64(&self) -> f64 {
        self.radius.to_f64()
    }

    pub fn center_c64(&self) -> Complex64 {
        let (a, b) = self.center.to_f64();
        Complex64::new(a, b)
    }

    /// Box covering the whole closed disk.
    pub fn to_box(&self, prec: u32) -> ComplexBox {
        let c = ComplexBox::from_gaussian(&self.center, prec);
        c.inflate(&up(&self.radius))
    }

    /// Certified: `b` lies inside the open disk.
    pub fn contains_box(&self, b: &ComplexBox) -> bool {
        let d = b.sub(&ComplexBox::from_gaussian(&self.center, b.prec().max(64)));
        d.abs_upper() < Float::with_val(128, &self.radius)
    }

    /// Certified: `b` lies outside the closed disk.
    pub fn excludes_box(&self, b: &ComplexBox) -> bool {
        let d = b.sub(&ComplexBox::from_gaussian(&self.center, b.prec().max(64)));
        d.abs_lower() > Float::with_val(128, &self.radius)
    }

    /// Approximate membership for search heuristics.
    pub fn contains_c64(&self, z: Complex64) -> bool {
        (z - self.center_c64()).norm() < self.radius_f64()
    }
}

impl fmt::Display for Disk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.center, self.radius)
    }
}

impl FromStr for Disk {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (c, r) = s
            .rsplit_once(',')
            .ok_or_else(|| Error::Parse(format!("disk {s:?}: expected center,radius")))?;
        let r = Rational::from_str(r.trim()).map_err(|e| Error::Parse(format!("radius: {e}")))?;
        Disk::new(c.parse()?, r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        let d: Disk = "1/2:-1,3/2".parse().unwrap();
        assert_eq!(d.to_string(), "1/2:-1,3/2");
        assert!("0,0".parse::<Disk>().is_err());
        assert!("0,-1".parse::<Disk>().is_err());
    }

    #[test]
    fn membership() {
        let d: Disk = "0,1".parse().unwrap();
        assert!(d.contains_box(&ComplexBox::disk_c64(Complex64::new(0.5, 0.0), 0.1, 64)));
        assert!(!d.contains_box(&ComplexBox::disk_c64(Complex64::new(0.95, 0.0), 0.1, 64)));
        assert!(d.excludes_box(&ComplexBox::disk_c64(Complex64::new(1.5, 0.0), 0.1, 64)));
    }
}
