//! The target stream `alpha_1 = 0, alpha_2, ...` over the Gaussian
//! rationals, by height and then by `(re, im)`.

use rug::{Integer, Rational};

use crate::corekit::GaussianRational;

#[derive(Clone, Debug, Default)]
pub struct AlgebraicEnumeration {
    cache: Vec<GaussianRational>,
    height: u64,
}

/// Reduced rationals `p/q` with `|p| <= h`, `q <= h`.
fn rationals_up_to(h: u64) -> Vec<Rational> {
    let mut out = vec![Rational::new()];
    for q in 1..=h {
        for p in 1..=h {
            if Integer::from(p).gcd(&Integer::from(q)) == 1 {
                out.push(Rational::from((p, q)));
                out.push(-Rational::from((p, q)));
            }
        }
    }
    out
}

impl AlgebraicEnumeration {
    pub fn new() -> Self {
        AlgebraicEnumeration { cache: vec![GaussianRational::zero()], height: 0 }
    }

    fn extend(&mut self) {
        self.height += 1;
        let h = self.height;
        let parts = rationals_up_to(h);
        let mut layer: Vec<GaussianRational> = Vec::new();
        for re in &parts {
            for im in &parts {
                let z = GaussianRational::new(re.clone(), im.clone());
                if !z.is_zero() && z.height() == h {
                    layer.push(z);
                }
            }
        }
        layer.sort_by(|a, b| a.lex_cmp(b));
        self.cache.extend(layer);
    }

    /// `alpha_i`, 1-based.
    pub fn get(&mut self, i: usize) -> GaussianRational {
        assert!(i >= 1, "targets are numbered from 1");
        while self.cache.len() < i {
            self.extend();
        }
        self.cache[i - 1].clone()
    }

    /// `alpha_1, ..., alpha_n`.
    pub fn prefix(&mut self, n: usize) -> Vec<GaussianRational> {
        (1..=n).map(|i| self.get(i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn starts_at_zero_then_height_one() {
        let mut e = AlgebraicEnumeration::new();
        let p: Vec<String> = e.prefix(4).iter().map(|z| z.to_string()).collect();
        assert_eq!(p, ["0:0", "-1:-1", "-1:0", "-1:1"]);
        // height one has the eight nonzero points of {-1,0,1}^2
        assert_eq!(e.get(10).height(), 2);
        assert_eq!(e.get(9).height(), 1);
    }
}
