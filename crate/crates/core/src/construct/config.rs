//! Construction config: plain `key = value` lines, exact rationals only.
//!
//! ```text
//! base = exp
//! field = gaussian
//! sigma = 1:2,2:1,3:1
//! theta = default
//! max_stage = 3
//! seed = 7
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rug::{Integer, Rational};

use crate::corekit::PrecisionPolicy;
use crate::entire::BaseFunction;
use crate::error::{Error, Result};

/// Requested orbit count for one period.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrbitTarget {
    Finite(u64),
    Infinite,
}

impl OrbitTarget {
    /// `min(m, s_k)`.
    pub fn capped(self, m: usize) -> usize {
        match self {
            OrbitTarget::Finite(s) => (s as usize).min(m),
            OrbitTarget::Infinite => m,
        }
    }
}

impl fmt::Display for OrbitTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrbitTarget::Finite(s) => write!(f, "{s}"),
            OrbitTarget::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstructionConfig {
    pub base: String,
    pub field: String,
    pub enumeration: String,
    /// `s_k` for `k >= 1`; absent periods ask for no orbits.
    pub sigma: BTreeMap<usize, OrbitTarget>,
    /// Explicit `theta_k`; the rest default to `1 / (2 k!)`.
    pub theta: BTreeMap<usize, Rational>,
    pub max_stage: usize,
    pub seed: u64,
    pub policy: PrecisionPolicy,
    /// Largest radius `select_radius` may try.
    pub radius_cap: Rational,
    /// Resample budget for each micro-step.
    pub retries: usize,
}

impl Default for ConstructionConfig {
    fn default() -> Self {
        ConstructionConfig {
            base: "exp".into(),
            field: "gaussian".into(),
            enumeration: "height-lex".into(),
            sigma: BTreeMap::new(),
            theta: BTreeMap::new(),
            max_stage: 3,
            seed: 0,
            policy: PrecisionPolicy::new(256, 8192),
            radius_cap: Rational::from(24),
            retries: 32,
        }
    }
}

fn factorial(k: usize) -> Integer {
    Integer::from(Integer::factorial(k as u32))
}

impl ConstructionConfig {
    pub fn base_function(&self) -> Result<BaseFunction> {
        BaseFunction::supplied(&self.base)
    }

    pub fn s(&self, k: usize) -> OrbitTarget {
        self.sigma.get(&k).copied().unwrap_or(OrbitTarget::Finite(0))
    }

    pub fn theta(&self, k: usize) -> Rational {
        self.theta
            .get(&k)
            .cloned()
            .unwrap_or_else(|| Rational::from((Integer::from(1), factorial(k) * 2u32)))
    }

    /// `Theta_k = min_{1 <= j <= k} theta_j`.
    pub fn big_theta(&self, k: usize) -> Rational {
        (1..=k.max(1)).map(|j| self.theta(j)).min().expect("nonempty")
    }

    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Error::Config { line: 0, msg };
        BaseFunction::supplied(&self.base).map_err(|e| err(e.to_string()))?;
        if self.field != "gaussian" {
            return Err(err(format!("unknown field {:?}; supported: gaussian", self.field)));
        }
        if self.enumeration != "height-lex" {
            return Err(err(format!("unknown enumeration {:?}; supported: height-lex", self.enumeration)));
        }
        for (&k, t) in &self.theta {
            check_theta(k, t).map_err(err)?;
        }
        if self.max_stage < 1 {
            return Err(err("max_stage must be at least 1".into()));
        }
        if self.radius_cap <= 1 {
            return Err(err("radius_cap must exceed 1".into()));
        }
        Ok(())
    }

    /// Canonical text, one key per line.
    pub fn to_text(&self) -> String {
        let sigma: Vec<String> = self.sigma.iter().map(|(k, s)| format!("{k}:{s}")).collect();
        let theta = if self.theta.is_empty() {
            "default".to_string()
        } else {
            self.theta.iter().map(|(k, t)| format!("{k}:{t}")).collect::<Vec<_>>().join(",")
        };
        format!(
            "base = {}\nfield = {}\nenumeration = {}\nsigma = {}\ntheta = {}\nmax_stage = {}\nseed = {}\nprecision_start = {}\nprecision_ceiling = {}\nradius_cap = {}\nretries = {}\n",
            self.base,
            self.field,
            self.enumeration,
            if sigma.is_empty() { "none".to_string() } else { sigma.join(",") },
            theta,
            self.max_stage,
            self.seed,
            self.policy.start,
            self.policy.ceiling,
            self.radius_cap,
            self.retries,
        )
    }
}

fn check_theta(k: usize, t: &Rational) -> std::result::Result<(), String> {
    if *t <= 0 {
        return Err(format!("theta_{k} = {t} must be positive"));
    }
    let bound = Rational::from((Integer::from(1), factorial(k)));
    if *t >= bound {
        return Err(format!("theta_{k} = {t} violates theta_k < 1/k! = {bound}"));
    }
    Ok(())
}

fn parse_sigma(v: &str) -> std::result::Result<BTreeMap<usize, OrbitTarget>, String> {
    let mut out = BTreeMap::new();
    if v == "none" || v.is_empty() {
        return Ok(out);
    }
    for item in v.split(',') {
        let (k, s) = item.split_once(':').ok_or_else(|| format!("sigma entry {item:?} is not k:s"))?;
        let k: usize = k.trim().parse().map_err(|_| format!("bad period {k:?}"))?;
        let s = match s.trim() {
            "inf" | "∞" => OrbitTarget::Infinite,
            t => OrbitTarget::Finite(t.parse().map_err(|_| format!("bad count {t:?}"))?),
        };
        // s_0 has no orbits to count
        if k == 0 {
            continue;
        }
        if out.insert(k, s).is_some() {
            return Err(format!("period {k} given twice"));
        }
    }
    Ok(out)
}

fn parse_theta(v: &str) -> std::result::Result<BTreeMap<usize, Rational>, String> {
    let mut out = BTreeMap::new();
    if v == "default" {
        return Ok(out);
    }
    for item in v.split(',') {
        let (k, t) = item.split_once(':').ok_or_else(|| format!("theta entry {item:?} is not k:p/q"))?;
        let k: usize = k.trim().parse().map_err(|_| format!("bad index {k:?}"))?;
        let t = Rational::from_str(t.trim()).map_err(|_| format!("theta_{k}: {t:?} is not an exact rational"))?;
        check_theta(k, &t)?;
        out.insert(k, t);
    }
    Ok(out)
}

impl FromStr for ConstructionConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut cfg = ConstructionConfig::default();
        let (mut start, mut ceiling) = (cfg.policy.start, cfg.policy.ceiling);
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |msg: String| Error::Config { line, msg };
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| err(format!("expected key = value, got {body:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let int = |v: &str| v.parse::<u64>().map_err(|_| err(format!("{key}: {v:?} is not a nonnegative integer")));
            match key {
                "base" => {
                    BaseFunction::supplied(value).map_err(|e| err(e.to_string()))?;
                    cfg.base = value.to_string();
                }
                "field" => cfg.field = value.to_string(),
                "enumeration" => cfg.enumeration = value.to_string(),
                "sigma" => cfg.sigma = parse_sigma(value).map_err(err)?,
                "theta" => cfg.theta = parse_theta(value).map_err(err)?,
                "max_stage" => cfg.max_stage = int(value)? as usize,
                "seed" => cfg.seed = int(value)?,
                "precision_start" => start = int(value)? as u32,
                "precision_ceiling" => ceiling = int(value)? as u32,
                "radius_cap" => {
                    cfg.radius_cap = Rational::from_str(value).map_err(|_| err(format!("radius_cap: {value:?} is not an exact rational")))?
                }
                "retries" => cfg.retries = int(value)? as usize,
                _ => return Err(err(format!("unknown key {key:?}"))),
            }
        }
        cfg.policy = PrecisionPolicy::new(start, ceiling);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_round_trips() {
        let c: ConstructionConfig = "base = exp\nsigma = 1:2,2:inf\n# comment\nseed = 9\n".parse().unwrap();
        assert_eq!(c.s(1), OrbitTarget::Finite(2));
        assert_eq!(c.s(2), OrbitTarget::Infinite);
        assert_eq!(c.s(5), OrbitTarget::Finite(0));
        assert_eq!(c.theta(3), Rational::from((1, 12)));
        let back: ConstructionConfig = c.to_text().parse().unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn theta_guard_names_the_line() {
        let e = "base = exp\ntheta = 3:1\n".parse::<ConstructionConfig>().unwrap_err();
        match e {
            Error::Config { line, msg } => {
                assert_eq!(line, 2);
                assert!(msg.contains("1/k!"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
        assert!("theta = 0:1".parse::<ConstructionConfig>().is_err());
        assert!("base = tan".parse::<ConstructionConfig>().is_err());
    }
}
