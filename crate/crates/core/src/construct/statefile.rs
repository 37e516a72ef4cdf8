//! Versioned stage-state text with a sha256 checksum over the body.

use std::str::FromStr;

use rug::Rational;
use sha2::{Digest, Sha256};

use super::config::ConstructionConfig;
use super::state::{Budget, CoefficientRecord, Fact, Margin, Orbit, RegistryEntry, StageState, StepKind};
use crate::corekit::{read_dag, DagWriter, Disk, GaussianRational};
use crate::entire::{PerturbationTerm, StagedFunction};
use crate::error::{Error, Result};

pub const HEADER: &str = "mahler-stage v1";

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn body(s: &StageState) -> String {
    let mut out = String::new();
    let mut push = |line: String| {
        out.push_str(&line);
        out.push('\n');
    };
    push("[config]".into());
    for l in s.config.to_text().lines() {
        push(l.to_string());
    }
    push("[stage]".into());
    push(format!("m {}", s.m));
    push(format!("radii {}", join(&s.radii)));
    push(format!("roots_at_close {}", join(&s.roots_at_close)));
    push(format!("terms_at_close {}", join(&s.terms_at_close)));

    let mut dag = DagWriter::new();
    let e0 = dag.add(&s.f.epsilon0);
    let eps: Vec<usize> = s.f.terms.iter().map(|t| dag.add(&t.epsilon)).collect();
    push(format!("[nodes] {}", dag.lines().len()));
    for l in dag.lines() {
        push(l.clone());
    }
    push("[function]".into());
    push(format!("base {}", s.f.base.id()));
    push(format!("eps0 {e0}"));
    for r in &s.f.nail_roots {
        push(format!("root {r}"));
    }
    for ((t, role), node) in s.f.terms.iter().zip(&s.roles).zip(&eps) {
        push(format!("term {} {} {} {} {} {} {}", t.stage, t.index, role, t.exponent, t.nail_prefix, t.nu, node));
    }
    push("[facts]".into());
    for f in &s.facts {
        push(format!("fact {} {} {} {}", f.stage, f.kind.name(), f.point, f.value));
    }
    push("[registry]".into());
    for r in &s.registry {
        push(format!("pre {} {} {} {}", r.stage, r.target, r.tau, r.disk));
    }
    push("[orbits]".into());
    for o in &s.orbits {
        push(format!("orbit {} {}", o.stage, join(&o.points)));
    }
    push("[margins]".into());
    for m in &s.margins {
        push(format!("margin {} {} {} {} {}", m.stage, m.disk, m.target, m.margin, m.consumed));
    }
    push("[budgets]".into());
    for b in &s.budgets {
        push(format!(
            "budget {} {} {} {} {} {} {}",
            b.stage, b.s_formula, b.s_hat, b.l_formula, b.l_hat, b.s_used, b.l_used
        ));
    }
    push("[coefficients]".into());
    for c in &s.coefficients {
        push(format!("coef {} {} {}", c.k, c.stage, c.value));
    }
    push("[end]".into());
    out
}

pub fn checksum(body: &str) -> String {
    hex::encode(Sha256::digest(body.as_bytes()))
}

/// Full file text.
pub fn to_text(s: &StageState) -> String {
    let b = body(s);
    format!("{HEADER}\nchecksum {}\n{b}", checksum(&b))
}

/// Replace the checksum line so it matches the body; for deliberate edits.
pub fn reseal(text: &str) -> Result<String> {
    let (_, rest) = split_header(text)?;
    Ok(format!("{HEADER}\nchecksum {}\n{rest}", checksum(rest)))
}

fn split_header(text: &str) -> Result<(&str, &str)> {
    let mut it = text.splitn(3, '\n');
    let h = it.next().unwrap_or("");
    if h != HEADER {
        return Err(Error::Parse(format!("not a stage file (header {h:?})")));
    }
    let c = it.next().ok_or_else(|| Error::Parse("missing checksum line".into()))?;
    let sum = c.strip_prefix("checksum ").ok_or_else(|| Error::Parse("missing checksum line".into()))?;
    Ok((sum, it.next().unwrap_or("")))
}

struct Lines<'a> {
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn bad(&self, msg: &str) -> Error {
        let l = self.lines.get(self.pos.saturating_sub(1)).copied().unwrap_or("");
        Error::Parse(format!("stage file line {}: {msg}: {l:?}", self.pos + 2))
    }

    fn next(&mut self) -> Result<&'a str> {
        let l = self.lines.get(self.pos).copied().ok_or_else(|| Error::Parse("unexpected end of stage file".into()))?;
        self.pos += 1;
        Ok(l)
    }

    fn peek(&self) -> Option<&'a str> {
        self.lines.get(self.pos).copied()
    }

    fn expect(&mut self, section: &str) -> Result<()> {
        if self.next()? != section {
            return Err(self.bad(&format!("expected {section}")));
        }
        Ok(())
    }

    /// Lines up to the next `[section]` header.
    fn section(&mut self) -> Vec<&'a str> {
        let mut out = Vec::new();
        while let Some(l) = self.peek() {
            if l.starts_with('[') {
                break;
            }
            out.push(l);
            self.pos += 1;
        }
        out
    }
}

fn parse<T: FromStr>(tok: Option<&str>, what: &str) -> Result<T> {
    tok.and_then(|t| t.parse().ok()).ok_or_else(|| Error::Parse(format!("bad or missing {what}")))
}

fn gauss(tok: Option<&str>) -> Result<GaussianRational> {
    tok.ok_or_else(|| Error::Parse("missing element".into()))?.parse()
}

fn rational(tok: Option<&str>) -> Result<Rational> {
    let t = tok.ok_or_else(|| Error::Parse("missing rational".into()))?;
    Rational::from_str(t).map_err(|_| Error::Parse(format!("bad rational {t:?}")))
}

fn list<T: FromStr>(rest: &str, what: &str) -> Result<Vec<T>> {
    rest.split_whitespace().map(|t| parse(Some(t), what)).collect()
}

/// Parse and check the checksum.
pub fn from_text(text: &str) -> Result<StageState> {
    let (sum, rest) = split_header(text)?;
    if checksum(rest) != sum.trim() {
        return Err(Error::Checksum);
    }
    let mut ls = Lines { lines: rest.lines().collect(), pos: 0 };
    ls.expect("[config]")?;
    let config: ConstructionConfig = ls.section().join("\n").parse()?;
    let policy = config.policy;
    ls.expect("[stage]")?;
    let mut m = None;
    let mut radii = Vec::new();
    let mut roots_at_close = Vec::new();
    let mut terms_at_close = Vec::new();
    for l in ls.section() {
        let (k, v) = l.split_once(' ').unwrap_or((l, ""));
        match k {
            "m" => m = Some(parse::<usize>(Some(v), "stage index")?),
            "radii" => radii = v.split_whitespace().map(|t| rational(Some(t))).collect::<Result<_>>()?,
            "roots_at_close" => roots_at_close = list(v, "root count")?,
            "terms_at_close" => terms_at_close = list(v, "term count")?,
            _ => return Err(Error::Parse(format!("unknown stage key {k:?}"))),
        }
    }
    let m = m.ok_or_else(|| Error::Parse("missing stage index".into()))?;
    let head = ls.next()?;
    let count: usize = parse(head.strip_prefix("[nodes] "), "node count")?;
    let node_lines: Vec<&str> = (0..count).map(|_| ls.next()).collect::<Result<_>>()?;
    let nodes = read_dag(&node_lines, &policy)?;
    let node = |tok: Option<&str>| -> Result<crate::corekit::SymbolicValue> {
        let i: usize = parse(tok, "node index")?;
        nodes.get(i).cloned().ok_or_else(|| Error::Parse(format!("node {i} out of range")))
    };
    ls.expect("[function]")?;
    let mut base = None;
    let mut eps0 = None;
    let mut roots = Vec::new();
    let mut terms = Vec::new();
    let mut roles = Vec::new();
    for l in ls.section() {
        let mut t = l.split_whitespace();
        match t.next() {
            Some("base") => base = Some(crate::entire::BaseFunction::supplied(t.next().unwrap_or(""))?),
            Some("eps0") => eps0 = Some(node(t.next())?),
            Some("root") => roots.push(gauss(t.next())?),
            Some("term") => {
                let stage: u32 = parse(t.next(), "term stage")?;
                let index: u32 = parse(t.next(), "term index")?;
                let role: StepKind = t.next().unwrap_or("").parse()?;
                let exponent: u32 = parse(t.next(), "exponent")?;
                let nail_prefix: usize = parse(t.next(), "nail prefix")?;
                let nu = rational(t.next())?;
                let epsilon = node(t.next())?;
                if nail_prefix > roots.len() {
                    return Err(Error::Parse(format!("term {stage}.{index} uses {nail_prefix} roots before they are listed")));
                }
                terms.push(PerturbationTerm { stage, index, epsilon, exponent, nail_prefix, nu });
                roles.push(role);
            }
            _ => return Err(Error::Parse(format!("bad function line {l:?}"))),
        }
    }
    let base = base.ok_or_else(|| Error::Parse("missing base".into()))?;
    let eps0 = eps0.ok_or_else(|| Error::Parse("missing eps0".into()))?;
    let f = StagedFunction::new(base, eps0, roots, terms, policy);

    ls.expect("[facts]")?;
    let mut facts = Vec::new();
    for l in ls.section() {
        let mut t = l.split_whitespace().skip(1);
        facts.push(Fact {
            stage: parse(t.next(), "fact stage")?,
            kind: t.next().unwrap_or("").parse()?,
            point: gauss(t.next())?,
            value: gauss(t.next())?,
        });
    }
    ls.expect("[registry]")?;
    let mut registry = Vec::new();
    for l in ls.section() {
        let mut t = l.split_whitespace().skip(1);
        registry.push(RegistryEntry {
            stage: parse(t.next(), "registry stage")?,
            target: parse(t.next(), "target")?,
            tau: gauss(t.next())?,
            disk: parse::<Disk>(t.next(), "disk")?,
        });
    }
    ls.expect("[orbits]")?;
    let mut orbits = Vec::new();
    for l in ls.section() {
        let mut t = l.split_whitespace().skip(1);
        let stage = parse(t.next(), "orbit stage")?;
        let points = t.map(|p| gauss(Some(p))).collect::<Result<Vec<_>>>()?;
        orbits.push(Orbit { stage, points });
    }
    ls.expect("[margins]")?;
    let mut margins = Vec::new();
    for l in ls.section() {
        let mut t = l.split_whitespace().skip(1);
        margins.push(Margin {
            stage: parse(t.next(), "margin stage")?,
            disk: parse::<Disk>(t.next(), "disk")?,
            target: parse(t.next(), "target")?,
            margin: rational(t.next())?,
            consumed: rational(t.next())?,
        });
    }
    ls.expect("[budgets]")?;
    let mut budgets = Vec::new();
    for l in ls.section() {
        let v: Vec<u64> = list(l.strip_prefix("budget ").unwrap_or(""), "budget")?;
        if v.len() != 7 {
            return Err(Error::Parse(format!("budget line {l:?}")));
        }
        budgets.push(Budget {
            stage: v[0] as usize,
            s_formula: v[1],
            s_hat: v[2],
            l_formula: v[3],
            l_hat: v[4],
            s_used: v[5],
            l_used: v[6],
        });
    }
    ls.expect("[coefficients]")?;
    let mut coefficients = Vec::new();
    for l in ls.section() {
        let mut t = l.split_whitespace().skip(1);
        coefficients.push(CoefficientRecord {
            k: parse(t.next(), "coefficient index")?,
            stage: parse(t.next(), "coefficient stage")?,
            value: gauss(t.next())?,
        });
    }
    ls.expect("[end]")?;
    if radii.len() != m || roots_at_close.len() != m || terms_at_close.len() != m {
        return Err(Error::Parse(format!("stage {m} needs {m} radii and close counts")));
    }
    if terms_at_close.iter().any(|&t| t > f.terms.len()) || roots_at_close.iter().any(|&r| r > f.nail_roots.len()) {
        return Err(Error::Parse("close counts exceed the function".into()));
    }
    Ok(StageState {
        config,
        m,
        radii,
        f,
        roles,
        roots_at_close,
        terms_at_close,
        facts,
        registry,
        orbits,
        margins,
        budgets,
        coefficients,
    })
}
