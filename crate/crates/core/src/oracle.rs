//! Oracles: pure, total membership predicates on the naturals.
//!
//! Text syntax: `finite{1,5,9}`, `cofinite{0}`, `periodic[1|01]`,
//! `join(A,B)`, `compl(A)`, `code(<structure>)` and `order(<ordinal>)`.
//! The argument of `code(...)` is either a path, resolved by the caller, or
//! an inline structure `m;a b;a b`.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::coding::{self, CodedStructure};
use crate::ordinal::Ordinal;

/// An eventually periodic bit word `prefix · cycle^ω`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PeriodicWord {
    prefix: Vec<u8>,
    cycle: Vec<u8>,
}

impl PeriodicWord {
    pub fn new(prefix: Vec<u8>, cycle: Vec<u8>) -> Result<Self, OracleError> {
        if cycle.is_empty() {
            return Err(OracleError::EmptyCycle);
        }
        if prefix.iter().chain(&cycle).any(|&b| b > 1) {
            return Err(OracleError::Parse("bits must be 0 or 1".into()));
        }
        Ok(PeriodicWord { prefix, cycle })
    }

    pub fn prefix(&self) -> &[u8] {
        &self.prefix
    }

    pub fn cycle(&self) -> &[u8] {
        &self.cycle
    }

    pub fn bit(&self, n: u64) -> u64 {
        let n = n as usize;
        let b = match self.prefix.get(n) {
            Some(&b) => b,
            None => self.cycle[(n - self.prefix.len()) % self.cycle.len()],
        };
        b as u64
    }

    /// The word of a finite set: its characteristic bits up to the maximum,
    /// then zeros.
    pub fn of_finite(members: &BTreeSet<u64>) -> Self {
        let len = members.last().map_or(0, |&m| m as usize + 1);
        let prefix = (0..len).map(|i| members.contains(&(i as u64)) as u8).collect();
        PeriodicWord { prefix, cycle: vec![0] }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum OracleSpec {
    Finite(BTreeSet<u64>),
    Cofinite(BTreeSet<u64>),
    Periodic(PeriodicWord),
    Join(Box<OracleSpec>, Box<OracleSpec>),
    Complement(Box<OracleSpec>),
    StructureCode(CodedStructure),
    /// The well-order `ord(a) < ord(b) < δ` on enumeration indices.
    OrdinalOrder(Ordinal),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("periodic oracle needs a nonempty cycle")]
    EmptyCycle,
    #[error("invalid oracle spec: {0}")]
    Parse(String),
}

impl OracleSpec {
    pub fn empty() -> Self {
        OracleSpec::Finite(BTreeSet::new())
    }

    pub fn finite<I: IntoIterator<Item = u64>>(members: I) -> Self {
        OracleSpec::Finite(members.into_iter().collect())
    }

    pub fn periodic(prefix: &[u8], cycle: &[u8]) -> Result<Self, OracleError> {
        PeriodicWord::new(prefix.to_vec(), cycle.to_vec()).map(OracleSpec::Periodic)
    }

    pub fn complement(self) -> Self {
        OracleSpec::Complement(Box::new(self))
    }

    /// Membership bit, 0 or 1.
    pub fn query(&self, n: u64) -> u64 {
        match self {
            OracleSpec::Finite(s) => s.contains(&n) as u64,
            OracleSpec::Cofinite(s) => !s.contains(&n) as u64,
            OracleSpec::Periodic(w) => w.bit(n),
            OracleSpec::Join(l, r) => {
                if n.is_multiple_of(2) {
                    l.query(n / 2)
                } else {
                    r.query(n / 2)
                }
            }
            OracleSpec::Complement(inner) => 1 - inner.query(n),
            OracleSpec::StructureCode(c) => c.contains(n) as u64,
            OracleSpec::OrdinalOrder(delta) => {
                let (a, b) = coding::unpair(n);
                let (a, b) = (coding::ordinal_at(a), coding::ordinal_at(b));
                (a < b && b < *delta) as u64
            }
        }
    }

    /// `Some(bit)` if `query(start + k·step) == bit` for every `k ≥ 0`.
    ///
    /// This is a sufficient test read off the shape of the oracle; it
    /// may return `None` for progressions that happen to be constant.
    pub fn stable_along(&self, start: u64, step: u64) -> Option<u64> {
        if step == 0 {
            return Some(self.query(start));
        }
        match self {
            OracleSpec::Finite(s) => finite_stable(s, start, step),
            OracleSpec::Cofinite(s) => finite_stable(s, start, step).map(|b| 1 - b),
            OracleSpec::StructureCode(c) => finite_stable(&c.code, start, step),
            OracleSpec::Periodic(w) => {
                // past the prefix, k ↦ bit repeats with period |cycle|
                let p = w.prefix.len() as u64;
                let span = p.div_ceil(step) + w.cycle.len() as u64;
                let first = w.bit(start);
                (1..=span).all(|k| w.bit(start + k * step) == first).then_some(first)
            }
            OracleSpec::Join(l, r) => {
                let side = |pos: u64, stride: u64| {
                    if pos.is_multiple_of(2) {
                        l.stable_along(pos / 2, stride)
                    } else {
                        r.stable_along(pos / 2, stride)
                    }
                };
                if step.is_multiple_of(2) {
                    side(start, step / 2)
                } else {
                    // even k land on start's parity, odd k on the other one
                    let even = side(start, step);
                    let odd = side(start + step, step);
                    match (even, odd) {
                        (Some(a), Some(b)) if a == b => Some(a),
                        _ => None,
                    }
                }
            }
            OracleSpec::Complement(inner) => inner.stable_along(start, step).map(|b| 1 - b),
            OracleSpec::OrdinalOrder(delta) => {
                // a finite order has a finite code
                let n = delta.as_finite()?;
                let members: BTreeSet<u64> = (0..n)
                    .flat_map(|b| (0..b).map(move |a| (a, b)))
                    .map(|(a, b)| {
                        coding::pair(
                            coding::ordinal_index(&Ordinal::finite(a)),
                            coding::ordinal_index(&Ordinal::finite(b)),
                        )
                    })
                    .collect();
                finite_stable(&members, start, step)
            }
        }
    }

    /// Parses the text syntax. `code(path)` arguments are handed to
    /// `load_structure`, which returns the structure file contents.
    pub fn parse_with(
        text: &str,
        load_structure: &dyn Fn(&str) -> Result<String, String>,
    ) -> Result<Self, OracleError> {
        let mut p = SpecParser { s: text.as_bytes(), pos: 0, src: text, load: load_structure };
        let spec = p.spec()?;
        p.ws();
        if p.pos != p.s.len() {
            return Err(p.err("trailing input"));
        }
        Ok(spec)
    }

    /// Parses specs that do not reference structure files.
    pub fn parse(text: &str) -> Result<Self, OracleError> {
        Self::parse_with(text, &|path| Err(format!("cannot load `{path}`")))
    }
}

/// Join per the convention `2i ∈ x⊕y ↔ i ∈ x`, `2i+1 ∈ x⊕y ↔ i ∈ y`.
pub fn join(x: OracleSpec, y: OracleSpec) -> OracleSpec {
    OracleSpec::Join(Box::new(x), Box::new(y))
}

fn finite_stable(members: &BTreeSet<u64>, start: u64, step: u64) -> Option<u64> {
    let hit = members
        .range(start..)
        .any(|&m| (m - start).is_multiple_of(step));
    (!hit).then_some(0)
}

fn render_set(f: &mut fmt::Formatter<'_>, name: &str, s: &BTreeSet<u64>) -> fmt::Result {
    let items: Vec<String> = s.iter().map(u64::to_string).collect();
    write!(f, "{name}{{{}}}", items.join(","))
}

fn bits(b: &[u8]) -> String {
    b.iter().map(|&x| if x == 1 { '1' } else { '0' }).collect()
}

impl fmt::Display for OracleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleSpec::Finite(s) => render_set(f, "finite", s),
            OracleSpec::Cofinite(s) => render_set(f, "cofinite", s),
            OracleSpec::Periodic(w) => write!(f, "periodic[{}|{}]", bits(&w.prefix), bits(&w.cycle)),
            OracleSpec::Join(l, r) => write!(f, "join({l},{r})"),
            OracleSpec::Complement(i) => write!(f, "compl({i})"),
            OracleSpec::StructureCode(c) => {
                write!(f, "code({}", c.domain_size)?;
                for (a, b) in &c.edges {
                    write!(f, ";{a} {b}")?;
                }
                f.write_str(")")
            }
            OracleSpec::OrdinalOrder(d) => write!(f, "order({d})"),
        }
    }
}

struct SpecParser<'a> {
    s: &'a [u8],
    pos: usize,
    src: &'a str,
    load: &'a dyn Fn(&str) -> Result<String, String>,
}

impl<'a> SpecParser<'a> {
    fn err(&self, msg: &str) -> OracleError {
        OracleError::Parse(format!("{msg} at offset {} in `{}`", self.pos, self.src))
    }

    fn ws(&mut self) {
        while self.s.get(self.pos).is_some_and(u8::is_ascii_whitespace) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> Result<(), OracleError> {
        self.ws();
        if self.s.get(self.pos) == Some(&c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected `{}`", c as char)))
        }
    }

    fn ident(&mut self) -> &str {
        self.ws();
        let start = self.pos;
        while self.s.get(self.pos).is_some_and(u8::is_ascii_alphabetic) {
            self.pos += 1;
        }
        &self.src[start..self.pos]
    }

    fn until(&mut self, close: u8) -> Result<&'a str, OracleError> {
        let start = self.pos;
        let mut depth = 0usize;
        while let Some(&c) = self.s.get(self.pos) {
            if c == b'(' {
                depth += 1;
            } else if c == close && depth == 0 {
                let out = &self.src[start..self.pos];
                self.pos += 1;
                return Ok(out);
            } else if c == b')' {
                depth = depth.saturating_sub(1);
            }
            self.pos += 1;
        }
        Err(self.err(&format!("missing `{}`", close as char)))
    }

    fn set(&mut self) -> Result<BTreeSet<u64>, OracleError> {
        self.eat(b'{')?;
        let body = self.until(b'}')?;
        body.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<u64>().map_err(|_| OracleError::Parse(format!("bad member `{t}`"))))
            .collect()
    }

    fn spec(&mut self) -> Result<OracleSpec, OracleError> {
        let name = self.ident().to_string();
        match name.as_str() {
            "finite" => Ok(OracleSpec::Finite(self.set()?)),
            "cofinite" => Ok(OracleSpec::Cofinite(self.set()?)),
            "periodic" => {
                self.eat(b'[')?;
                let body = self.until(b']')?;
                let (pre, cyc) = body.split_once('|').ok_or_else(|| self.err("expected `prefix|cycle`"))?;
                let parse_bits = |t: &str| -> Result<Vec<u8>, OracleError> {
                    t.trim()
                        .chars()
                        .map(|c| match c {
                            '0' => Ok(0),
                            '1' => Ok(1),
                            _ => Err(OracleError::Parse(format!("bad bit `{c}`"))),
                        })
                        .collect()
                };
                Ok(OracleSpec::Periodic(PeriodicWord::new(parse_bits(pre)?, parse_bits(cyc)?)?))
            }
            "join" => {
                self.eat(b'(')?;
                let l = self.spec()?;
                self.eat(b',')?;
                let r = self.spec()?;
                self.eat(b')')?;
                Ok(join(l, r))
            }
            "compl" => {
                self.eat(b'(')?;
                let i = self.spec()?;
                self.eat(b')')?;
                Ok(i.complement())
            }
            "code" => {
                self.eat(b'(')?;
                let arg = self.until(b')')?.trim().to_string();
                let text = if arg.contains(';') || arg.chars().all(|c| c.is_ascii_digit()) {
                    arg.replace(';', "\n")
                } else {
                    (self.load)(&arg).map_err(OracleError::Parse)?
                };
                let (m, edges) = coding::parse_structure(&text).map_err(|e| OracleError::Parse(e.to_string()))?;
                let c = coding::canonical_code(m, &edges).map_err(|e| OracleError::Parse(e.to_string()))?;
                Ok(OracleSpec::StructureCode(c))
            }
            "order" => {
                self.eat(b'(')?;
                let arg = self.until(b')')?;
                let d: Ordinal = arg.parse().map_err(|e: crate::ordinal::OrdinalError| OracleError::Parse(e.to_string()))?;
                Ok(coding::ordinal_order_oracle(d))
            }
            "" => Err(self.err("expected oracle name")),
            other => Err(OracleError::Parse(format!("unknown oracle `{other}`"))),
        }
    }
}
