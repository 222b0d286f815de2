//! Ordinals below ω^ω in Cantor normal form.
//!
//! These serve as the machine clock. The representation is kept canonical
//! on every construction, so structural equality is ordinal equality.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// One `ω^exp · coeff` summand. `coeff` is always at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Term {
    pub exp: u32,
    pub coeff: u64,
}

/// An ordinal `Σ ω^e·c` with strictly decreasing exponents and positive
/// coefficients. The empty sum is zero.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Ordinal {
    terms: Vec<Term>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OrdinalError {
    #[error("limit_jump requires a positive period")]
    ZeroPeriod,
    #[error("cannot parse ordinal `{0}`: {1}")]
    Parse(String, &'static str),
}

impl Ordinal {
    pub const fn zero() -> Self {
        Ordinal { terms: Vec::new() }
    }

    pub fn finite(n: u64) -> Self {
        if n == 0 {
            Self::zero()
        } else {
            Ordinal { terms: vec![Term { exp: 0, coeff: n }] }
        }
    }

    /// ω
    pub fn omega() -> Self {
        Self::omega_pow(1)
    }

    /// ω^e
    pub fn omega_pow(e: u32) -> Self {
        Ordinal { terms: vec![Term { exp: e, coeff: 1 }] }
    }

    /// Builds an ordinal from arbitrary `(exp, coeff)` pairs read left to
    /// right as an ordinal sum, so absorption applies.
    pub fn from_sum<I: IntoIterator<Item = (u32, u64)>>(parts: I) -> Self {
        parts
            .into_iter()
            .filter(|&(_, c)| c > 0)
            .fold(Self::zero(), |acc, (e, c)| {
                acc.add(&Ordinal { terms: vec![Term { exp: e, coeff: c }] })
            })
    }

    /// Builds from terms that are already canonical. Returns `None` if
    /// they are not.
    pub fn from_terms(terms: Vec<Term>) -> Option<Self> {
        let ok = terms.iter().all(|t| t.coeff > 0)
            && terms.windows(2).all(|w| w[0].exp > w[1].exp);
        ok.then_some(Ordinal { terms })
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_limit(&self) -> bool {
        self.terms.last().is_some_and(|t| t.exp > 0)
    }

    pub fn is_finite(&self) -> bool {
        self.terms.iter().all(|t| t.exp == 0)
    }

    /// Leading exponent, i.e. the CNF degree. Zero has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.first().map_or(0, |t| t.exp)
    }

    /// The finite value, if this ordinal is a natural number.
    pub fn as_finite(&self) -> Option<u64> {
        match self.terms.as_slice() {
            [] => Some(0),
            [Term { exp: 0, coeff }] => Some(*coeff),
            _ => None,
        }
    }

    /// Ordinal addition `self + rhs`.
    pub fn add(&self, rhs: &Ordinal) -> Ordinal {
        let Some(lead) = rhs.terms.first() else {
            return self.clone();
        };
        let mut terms: Vec<Term> = self
            .terms
            .iter()
            .copied()
            .take_while(|t| t.exp >= lead.exp)
            .collect();
        let mut rest = rhs.terms.iter().copied();
        if let Some(last) = terms.last_mut().filter(|t| t.exp == lead.exp) {
            last.coeff += lead.coeff;
            rest.next();
        }
        terms.extend(rest);
        Ordinal { terms }
    }

    pub fn successor(&self) -> Ordinal {
        self.add(&Ordinal::finite(1))
    }

    /// `sup_n (start + period·n)`, which is `start + ω^(d+1)` for `d` the
    /// degree of `period`.
    pub fn limit_jump(start: &Ordinal, period: &Ordinal) -> Result<Ordinal, OrdinalError> {
        if period.is_zero() {
            return Err(OrdinalError::ZeroPeriod);
        }
        Ok(start.add(&Ordinal::omega_pow(period.degree() + 1)))
    }

    /// The unique `δ` with `base + δ = self`, or `None` when `base > self`.
    pub fn checked_sub(&self, base: &Ordinal) -> Option<Ordinal> {
        if base > self {
            return None;
        }
        let i = self
            .terms
            .iter()
            .zip(&base.terms)
            .take_while(|(a, b)| a == b)
            .count();
        if i == base.terms.len() {
            return Some(Ordinal { terms: self.terms[i..].to_vec() });
        }
        let (a, b) = (self.terms[i], base.terms[i]);
        let mut terms = Vec::with_capacity(self.terms.len() - i);
        if a.exp == b.exp {
            terms.push(Term { exp: a.exp, coeff: a.coeff - b.coeff });
        } else {
            terms.push(a);
        }
        terms.extend_from_slice(&self.terms[i + 1..]);
        Some(Ordinal { terms })
    }
}

impl Ord for Ordinal {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.terms.iter().zip(&other.terms) {
            let ord = a.exp.cmp(&b.exp).then(a.coeff.cmp(&b.coeff));
            if ord != Ordering::Equal {
                return ord;
            }
        }
        self.terms.len().cmp(&other.terms.len())
    }
}

impl PartialOrd for Ordinal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            if t.exp == 0 {
                write!(f, "{}", t.coeff)?;
            } else {
                write!(f, "w^{}*{}", t.exp, t.coeff)?;
            }
        }
        Ok(())
    }
}

impl FromStr for Ordinal {
    type Err = OrdinalError;

    /// Accepts the rendered syntax. Terms are summed as ordinals, so a
    /// non-canonical sum such as `3+w^1*1` is normalised to `w^1*1`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |why| OrdinalError::Parse(s.to_string(), why);
        let s = s.trim();
        if s.is_empty() {
            return Err(err("empty input"));
        }
        let mut parts = Vec::new();
        for raw in s.split('+') {
            let t = raw.trim();
            if let Some(rest) = t.strip_prefix("w^") {
                let (e, c) = rest.split_once('*').ok_or_else(|| err("expected `w^k*c`"))?;
                let e: u32 = e.trim().parse().map_err(|_| err("bad exponent"))?;
                let c: u64 = c.trim().parse().map_err(|_| err("bad coefficient"))?;
                parts.push((e, c));
            } else {
                let c: u64 = t.parse().map_err(|_| err("bad term"))?;
                parts.push((0, c));
            }
        }
        Ok(Ordinal::from_sum(parts))
    }
}

impl From<u64> for Ordinal {
    fn from(n: u64) -> Self {
        Ordinal::finite(n)
    }
}

impl serde::Serialize for Ordinal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
