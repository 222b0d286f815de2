//! Coding finite structures as reals.
//!
//! A binary relation `E` on an `m`-element domain is coded, relative to an
//! assignment `f` of indices to elements, by the set of naturals
//! `{ pair(a, b) : E(f(a), f(b)) }`. The canonical code picks the
//! assignment whose code, read as an increasing sequence, is
//! lexicographically least.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::oracle::OracleSpec;
use crate::ordinal::{Ordinal, Term};

pub type Edge = (usize, usize);

/// Default bound on the domain size for canonical codes (`m!` search).
pub const CANONICAL_BOUND: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodingError {
    #[error("edge ({0}, {1}) outside domain of size {2}")]
    EdgeOutOfRange(usize, usize, usize),
    #[error("assignment is not a permutation of 0..{0}")]
    NotAPermutation(usize),
    #[error("domain size {0} exceeds canonical-code bound {1}")]
    TooLarge(usize, usize),
    #[error("structure file line {0}: {1}")]
    Format(usize, String),
}

/// Cantor pairing `(a+b)(a+b+1)/2 + b`.
pub fn pair(a: u64, b: u64) -> u64 {
    let s = a + b;
    s * (s + 1) / 2 + b
}

/// Inverse of [`pair`].
pub fn unpair(n: u64) -> (u64, u64) {
    // largest s with s(s+1)/2 <= n
    let mut s = (((8.0 * n as f64 + 1.0).sqrt() - 1.0) / 2.0) as u64;
    while s * (s + 1) / 2 > n {
        s -= 1;
    }
    while (s + 1) * (s + 2) / 2 <= n {
        s += 1;
    }
    let b = n - s * (s + 1) / 2;
    (s - b, b)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CodedStructure {
    pub domain_size: usize,
    pub edges: BTreeSet<Edge>,
    /// `assignment[a]` is the element coded by index `a`.
    pub assignment: Vec<usize>,
    pub code: BTreeSet<u64>,
}

impl CodedStructure {
    pub fn contains(&self, n: u64) -> bool {
        self.code.contains(&n)
    }

    /// The relation on indices read back from the code.
    pub fn decode(&self) -> BTreeSet<Edge> {
        decode(&self.code)
    }

    /// Inverse assignment: the index coding element `e`.
    pub fn index_of(&self, element: usize) -> Option<usize> {
        self.assignment.iter().position(|&x| x == element)
    }
}

fn check_edges(m: usize, edges: &BTreeSet<Edge>) -> Result<(), CodingError> {
    match edges.iter().find(|&&(a, b)| a >= m || b >= m) {
        Some(&(a, b)) => Err(CodingError::EdgeOutOfRange(a, b, m)),
        None => Ok(()),
    }
}

fn code_for(edges: &BTreeSet<Edge>, inverse: &[usize]) -> BTreeSet<u64> {
    edges
        .iter()
        .map(|&(x, y)| pair(inverse[x] as u64, inverse[y] as u64))
        .collect()
}

fn invert(f: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; f.len()];
    for (a, &x) in f.iter().enumerate() {
        inv[x] = a;
    }
    inv
}

pub fn encode(m: usize, edges: &BTreeSet<Edge>, f: &[usize]) -> Result<CodedStructure, CodingError> {
    check_edges(m, edges)?;
    let mut seen = vec![false; m];
    if f.len() != m || !f.iter().all(|&x| x < m && !std::mem::replace(&mut seen[x], true)) {
        return Err(CodingError::NotAPermutation(m));
    }
    Ok(CodedStructure {
        domain_size: m,
        edges: edges.clone(),
        assignment: f.to_vec(),
        code: code_for(edges, &invert(f)),
    })
}

/// Unpairs every code element.
pub fn decode(code: &BTreeSet<u64>) -> BTreeSet<Edge> {
    code.iter()
        .map(|&n| {
            let (a, b) = unpair(n);
            (a as usize, b as usize)
        })
        .collect()
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = p.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = p.iter().rposition(|&x| x > p[i]).expect("pivot has a successor");
    p.swap(i, j);
    p[i + 1..].reverse();
    true
}

pub fn canonical_code(m: usize, edges: &BTreeSet<Edge>) -> Result<CodedStructure, CodingError> {
    canonical_code_bounded(m, edges, CANONICAL_BOUND)
}

pub fn canonical_code_bounded(
    m: usize,
    edges: &BTreeSet<Edge>,
    bound: usize,
) -> Result<CodedStructure, CodingError> {
    if m > bound {
        return Err(CodingError::TooLarge(m, bound));
    }
    check_edges(m, edges)?;
    let mut f: Vec<usize> = (0..m).collect();
    let mut best: Option<(Vec<u64>, Vec<usize>)> = None;
    loop {
        let code: Vec<u64> = code_for(edges, &invert(&f)).into_iter().collect();
        if best.as_ref().is_none_or(|(c, _)| code < *c) {
            best = Some((code, f.clone()));
        }
        if !next_permutation(&mut f) {
            break;
        }
    }
    let (code, f) = best.expect("at least one assignment");
    Ok(CodedStructure { domain_size: m, edges: edges.clone(), assignment: f, code: code.into_iter().collect() })
}

/// A finite relation is well-founded iff it has no cycle.
pub fn well_founded(m: usize, edges: &BTreeSet<Edge>) -> bool {
    // Kahn: repeatedly strip nodes without predecessors.
    let mut indegree = vec![0usize; m];
    let mut succ = vec![Vec::new(); m];
    for &(a, b) in edges {
        if a >= m || b >= m {
            continue;
        }
        indegree[b] += 1;
        succ[a].push(b);
    }
    let mut ready: Vec<usize> = (0..m).filter(|&v| indegree[v] == 0).collect();
    let mut removed = 0;
    while let Some(v) = ready.pop() {
        removed += 1;
        for &w in &succ[v] {
            indegree[w] -= 1;
            if indegree[w] == 0 {
                ready.push(w);
            }
        }
    }
    removed == m
}

/// Structure file: first line `m`, then one `a b` edge per line. Blank
/// lines and `#` comments are ignored.
pub fn parse_structure(text: &str) -> Result<(usize, BTreeSet<Edge>), CodingError> {
    let mut m = None;
    let mut edges = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let num = |s: &str| s.parse::<usize>().map_err(|_| CodingError::Format(i + 1, format!("bad number `{s}`")));
        match (m, fields.as_slice()) {
            (None, [n]) => m = Some(num(n)?),
            (None, _) => return Err(CodingError::Format(i + 1, "expected domain size".into())),
            (Some(_), [a, b]) => {
                edges.insert((num(a)?, num(b)?));
            }
            (Some(_), _) => return Err(CodingError::Format(i + 1, "expected `a b`".into())),
        }
    }
    let m = m.ok_or_else(|| CodingError::Format(0, "missing domain size".into()))?;
    check_edges(m, &edges)?;
    Ok((m, edges))
}

pub fn render_structure(m: usize, edges: &BTreeSet<Edge>) -> String {
    let mut out = format!("{m}\n");
    for (a, b) in edges {
        let _ = writeln!(out, "{a} {b}");
    }
    out
}

// --- well-order codes for ordinals below ω^ω -------------------------------

fn term_size(t: &Term) -> u64 {
    t.exp as u64 + t.coeff
}

/// The size used by the enumeration: `Σ (e + c)` over CNF terms.
pub fn ordinal_size(x: &Ordinal) -> u64 {
    x.terms().iter().map(term_size).sum()
}

fn gen_terms(left: u64, below_exp: Option<u32>, prefix: &mut Vec<Term>, out: &mut Vec<Ordinal>) {
    if left == 0 {
        out.push(Ordinal::from_terms(prefix.clone()).expect("generated canonically"));
        return;
    }
    let top = match below_exp {
        Some(0) => return,
        Some(b) => (b as u64 - 1).min(left - 1),
        None => left - 1,
    };
    for e in 0..=top {
        for c in 1..=(left - e) {
            prefix.push(Term { exp: e as u32, coeff: c });
            gen_terms(left - e - c, Some(e as u32), prefix, out);
            prefix.pop();
        }
    }
}

/// All ordinals of the given size, in increasing order.
pub fn ordinals_of_size(size: u64) -> Vec<Ordinal> {
    let mut out = Vec::new();
    gen_terms(size, None, &mut Vec::new(), &mut out);
    out.sort();
    out
}

/// The enumeration `ord`: ordinals below ω^ω listed by size, and within a
/// size in increasing order. `ord(0)=0, ord(1)=1, ord(2)=2, ord(3)=ω, …`.
pub fn ordinal_at(index: u64) -> Ordinal {
    let mut base = 0u64;
    for size in 0.. {
        let level = ordinals_of_size(size);
        let n = level.len() as u64;
        if index < base + n {
            return level[(index - base) as usize].clone();
        }
        base += n;
    }
    unreachable!()
}

/// Inverse of [`ordinal_at`].
pub fn ordinal_index(x: &Ordinal) -> u64 {
    let size = ordinal_size(x);
    let before: u64 = (0..size).map(|s| ordinals_of_size(s).len() as u64).sum();
    let level = ordinals_of_size(size);
    before + level.binary_search(x).expect("every ordinal of this size is listed") as u64
}

/// An oracle coding the order `α < β < δ` on enumeration indices; its
/// order type is `δ`.
pub fn ordinal_order_oracle(delta: Ordinal) -> OracleSpec {
    OracleSpec::OrdinalOrder(delta)
}

/// The strict order coded by `o`, restricted to indices below `bound`:
/// its field, listed in increasing order.
fn coded_chain(o: &OracleSpec, bound: u64) -> Vec<u64> {
    let rel = |a: u64, b: u64| o.query(pair(a, b)) == 1;
    let mut field: Vec<u64> = (0..bound)
        .filter(|&a| (0..bound).any(|b| rel(a, b) || rel(b, a)))
        .collect();
    field.sort_by(|&a, &b| {
        if a == b {
            std::cmp::Ordering::Equal
        } else if rel(a, b) {
            std::cmp::Ordering::Less
        } else {
            std::cmp::Ordering::Greater
        }
    });
    field
}

/// Meta-level search for an order-preserving embedding of the well-order
/// coded by `x` into the one coded by `y`, looking only at indices below
/// `bound`. Elements of `x` are matched in increasing order to the least
/// unused larger element of `y`; for well-orders this greedy matching
/// succeeds iff an embedding exists.
pub fn embedding(x: &OracleSpec, y: &OracleSpec, bound: u64) -> Option<Vec<(u64, u64)>> {
    let xs = coded_chain(x, bound);
    let ys = coded_chain(y, bound);
    let below = |a: u64, b: u64| y.query(pair(a, b)) == 1;
    let mut map = Vec::with_capacity(xs.len());
    let mut cursor = 0;
    for &a in &xs {
        let prev = map.last().map(|&(_, img)| img);
        let pos = ys[cursor..].iter().position(|&b| prev.is_none_or(|p| below(p, b)))?;
        map.push((a, ys[cursor + pos]));
        cursor += pos + 1;
    }
    Some(map)
}

pub fn embeds(x: &OracleSpec, y: &OracleSpec, bound: u64) -> bool {
    embedding(x, y, bound).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(e: &[Edge]) -> BTreeSet<Edge> {
        e.iter().copied().collect()
    }

    #[test]
    fn pairing_examples() {
        assert_eq!(pair(0, 0), 0);
        // diagonal order (0,0),(1,0),(0,1),(2,0),(1,1),(0,2),(3,0),(2,1),(1,2)
        let mut diag = Vec::new();
        for s in 0..5u64 {
            for b in 0..=s {
                diag.push((s - b, b));
            }
        }
        assert_eq!(diag[8], (1, 2));
        assert_eq!(pair(1, 2), 8);
        for (i, &(a, b)) in diag.iter().enumerate() {
            assert_eq!(pair(a, b), i as u64);
        }
        for a in 0..100 {
            for b in 0..100 {
                assert_eq!(unpair(pair(a, b)), (a, b));
            }
        }
    }

    #[test]
    fn encode_examples() {
        let e = set(&[(0, 1)]);
        assert_eq!(encode(2, &e, &[0, 1]).unwrap().code, [2].into());
        assert_eq!(encode(2, &e, &[1, 0]).unwrap().code, [1].into());
        assert!(encode(1, &BTreeSet::new(), &[0]).unwrap().code.is_empty());
        assert_eq!(encode(2, &set(&[(0, 2)]), &[0, 1]), Err(CodingError::EdgeOutOfRange(0, 2, 2)));
        assert_eq!(encode(2, &e, &[1, 1]), Err(CodingError::NotAPermutation(2)));
    }

    #[test]
    fn canonical_code_examples() {
        let c = canonical_code(2, &set(&[(0, 1)])).unwrap();
        assert_eq!(c.code, [1].into());
        assert_eq!(c.assignment, vec![1, 0]);
        assert!(canonical_code(0, &BTreeSet::new()).unwrap().code.is_empty());
        assert!(canonical_code(1, &BTreeSet::new()).unwrap().code.is_empty());
        assert_eq!(canonical_code(9, &BTreeSet::new()), Err(CodingError::TooLarge(9, 8)));
    }

    #[test]
    fn canonical_code_is_isomorphism_invariant() {
        // brute force over every relabelling of a few structures, m <= 5.
        let samples = [
            (3, set(&[(0, 1), (1, 2)])),
            (4, set(&[(0, 1), (0, 2), (3, 3), (2, 1)])),
            (5, set(&[(0, 1), (1, 2), (2, 0), (3, 4)])),
        ];
        for (m, edges) in samples {
            let want = canonical_code(m, &edges).unwrap().code;
            let mut perm: Vec<usize> = (0..m).collect();
            loop {
                let relabelled: BTreeSet<Edge> = edges.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
                assert_eq!(canonical_code(m, &relabelled).unwrap().code, want);
                if !next_permutation(&mut perm) {
                    break;
                }
            }
        }
    }

    #[test]
    fn decode_recovers_structure_via_assignment() {
        let edges = set(&[(0, 1), (1, 2), (0, 2)]);
        let c = encode(3, &edges, &[2, 0, 1]).unwrap();
        let back: BTreeSet<Edge> = c.decode().iter().map(|&(a, b)| (c.assignment[a], c.assignment[b])).collect();
        assert_eq!(back, edges);
        let canon = canonical_code(3, &edges).unwrap();
        let again = canonical_code(3, &canon.decode()).unwrap();
        assert_eq!(again.code, canon.code);
    }

    #[test]
    fn well_founded_examples() {
        assert!(well_founded(3, &set(&[(0, 1), (1, 2)])));
        assert!(!well_founded(1, &set(&[(0, 0)])));
        assert!(!well_founded(3, &set(&[(0, 1), (1, 2), (2, 0)])));
        assert!(well_founded(0, &BTreeSet::new()));
    }

    #[test]
    fn structure_file_round_trip() {
        let text = "3\n0 1\n# comment\n1 2\n";
        let (m, e) = parse_structure(text).unwrap();
        assert_eq!((m, e.clone()), (3, set(&[(0, 1), (1, 2)])));
        assert_eq!(parse_structure(&render_structure(m, &e)).unwrap(), (m, e));
        assert!(parse_structure("2\n0 5\n").is_err());
        assert!(parse_structure("x\n").is_err());
    }

    #[test]
    fn ordinal_enumeration() {
        let first: Vec<String> = (0..8).map(|i| ordinal_at(i).to_string()).collect();
        assert_eq!(first, ["0", "1", "2", "w^1*1", "3", "w^1*1+1", "w^1*2", "w^2*1"]);
        for i in 0..300 {
            assert_eq!(ordinal_index(&ordinal_at(i)), i);
        }
    }

    #[test]
    fn ordinal_order_oracle_examples() {
        let one = ordinal_order_oracle(Ordinal::finite(1));
        assert!((0..500).all(|n| one.query(n) == 0));
        let two = ordinal_order_oracle(Ordinal::finite(2));
        let related: Vec<u64> = (0..2000).filter(|&n| two.query(n) == 1).collect();
        assert_eq!(related, vec![pair(ordinal_index(&Ordinal::zero()), ordinal_index(&Ordinal::finite(1)))]);
    }

    #[test]
    fn embedding_matches_cnf_comparison() {
        let w = Ordinal::omega();
        let w2 = Ordinal::from_sum([(1, 2)]);
        let ow = ordinal_order_oracle(w.clone());
        let ow2 = ordinal_order_oracle(w2.clone());
        assert_eq!(embeds(&ow, &ow2, 200), w <= w2);
        assert_eq!(embeds(&ow2, &ow, 200), w2 <= w);
        assert!(embeds(&ow, &ow2, 200));
        assert!(!embeds(&ow2, &ow, 200));
    }
}
