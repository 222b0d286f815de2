//! First-order sentences over one binary relation, and their compilation
//! to programs that read a structure code from the oracle.
//!
//! Quantifiers range over the field of the relation (every element that
//! occurs in some edge), which is exactly what a program can see in a
//! code.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::isa::Reg;

use super::{Asm, Gadget, Label, IO};

pub const DEFAULT_MAX_DEPTH: usize = 3;

/// Variables are de Bruijn indices: 0 is bound by the innermost `Exists`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Edge(usize, usize),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Exists(Box<Formula>),
}

impl Formula {
    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(f: Formula, g: Formula) -> Formula {
        Formula::And(Box::new(f), Box::new(g))
    }

    pub fn or(f: Formula, g: Formula) -> Formula {
        Formula::not(Formula::and(Formula::not(f), Formula::not(g)))
    }

    pub fn exists(f: Formula) -> Formula {
        Formula::Exists(Box::new(f))
    }

    pub fn forall(f: Formula) -> Formula {
        Formula::not(Formula::exists(Formula::not(f)))
    }

    pub fn quantifier_depth(&self) -> usize {
        match self {
            Formula::Edge(..) => 0,
            Formula::Not(f) => f.quantifier_depth(),
            Formula::And(f, g) => f.quantifier_depth().max(g.quantifier_depth()),
            Formula::Exists(f) => 1 + f.quantifier_depth(),
        }
    }

    /// Number of enclosing binders needed for every variable to be bound.
    pub fn free_extent(&self) -> usize {
        match self {
            Formula::Edge(x, y) => 1 + x.max(y),
            Formula::Not(f) => f.free_extent(),
            Formula::And(f, g) => f.free_extent().max(g.free_extent()),
            Formula::Exists(f) => f.free_extent().saturating_sub(1),
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_extent() == 0
    }

    fn render(&self, depth: usize, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = |i: usize| depth.checked_sub(i + 1).map_or(format!("?{i}"), |d| format!("x{d}"));
        match self {
            Formula::Edge(x, y) => write!(f, "E({},{})", name(*x), name(*y)),
            Formula::Not(g) => {
                f.write_str("~")?;
                g.render(depth, f)
            }
            Formula::And(g, h) => {
                f.write_str("(")?;
                g.render(depth, f)?;
                f.write_str(" & ")?;
                h.render(depth, f)?;
                f.write_str(")")
            }
            Formula::Exists(g) => {
                write!(f, "(Ex{depth} ")?;
                g.render(depth + 1, f)?;
                f.write_str(")")
            }
        }
    }
}

/// Renders in the syntax accepted by [`parse_formula`], naming the
/// variable bound at depth `d` as `xd`.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.render(0, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("formula syntax at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("formula is not a sentence")]
    NotClosed,
    #[error("quantifier depth {depth} exceeds {max}")]
    TooDeep { depth: usize, max: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Sym(char),
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, FormulaError> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&(_, c)) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    s.push(c);
                    chars.next();
                } else {
                    break;
                }
            }
            out.push((pos, Tok::Ident(s)));
        } else if "()~&|,".contains(c) {
            out.push((pos, Tok::Sym(c)));
            chars.next();
        } else {
            return Err(FormulaError::Syntax {
                pos,
                msg: format!("unexpected `{c}`"),
            });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
    scope: Vec<String>,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(p, _)| *p)
    }

    fn err<T>(&self, msg: &str) -> Result<T, FormulaError> {
        Err(FormulaError::Syntax {
            pos: self.pos(),
            msg: msg.to_string(),
        })
    }

    fn expect(&mut self, c: char) -> Result<(), FormulaError> {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.at += 1;
            Ok(())
        } else {
            self.err(&format!("expected `{c}`"))
        }
    }

    fn or(&mut self) -> Result<Formula, FormulaError> {
        let mut f = self.and()?;
        while self.peek() == Some(&Tok::Sym('|')) {
            self.at += 1;
            f = Formula::or(f, self.and()?);
        }
        Ok(f)
    }

    fn and(&mut self) -> Result<Formula, FormulaError> {
        let mut f = self.unary()?;
        while self.peek() == Some(&Tok::Sym('&')) {
            self.at += 1;
            f = Formula::and(f, self.unary()?);
        }
        Ok(f)
    }

    fn var(&mut self) -> Result<String, FormulaError> {
        match self.peek() {
            Some(Tok::Ident(v)) if v.starts_with(|c: char| c.is_ascii_lowercase()) => {
                let v = v.clone();
                self.at += 1;
                Ok(v)
            }
            _ => self.err("expected a variable"),
        }
    }

    fn index(&self, v: &str) -> Result<usize, FormulaError> {
        self.scope
            .iter()
            .rev()
            .position(|s| s == v)
            .ok_or_else(|| FormulaError::Unbound(v.to_string()))
    }

    fn quantified(&mut self, universal: bool, var: String) -> Result<Formula, FormulaError> {
        self.scope.push(var);
        let body = self.or();
        self.scope.pop();
        let body = body?;
        Ok(if universal {
            Formula::forall(body)
        } else {
            Formula::exists(body)
        })
    }

    fn unary(&mut self) -> Result<Formula, FormulaError> {
        match self.peek().cloned() {
            Some(Tok::Sym('~')) => {
                self.at += 1;
                Ok(Formula::not(self.unary()?))
            }
            Some(Tok::Sym('(')) => {
                self.at += 1;
                let f = self.or()?;
                self.expect(')')?;
                Ok(f)
            }
            Some(Tok::Ident(id)) => {
                self.at += 1;
                let (head, rest) = id.split_at(1);
                let universal = match head {
                    "E" => false,
                    "A" => true,
                    _ => return self.err("expected `E(..)`, `E<var>` or `A<var>`"),
                };
                if !rest.is_empty() {
                    return self.quantified(universal, rest.to_string());
                }
                if !universal && self.peek() == Some(&Tok::Sym('(')) {
                    self.at += 1;
                    let x = self.var()?;
                    self.expect(',')?;
                    let y = self.var()?;
                    self.expect(')')?;
                    return Ok(Formula::Edge(self.index(&x)?, self.index(&y)?));
                }
                let v = self.var()?;
                self.quantified(universal, v)
            }
            _ => self.err("expected a formula"),
        }
    }
}

/// Parses `Ex`, `Ax` (quantifiers, scope as far right as possible), `~`,
/// `&`, `|` (weakest), parentheses and the atom `E(x,y)`. Variables start
/// with a lowercase letter. Only sentences are accepted.
pub fn parse_formula(text: &str) -> Result<Formula, FormulaError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
        end: text.len(),
        scope: Vec::new(),
    };
    let f = p.or()?;
    if p.at != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(f)
}

/// Brute-force truth of a sentence in `edges`, quantifiers ranging over
/// the field of the relation.
pub fn model_check(f: &Formula, edges: &BTreeSet<(usize, usize)>) -> bool {
    let field: BTreeSet<usize> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    fn eval(
        f: &Formula,
        env: &mut Vec<usize>,
        field: &BTreeSet<usize>,
        edges: &BTreeSet<(usize, usize)>,
    ) -> bool {
        match f {
            Formula::Edge(x, y) => {
                let d = env.len();
                edges.contains(&(env[d - 1 - x], env[d - 1 - y]))
            }
            Formula::Not(g) => !eval(g, env, field, edges),
            Formula::And(g, h) => eval(g, env, field, edges) && eval(h, env, field, edges),
            Formula::Exists(g) => field.iter().any(|&v| {
                env.push(v);
                let r = eval(g, env, field, edges);
                env.pop();
                r
            }),
        }
    }
    eval(f, &mut Vec::new(), &field, edges)
}

fn compile(a: &mut Asm, vars: &mut Vec<Reg>, f: &Formula, yes: Label, no: Label) {
    match f {
        Formula::Edge(x, y) => {
            let d = vars.len();
            let (rx, ry) = (vars[d - 1 - x], vars[d - 1 - y]);
            let q = a.temp();
            a.pair(rx, ry, q);
            a.oracle(q);
            a.jz(q, no);
            a.dec(q);
            a.jmp(yes);
            a.release(q);
        }
        Formula::Not(g) => compile(a, vars, g, no, yes),
        Formula::And(g, h) => {
            let mid = a.label();
            compile(a, vars, g, mid, no);
            a.bind(mid);
            compile(a, vars, h, yes, no);
        }
        Formula::Exists(g) => {
            let (n, ua, ub, x, q) = (a.temp(), a.temp(), a.temp(), a.temp(), a.temp());
            let found = a.label();
            a.flag_loop(Some(n), |a, next| {
                a.copy(n, q);
                a.oracle(q);
                a.jz(q, next);
                a.dec(q);
                a.unpair(n, ua, ub);
                vars.push(x);
                let second = a.label();
                let miss = a.label();
                a.copy(ua, x);
                compile(a, vars, g, found, second);
                a.bind(second);
                a.copy(ub, x);
                compile(a, vars, g, found, miss);
                a.bind(miss);
                vars.pop();
                a.clear(x);
                a.clear(ua);
                a.clear(ub);
            });
            a.jmp(no);
            a.bind(found);
            a.clear(x);
            a.clear(ua);
            a.clear(ub);
            a.clear(n);
            a.jmp(yes);
            for r in [q, x, ub, ua, n] {
                a.release(r);
            }
        }
    }
}

/// Compiles a sentence to a program that, on a structure-code oracle,
/// halts with output 1 if the structure satisfies it and 0 otherwise.
///
/// `Exists` scans the oracle in a flag loop; each member `pair(a, b)`
/// offers `a` and then `b` as witnesses. A witness ends the search at
/// once; exhaustion is concluded at the limit of the loop.
pub fn fo_compile(f: &Formula, max_depth: usize) -> Result<Gadget, FormulaError> {
    if !f.is_closed() {
        return Err(FormulaError::NotClosed);
    }
    let depth = f.quantifier_depth();
    if depth > max_depth {
        return Err(FormulaError::TooDeep {
            depth,
            max: max_depth,
        });
    }
    let mut a = Asm::with_flags();
    let yes = a.label();
    let no = a.label();
    compile(&mut a, &mut Vec::new(), f, yes, no);
    a.bind(yes);
    a.set(IO, 1);
    a.halt();
    a.bind(no);
    a.clear(IO);
    a.halt();
    Ok(Gadget::new("fo", f.to_string(), a.finish()))
}
