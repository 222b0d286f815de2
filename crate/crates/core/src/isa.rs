//! Instruction set, assembler and canonical printer.
//!
//! Assembly syntax, one instruction per line:
//!
//! ```text
//! registers 4          # optional header
//! loop: INC r0
//!       JZ r1 loop     # target is a label or a 0-based line number
//!       COPY r0 r2     # src dst
//!       ORACLE r2
//!       DEC r0
//!       HALT
//! ```
//!
//! `#` starts a comment. A label may also stand alone on a line, in which
//! case it names the next instruction.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

pub type Reg = usize;
pub type Line = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Instruction {
    Inc(Reg),
    /// Decrement, flooring at 0.
    Dec(Reg),
    Copy { src: Reg, dst: Reg },
    JumpIfZero { reg: Reg, target: Line },
    /// Replaces the register content `c` with 1 if `c` is in the oracle,
    /// else 0.
    OracleQuery(Reg),
    Halt,
}

impl Instruction {
    pub fn registers(&self) -> impl Iterator<Item = Reg> {
        let (a, b) = match *self {
            Instruction::Inc(r)
            | Instruction::Dec(r)
            | Instruction::OracleQuery(r)
            | Instruction::JumpIfZero { reg: r, .. } => (Some(r), None),
            Instruction::Copy { src, dst } => (Some(src), Some(dst)),
            Instruction::Halt => (None, None),
        };
        a.into_iter().chain(b)
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::Inc(r) => write!(f, "INC r{r}"),
            Instruction::Dec(r) => write!(f, "DEC r{r}"),
            Instruction::Copy { src, dst } => write!(f, "COPY r{src} r{dst}"),
            Instruction::JumpIfZero { reg, target } => write!(f, "JZ r{reg} {target}"),
            Instruction::OracleQuery(r) => write!(f, "ORACLE r{r}"),
            Instruction::Halt => f.write_str("HALT"),
        }
    }
}

/// A program. Equality ignores `source_name`.
#[derive(Debug, Clone)]
pub struct Program {
    pub lines: Vec<Instruction>,
    pub register_count: usize,
    pub source_name: String,
}

impl PartialEq for Program {
    fn eq(&self, other: &Self) -> bool {
        self.lines == other.lines && self.register_count == other.register_count
    }
}

impl Eq for Program {}

impl Program {
    /// Builds a program with the inferred register count.
    pub fn new(lines: Vec<Instruction>) -> Self {
        let register_count = inferred_registers(&lines);
        Program { lines, register_count, source_name: String::new() }
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn get(&self, line: Line) -> Option<&Instruction> {
        self.lines.get(line)
    }
}

fn inferred_registers(lines: &[Instruction]) -> usize {
    lines.iter().flat_map(Instruction::registers).max().map_or(1, |m| m + 1)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: undefined label `{label}`")]
    UndefinedLabel { line: usize, col: usize, label: String },
    #[error("{line}:{col}: register r{reg} outside declared range 0..{declared}")]
    RegisterOutOfRange { line: usize, col: usize, reg: Reg, declared: usize },
    #[error("{line}:{col}: jump target {target} beyond program end ({len} lines)")]
    TargetOutOfRange { line: usize, col: usize, target: Line, len: usize },
    #[error("program has no instructions")]
    Empty,
}

struct Token<'a> {
    text: &'a str,
    col: usize,
}

fn tokens(s: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in s.char_indices() {
        if ch.is_whitespace() {
            if let Some(b) = start.take() {
                out.push(Token { text: &s[b..i], col: b + 1 });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(b) = start {
        out.push(Token { text: &s[b..], col: b + 1 });
    }
    out
}

enum Target<'a> {
    Resolved(Line),
    Label(&'a str),
}

struct Pending<'a> {
    instr: Instruction,
    label: Option<Target<'a>>,
    line: usize,
    col: usize,
    reg_cols: Vec<(Reg, usize)>,
}

fn is_label_name(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

/// Parses assembly source.
pub fn parse(source: &str) -> Result<Program, ParseError> {
    parse_named("", source)
}

pub fn parse_named(name: &str, source: &str) -> Result<Program, ParseError> {
    let mut labels: HashMap<&str, Line> = HashMap::new();
    let mut pending: Vec<Pending> = Vec::new();
    let mut declared: Option<usize> = None;

    for (idx, raw) in source.lines().enumerate() {
        let lineno = idx + 1;
        let text = raw.split('#').next().unwrap_or("");
        let mut toks = tokens(text);
        let syntax = |col: usize, msg: String| ParseError::Syntax { line: lineno, col, msg };

        while let Some(first) = toks.first() {
            let Some(name) = first.text.strip_suffix(':') else { break };
            if !is_label_name(name) {
                return Err(syntax(first.col, format!("invalid label `{name}`")));
            }
            if labels.insert(name, pending.len()).is_some() {
                return Err(syntax(first.col, format!("duplicate label `{name}`")));
            }
            toks.remove(0);
        }
        let Some(op) = toks.first() else { continue };
        let args = &toks[1..];
        let mnemonic = op.text.to_ascii_uppercase();

        if mnemonic == "REGISTERS" {
            if !pending.is_empty() || declared.is_some() {
                return Err(syntax(op.col, "`registers` header must come first".into()));
            }
            let [n] = args else {
                return Err(syntax(op.col, "`registers` takes one count".into()));
            };
            let count: usize = n
                .text
                .parse()
                .ok()
                .filter(|&c| c > 0)
                .ok_or_else(|| syntax(n.col, format!("invalid register count `{}`", n.text)))?;
            declared = Some(count);
            continue;
        }

        let reg = |t: &Token| -> Result<Reg, ParseError> {
            t.text
                .strip_prefix(['r', 'R'])
                .and_then(|d| d.parse().ok())
                .ok_or_else(|| syntax(t.col, format!("expected register, found `{}`", t.text)))
        };
        let arity = |want: usize| -> Result<(), ParseError> {
            if args.len() == want {
                Ok(())
            } else if args.len() < want {
                let what = if mnemonic == "JZ" && args.len() == 1 {
                    "missing jump target".to_string()
                } else {
                    format!("`{mnemonic}` expects {want} operand(s)")
                };
                Err(syntax(op.col, what))
            } else {
                Err(syntax(args[want].col, format!("unexpected operand `{}`", args[want].text)))
            }
        };

        let mut label = None;
        let mut reg_cols = Vec::new();
        let instr = match mnemonic.as_str() {
            "INC" | "DEC" | "ORACLE" => {
                arity(1)?;
                let r = reg(&args[0])?;
                reg_cols.push((r, args[0].col));
                match mnemonic.as_str() {
                    "INC" => Instruction::Inc(r),
                    "DEC" => Instruction::Dec(r),
                    _ => Instruction::OracleQuery(r),
                }
            }
            "COPY" => {
                arity(2)?;
                let (src, dst) = (reg(&args[0])?, reg(&args[1])?);
                reg_cols.push((src, args[0].col));
                reg_cols.push((dst, args[1].col));
                Instruction::Copy { src, dst }
            }
            "JZ" => {
                arity(2)?;
                let r = reg(&args[0])?;
                reg_cols.push((r, args[0].col));
                let t = &args[1];
                label = Some(if let Ok(n) = t.text.parse::<Line>() {
                    Target::Resolved(n)
                } else if is_label_name(t.text) {
                    Target::Label(t.text)
                } else {
                    return Err(syntax(t.col, format!("invalid jump target `{}`", t.text)));
                });
                Instruction::JumpIfZero { reg: r, target: 0 }
            }
            "HALT" => {
                arity(0)?;
                Instruction::Halt
            }
            _ => return Err(syntax(op.col, format!("unknown instruction `{}`", op.text))),
        };
        let col = args.get(1).map_or(op.col, |t| t.col);
        pending.push(Pending { instr, label, line: lineno, col, reg_cols });
    }

    if pending.is_empty() {
        return Err(ParseError::Empty);
    }
    let len = pending.len();
    let mut lines = Vec::with_capacity(len);
    for p in &pending {
        if let Some(limit) = declared {
            if let Some(&(reg, col)) = p.reg_cols.iter().find(|(r, _)| *r >= limit) {
                return Err(ParseError::RegisterOutOfRange { line: p.line, col, reg, declared: limit });
            }
        }
        let mut instr = p.instr;
        if let (Instruction::JumpIfZero { target, .. }, Some(t)) = (&mut instr, &p.label) {
            *target = match *t {
                Target::Resolved(n) => n,
                Target::Label(name) => *labels.get(name).ok_or_else(|| ParseError::UndefinedLabel {
                    line: p.line,
                    col: p.col,
                    label: name.to_string(),
                })?,
            };
            if *target >= len {
                return Err(ParseError::TargetOutOfRange { line: p.line, col: p.col, target: *target, len });
            }
        }
        lines.push(instr);
    }
    let register_count = declared.unwrap_or_else(|| inferred_registers(&lines));
    Ok(Program { lines, register_count, source_name: name.to_string() })
}

/// Canonical source: numeric jump targets, upper-case mnemonics, no
/// comments, and a `registers` header only when the count differs from the
/// inferred one. No trailing newline.
pub fn print(p: &Program) -> String {
    let mut out = Vec::with_capacity(p.lines.len() + 1);
    if p.register_count != inferred_registers(&p.lines) {
        out.push(format!("registers {}", p.register_count));
    }
    out.extend(p.lines.iter().map(Instruction::to_string));
    out.join("\n")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    EmptyProgram,
    NoRegisters,
    RegisterOutOfRange { line: Line, reg: Reg, register_count: usize },
    JumpOutOfRange { line: Line, target: Line, len: usize },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::EmptyProgram => f.write_str("program has no instructions"),
            Diagnostic::NoRegisters => f.write_str("register count must be positive"),
            Diagnostic::RegisterOutOfRange { line, reg, register_count } => {
                write!(f, "line {line}: register r{reg} >= register count {register_count}")
            }
            Diagnostic::JumpOutOfRange { line, target, len } => {
                write!(f, "line {line}: jump target {target} beyond last line {}", len.saturating_sub(1))
            }
        }
    }
}

/// All invariant violations of `p`, one diagnostic each.
pub fn validate(p: &Program) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if p.lines.is_empty() {
        out.push(Diagnostic::EmptyProgram);
    }
    if p.register_count == 0 {
        out.push(Diagnostic::NoRegisters);
    }
    for (line, instr) in p.lines.iter().enumerate() {
        for reg in instr.registers() {
            if reg >= p.register_count {
                out.push(Diagnostic::RegisterOutOfRange { line, reg, register_count: p.register_count });
            }
        }
        if let Instruction::JumpIfZero { target, .. } = *instr {
            if target >= p.lines.len() {
                out.push(Diagnostic::JumpOutOfRange { line, target, len: p.lines.len() });
            }
        }
    }
    out
}
