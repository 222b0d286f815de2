//! Program generators.
//!
//! All generators share one register convention:
//!
//! | register | role |
//! |----------|------|
//! | `r0` | always 0, so `JZ r0 L` is an unconditional jump |
//! | `r1` | input and output |
//! | `r2`, `r3` | the two flags of [`Asm::flag_loop`] |
//! | `r4`...  | allocated by [`Asm`] |
//!
//! A flag loop runs its body for i = 0, 1, 2, ... and leaves through the
//! bottom only at the first limit time after it started. Each iteration
//! ends by flashing the flags (flag 1 to 0 and back, flag 2 to 1 and back),
//! so after any finite number of rounds they differ while at the limit
//! both have liminf 0.

mod decode;
mod fo;
mod recognize;

pub use decode::decode_naturals;
pub use fo::{fo_compile, model_check, parse_formula, Formula, FormulaError, DEFAULT_MAX_DEPTH};
pub use recognize::{equality_recognizer, join_recognizer, join_splitter, join_word, target_word};

use std::fmt;

use thiserror::Error;

use crate::isa::{print, Instruction, Program, Reg};
use crate::oracle::OracleSpec;
use crate::vm::{run, RunConfig, RunOutcome, VmError};

pub const ZERO: Reg = 0;
pub const IO: Reg = 1;
pub const FLAG1: Reg = 2;
pub const FLAG2: Reg = 3;
pub const FIRST_FREE: Reg = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GadgetError {
    #[error("line {line} writes reserved register r{reg}")]
    ClobbersReserved { line: usize, reg: Reg },
    #[error("unsupported recognizer target `{0}` (finite or periodic only)")]
    UnsupportedTarget(String),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("unknown gadget `{0}`")]
    UnknownGadget(String),
}

/// A jump target in an [`Asm`] under construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Label(usize);

#[derive(Debug, Clone, Copy)]
enum Op {
    Plain(Instruction),
    Jz(Reg, Label),
}

/// Assembler with symbolic labels and a register allocator.
///
/// Helper macros use temporaries from a free list and always return them
/// cleared to 0, so every loop head sees the same scratch state.
#[derive(Debug, Clone, Default)]
pub struct Asm {
    ops: Vec<Op>,
    labels: Vec<Option<usize>>,
    next_reg: Reg,
    free: Vec<Reg>,
}

impl Asm {
    pub fn new() -> Self {
        Asm {
            next_reg: FIRST_FREE,
            ..Asm::default()
        }
    }

    /// Starts with the flag prologue `INC r2`, needed before any flag loop.
    pub fn with_flags() -> Self {
        let mut a = Asm::new();
        a.inc(FLAG1);
        a
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn label(&mut self) -> Label {
        self.labels.push(None);
        Label(self.labels.len() - 1)
    }

    pub fn bind(&mut self, l: Label) {
        assert!(self.labels[l.0].is_none(), "label bound twice");
        self.labels[l.0] = Some(self.ops.len());
    }

    pub fn here(&mut self) -> Label {
        let l = self.label();
        self.bind(l);
        l
    }

    /// A permanently allocated register.
    pub fn reg(&mut self) -> Reg {
        let r = self.next_reg;
        self.next_reg += 1;
        r
    }

    /// A temporary, assumed to hold 0; hand it back with [`Asm::release`]
    /// once it is 0 again.
    pub fn temp(&mut self) -> Reg {
        self.free.pop().unwrap_or_else(|| self.reg())
    }

    pub fn release(&mut self, r: Reg) {
        self.free.push(r);
    }

    fn op(&mut self, i: Instruction) {
        self.ops.push(Op::Plain(i));
    }

    pub fn inc(&mut self, r: Reg) {
        self.op(Instruction::Inc(r));
    }

    pub fn dec(&mut self, r: Reg) {
        self.op(Instruction::Dec(r));
    }

    pub fn copy(&mut self, src: Reg, dst: Reg) {
        self.op(Instruction::Copy { src, dst });
    }

    pub fn oracle(&mut self, r: Reg) {
        self.op(Instruction::OracleQuery(r));
    }

    pub fn halt(&mut self) {
        self.op(Instruction::Halt);
    }

    pub fn jz(&mut self, r: Reg, l: Label) {
        self.ops.push(Op::Jz(r, l));
    }

    pub fn jmp(&mut self, l: Label) {
        self.jz(ZERO, l);
    }

    /// `r := 0`.
    pub fn clear(&mut self, r: Reg) {
        let top = self.here();
        let done = self.label();
        self.jz(r, done);
        self.dec(r);
        self.jmp(top);
        self.bind(done);
    }

    /// `r := c`.
    pub fn set(&mut self, r: Reg, c: u64) {
        self.clear(r);
        for _ in 0..c {
            self.inc(r);
        }
    }

    /// `dst := dst + src`, with `src` preserved.
    pub fn add_to(&mut self, dst: Reg, src: Reg) {
        let t = self.temp();
        self.copy(src, t);
        let top = self.here();
        let done = self.label();
        self.jz(t, done);
        self.dec(t);
        self.inc(dst);
        self.jmp(top);
        self.bind(done);
        self.release(t);
    }

    /// Jumps to `eq` if `x = y`, otherwise to `ne`.
    pub fn jump_if_eq(&mut self, x: Reg, y: Reg, eq: Label, ne: Label) {
        let (tx, ty) = (self.temp(), self.temp());
        self.copy(x, tx);
        self.copy(y, ty);
        let top = self.here();
        let x_done = self.label();
        let differ = self.label();
        let same = self.label();
        self.jz(tx, x_done);
        self.jz(ty, differ);
        self.dec(tx);
        self.dec(ty);
        self.jmp(top);
        self.bind(x_done);
        self.jz(ty, same);
        self.bind(differ);
        self.clear(tx);
        self.clear(ty);
        self.jmp(ne);
        self.bind(same);
        self.jmp(eq);
        self.release(ty);
        self.release(tx);
    }

    /// Jumps to `eq` if `x = c`, otherwise to `ne`.
    pub fn jump_if_const(&mut self, x: Reg, c: u64, eq: Label, ne: Label) {
        let t = self.temp();
        self.copy(x, t);
        let differ = self.label();
        for _ in 0..c {
            self.jz(t, differ);
            self.dec(t);
        }
        self.jz(t, eq);
        self.bind(differ);
        self.clear(t);
        self.jmp(ne);
        self.release(t);
    }

    /// Jumps to `yes` if `x < y`, otherwise to `no`.
    pub fn jump_if_less(&mut self, x: Reg, y: Reg, yes: Label, no: Label) {
        let (tx, ty) = (self.temp(), self.temp());
        self.copy(x, tx);
        self.copy(y, ty);
        let top = self.here();
        let ge = self.label();
        let lt = self.label();
        self.jz(ty, ge);
        self.jz(tx, lt);
        self.dec(tx);
        self.dec(ty);
        self.jmp(top);
        self.bind(lt);
        self.clear(ty);
        self.jmp(yes);
        self.bind(ge);
        self.clear(tx);
        self.jmp(no);
        self.release(ty);
        self.release(tx);
    }

    /// `m := max(m, x)`.
    pub fn max_into(&mut self, m: Reg, x: Reg) {
        let bigger = self.label();
        let done = self.label();
        self.jump_if_less(m, x, bigger, done);
        self.bind(bigger);
        self.copy(x, m);
        self.bind(done);
    }

    /// `out := pair(x, y)`, Cantor pairing. `out` must differ from `x`, `y`.
    pub fn pair(&mut self, x: Reg, y: Reg, out: Reg) {
        let s = self.temp();
        self.clear(out);
        self.copy(x, s);
        self.add_to(s, y);
        // out += s + (s-1) + ... + 1
        let top = self.here();
        let done = self.label();
        self.jz(s, done);
        self.add_to(out, s);
        self.dec(s);
        self.jmp(top);
        self.bind(done);
        self.add_to(out, y);
        self.release(s);
    }

    /// `(a, b) := unpair(n)` by walking the diagonals. `a`, `b` distinct
    /// from `n`.
    pub fn unpair(&mut self, n: Reg, a: Reg, b: Reg) {
        let cnt = self.temp();
        self.clear(a);
        self.clear(b);
        self.copy(n, cnt);
        let top = self.here();
        let done = self.label();
        let wrap = self.label();
        self.jz(cnt, done);
        self.dec(cnt);
        self.jz(a, wrap);
        self.dec(a);
        self.inc(b);
        self.jmp(top);
        self.bind(wrap);
        self.copy(b, a);
        self.inc(a);
        self.clear(b);
        self.jmp(top);
        self.bind(done);
        self.release(cnt);
    }

    /// Emits a flag loop. `body` receives the label that ends the current
    /// round; falling off the body does the same. The optional `counter` is
    /// incremented at the end of every round and drifts to 0 at the limit.
    /// Control leaves below the loop at the limit, with the flags reset.
    pub fn flag_loop(&mut self, counter: Option<Reg>, body: impl FnOnce(&mut Asm, Label)) {
        let head = self.here();
        let f1_zero = self.label();
        let round = self.label();
        let next = self.label();
        let exit = self.label();
        self.jz(FLAG1, f1_zero);
        self.jz(FLAG2, round);
        self.jmp(exit);
        self.bind(f1_zero);
        self.jz(FLAG2, exit);
        self.jmp(round);
        self.bind(round);
        body(self, next);
        self.bind(next);
        if let Some(c) = counter {
            self.inc(c);
        }
        self.dec(FLAG1);
        self.inc(FLAG1);
        self.inc(FLAG2);
        self.dec(FLAG2);
        self.jmp(head);
        self.bind(exit);
        self.inc(FLAG1);
    }

    /// Copies a program fragment in place. Its jumps to `frag.len()` and
    /// running off its end continue at `after`.
    pub fn embed(&mut self, frag: &Program, after: Label) {
        let lines: Vec<Label> = (0..frag.len()).map(|_| self.label()).collect();
        for (i, instr) in frag.lines.iter().enumerate() {
            self.bind(lines[i]);
            match *instr {
                Instruction::JumpIfZero { reg, target } => {
                    let l = lines.get(target).copied().unwrap_or(after);
                    self.jz(reg, l);
                }
                other => self.op(other),
            }
        }
        self.jmp(after);
    }

    /// Resolves labels. Panics on an unbound label, which is a generator bug.
    pub fn finish(self) -> Program {
        let lines = self
            .ops
            .iter()
            .map(|op| match *op {
                Op::Plain(i) => i,
                Op::Jz(reg, l) => Instruction::JumpIfZero {
                    reg,
                    target: self.labels[l.0].expect("unbound label"),
                },
            })
            .collect();
        Program::new(lines)
    }
}

/// A generated program with the generator name and parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gadget {
    pub name: String,
    pub params: String,
    pub program: Program,
}

impl Gadget {
    pub fn new(name: &str, params: impl Into<String>, mut program: Program) -> Self {
        program.source_name = name.to_string();
        Gadget {
            name: name.to_string(),
            params: params.into(),
            program,
        }
    }

    /// Assembly text with a comment header.
    pub fn to_source(&self) -> String {
        let mut out = format!("# gadget: {}\n", self.name);
        if !self.params.is_empty() {
            out.push_str(&format!("# params: {}\n", self.params));
        }
        out.push_str(&print(&self.program));
        out.push('\n');
        out
    }
}

fn check_reserved(frag: &Program) -> Result<(), GadgetError> {
    for (line, instr) in frag.lines.iter().enumerate() {
        let written = match *instr {
            Instruction::Inc(r) | Instruction::Dec(r) | Instruction::OracleQuery(r) => Some(r),
            Instruction::Copy { dst, .. } => Some(dst),
            _ => None,
        };
        if let Some(reg) = written.filter(|&r| r == ZERO || r == FLAG1 || r == FLAG2) {
            return Err(GadgetError::ClobbersReserved { line, reg });
        }
    }
    Ok(())
}

/// Wraps fragment `body` in a flag loop followed by `on_all_passed`.
///
/// Inside `body`, a jump to `body.len()` (or running off the end) starts
/// the next round and `HALT` stops the program. After the limit,
/// `on_all_passed` runs; running off its end halts.
pub fn flag_limit_loop(body: &Program, on_all_passed: &Program) -> Result<Program, GadgetError> {
    check_reserved(body)?;
    check_reserved(on_all_passed)?;
    let mut a = Asm::with_flags();
    a.flag_loop(None, |a, next| a.embed(body, next));
    let end = a.label();
    a.embed(on_all_passed, end);
    a.bind(end);
    a.halt();
    Ok(a.finish())
}

/// Counts rounds of a flag loop and halts just after its limit, at time
/// ω + c. Output is the input.
pub fn flag_counter() -> Gadget {
    let mut a = Asm::with_flags();
    let i = a.reg();
    a.flag_loop(Some(i), |_, _| {});
    a.halt();
    Gadget::new("flag-counter", "", a.finish())
}

/// A flag loop whose body fails in round `round`: halts there with output
/// 0. Would output 1 at the limit otherwise.
pub fn failing_flag_loop(round: u64) -> Gadget {
    let mut a = Asm::with_flags();
    let i = a.reg();
    let fail = a.label();
    a.flag_loop(Some(i), |a, next| a.jump_if_const(i, round, fail, next));
    a.set(IO, 1);
    a.halt();
    a.bind(fail);
    a.clear(IO);
    a.halt();
    Gadget::new("failing-loop", format!("round={round}"), a.finish())
}

/// Flag loops nested `depth` deep, halting just after the outermost limit,
/// at a time of degree `depth`.
pub fn nested_flag_counter(depth: usize) -> Gadget {
    fn nest(a: &mut Asm, depth: usize) {
        if depth == 0 {
            return;
        }
        let i = a.reg();
        a.flag_loop(Some(i), |a, _| nest(a, depth - 1));
    }
    let mut a = Asm::with_flags();
    nest(&mut a, depth.max(1));
    a.halt();
    Gadget::new("nested-counter", format!("depth={}", depth.max(1)), a.finish())
}

/// Halts immediately with output 1.
pub fn constant_acceptor() -> Gadget {
    let mut a = Asm::new();
    a.set(IO, 1);
    a.halt();
    Gadget::new("accept", "", a.finish())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Safety {
    Safe,
    Unsafe { witness: u64 },
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SafetyReport {
    pub verdict: Safety,
    pub outcomes: Vec<RunOutcome>,
}

/// Whether `p` halts on every input below `inputs`. A definite non-halting
/// run wins over an exhausted one; an exhausted run alone gives `Unknown`.
pub fn safety_check(
    p: &Program,
    o: &OracleSpec,
    inputs: u64,
    cfg: &RunConfig,
) -> Result<SafetyReport, VmError> {
    let outcomes = (0..inputs)
        .map(|i| run(p, o, i, cfg).map(|(r, _)| r))
        .collect::<Result<Vec<_>, _>>()?;
    let witness = outcomes
        .iter()
        .position(|r| matches!(r, RunOutcome::NonHalting(_)));
    let verdict = match witness {
        Some(w) => Safety::Unsafe { witness: w as u64 },
        None if outcomes.iter().any(|r| matches!(r, RunOutcome::Exhausted { .. })) => {
            Safety::Unknown
        }
        None => Safety::Safe,
    };
    Ok(SafetyReport { verdict, outcomes })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecognizerReport {
    pub outcomes: Vec<RunOutcome>,
    pub target: usize,
    pub verdict: Verdict,
}

impl fmt::Display for RecognizerReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, o) in self.outcomes.iter().enumerate() {
            let mark = if i == self.target { " (target)" } else { "" };
            writeln!(f, "member {i}{mark}: {o}")?;
        }
        write!(f, "{}", self.verdict)
    }
}

/// Runs `p` (input 0) against every member of `family`. PASS iff the
/// target gives output 1 and every other member output 0.
pub fn check_recognizer(
    p: &Program,
    family: &[OracleSpec],
    target: usize,
    cfg: &RunConfig,
) -> Result<RecognizerReport, VmError> {
    let outcomes = family
        .iter()
        .map(|o| run(p, o, 0, cfg).map(|(r, _)| r))
        .collect::<Result<Vec<_>, _>>()?;
    let verdict = if outcomes
        .iter()
        .any(|r| matches!(r, RunOutcome::Exhausted { .. }))
    {
        Verdict::Inconclusive
    } else {
        let ok = outcomes.iter().enumerate().all(|(i, r)| {
            let want = u64::from(i == target);
            matches!(r, RunOutcome::Halted { output, .. } if *output == want)
        });
        if ok && target < family.len() {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    };
    Ok(RecognizerReport {
        outcomes,
        target,
        verdict,
    })
}
