use crate::isa::Program;
use crate::oracle::{OracleSpec, PeriodicWord};

use super::{Asm, Gadget, GadgetError, Label, IO};

/// The bit sequence of a finite or periodic target.
pub fn target_word(target: &OracleSpec) -> Result<PeriodicWord, GadgetError> {
    match target {
        OracleSpec::Finite(members) => Ok(PeriodicWord::of_finite(members)),
        OracleSpec::Periodic(w) => Ok(w.clone()),
        other => Err(GadgetError::UnsupportedTarget(other.to_string())),
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// The word with `a` on the even and `b` on the odd positions.
pub fn join_word(a: &PeriodicWord, b: &PeriodicWord) -> PeriodicWord {
    let n = a.prefix().len().max(b.prefix().len());
    let (ca, cb) = (a.cycle().len(), b.cycle().len());
    let l = ca / gcd(ca, cb) * cb;
    let bit = |k: usize| {
        let i = (k / 2) as u64;
        (if k.is_multiple_of(2) { a.bit(i) } else { b.bit(i) }) as u8
    };
    let prefix = (0..2 * n).map(bit).collect();
    let cycle = (2 * n..2 * n + 2 * l).map(bit).collect();
    PeriodicWord::new(prefix, cycle).expect("cycle is nonempty")
}

/// Checks one oracle bit in `q` against `expected`, leaving `q` at 0.
fn expect_bit(a: &mut Asm, q: usize, expected: u8, reject: Label) {
    a.oracle(q);
    if expected == 1 {
        a.jz(q, reject);
        a.dec(q);
    } else {
        let ok = a.label();
        a.jz(q, ok);
        a.dec(q);
        a.jmp(reject);
        a.bind(ok);
    }
}

fn word_recognizer(w: &PeriodicWord) -> Program {
    let mut a = Asm::with_flags();
    let pos = a.reg();
    let q = a.reg();
    let reject = a.label();
    for (j, &bit) in w.prefix().iter().enumerate() {
        a.set(q, j as u64);
        expect_bit(&mut a, q, bit, reject);
    }
    a.set(pos, w.prefix().len() as u64);
    let cycle = w.cycle().to_vec();
    a.flag_loop(None, |a, _| {
        for &bit in &cycle {
            a.copy(pos, q);
            expect_bit(a, q, bit, reject);
            a.inc(pos);
        }
    });
    a.set(IO, 1);
    a.halt();
    a.bind(reject);
    a.clear(IO);
    a.halt();
    a.finish()
}

/// Halts with output 1 on oracle `target` and 0 on every other oracle.
///
/// Bits of the prefix are checked one by one; the cycle is checked in a
/// flag loop over its repetitions. A mismatch rejects at once, agreement
/// everywhere is only known at the limit.
pub fn equality_recognizer(target: &OracleSpec) -> Result<Gadget, GadgetError> {
    let w = target_word(target)?;
    Ok(Gadget::new("eq-recognizer", target.to_string(), word_recognizer(&w)))
}

/// Two programs reading the even and odd halves of a joined oracle: on
/// input `i` they output bit `2i`, respectively `2i+1`.
pub fn join_splitter() -> (Gadget, Gadget) {
    let reader = |odd: bool| {
        let mut a = Asm::new();
        let q = a.reg();
        a.copy(IO, q);
        a.add_to(q, IO);
        if odd {
            a.inc(q);
        }
        a.oracle(q);
        a.copy(q, IO);
        a.halt();
        a.finish()
    };
    (
        Gadget::new("even-reader", "", reader(false)),
        Gadget::new("odd-reader", "", reader(true)),
    )
}

/// Recognizer for `join(a, b)`: checks the even positions against `a` and
/// the odd positions against `b`.
pub fn join_recognizer(a: &OracleSpec, b: &OracleSpec) -> Result<Gadget, GadgetError> {
    let w = join_word(&target_word(a)?, &target_word(b)?);
    Ok(Gadget::new(
        "join-recognizer",
        format!("{a} {b}"),
        word_recognizer(&w),
    ))
}
