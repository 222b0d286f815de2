#![allow(dead_code)]

use std::path::PathBuf;

use itrm_core::isa::{Instruction, Program};
use rand::Rng;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../programs")
}

pub fn corpus(name: &str) -> PathBuf {
    corpus_dir().join(name)
}

pub fn p(path: &std::path::Path) -> String {
    path.display().to_string()
}

/// A random valid program over registers `0..regs`.
pub fn random_program(rng: &mut impl Rng, max_len: usize, regs: usize) -> Program {
    let len = rng.gen_range(1..=max_len);
    let lines = (0..len)
        .map(|_| {
            let r = rng.gen_range(0..regs);
            match rng.gen_range(0..6) {
                0 => Instruction::Inc(r),
                1 => Instruction::Dec(r),
                2 => Instruction::Copy {
                    src: r,
                    dst: rng.gen_range(0..regs),
                },
                3 => Instruction::JumpIfZero {
                    reg: r,
                    target: rng.gen_range(0..len),
                },
                4 => Instruction::OracleQuery(r),
                _ => Instruction::Halt,
            }
        })
        .collect();
    let mut prog = Program::new(lines);
    if rng.gen_bool(0.2) {
        prog.register_count += rng.gen_range(1..3);
    }
    prog
}

use itrm_core::oracle::OracleSpec;
use itrm_core::vm::Configuration;

/// Plain successor-step interpreter, written independently of the engine.
pub fn simulate(p: &Program, o: &OracleSpec, regs: Vec<u64>, n: usize) -> Vec<Configuration> {
    let (mut line, mut regs) = (0usize, regs);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(Configuration { line, registers: regs.clone() });
        match p.lines.get(line) {
            None | Some(Instruction::Halt) => break,
            Some(Instruction::Inc(r)) => {
                regs[*r] += 1;
                line += 1;
            }
            Some(Instruction::Dec(r)) => {
                regs[*r] = regs[*r].saturating_sub(1);
                line += 1;
            }
            Some(Instruction::Copy { src, dst }) => {
                regs[*dst] = regs[*src];
                line += 1;
            }
            Some(Instruction::JumpIfZero { reg, target }) => {
                line = if regs[*reg] == 0 { *target } else { line + 1 };
            }
            Some(Instruction::OracleQuery(r)) => {
                regs[*r] = o.query(regs[*r]);
                line += 1;
            }
        }
    }
    out
}
