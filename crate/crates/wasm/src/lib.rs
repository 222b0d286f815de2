//! Browser bindings for the machine toolchain. Every export takes plain
//! strings and numbers and returns a JSON string; failures come back as
//! `{"error": "..."}`.

use itrm_core::gadgets::{
    constant_acceptor, decode_naturals, equality_recognizer, failing_flag_loop, flag_counter,
    fo_compile, join_splitter, nested_flag_counter, parse_formula, Gadget, DEFAULT_MAX_DEPTH,
};
use itrm_core::isa::parse;
use itrm_core::oracle::OracleSpec;
use itrm_core::ordinal::Ordinal;
use itrm_core::vm::{run, Budgets, RunConfig, RunOutcome};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn respond(result: Result<Value, String>) -> String {
    result.unwrap_or_else(|e| json!({ "error": e })).to_string()
}

/// Oracle text as accepted by the command line; `code(...)` takes its
/// structure from `structure` instead of a file.
fn oracle(text: &str, structure: &str) -> Result<OracleSpec, String> {
    OracleSpec::parse_with(text, &|_| Ok(structure.to_string())).map_err(|e| e.to_string())
}

/// Runs `source` and returns the outcome together with the trace.
#[wasm_bindgen]
pub fn run_program(
    source: &str,
    oracle_text: &str,
    structure: &str,
    input: u32,
    steps: u32,
    max_level: u32,
) -> String {
    respond((|| {
        let p = parse(source).map_err(|e| e.to_string())?;
        let o = oracle(oracle_text, structure)?;
        let cfg = RunConfig::new(Budgets {
            successor_steps: u64::from(steps),
            max_level: max_level as usize,
        });
        let (outcome, trace) = run(&p, &o, u64::from(input), &cfg).map_err(|e| e.to_string())?;
        let mut out = json!({
            "summary": outcome.to_string(),
            "trace": trace.records,
        });
        match &outcome {
            RunOutcome::Halted { output, time } => {
                out["status"] = json!("halted");
                out["output"] = json!(output);
                out["time"] = json!(time.to_string());
            }
            RunOutcome::NonHalting(cert) => {
                out["status"] = json!("non-halting");
                out["certificate"] = json!({
                    "level": cert.level,
                    "t1": cert.t1.to_string(),
                    "t2": cert.t2.to_string(),
                    "line": cert.config.line,
                    "registers": cert.config.registers,
                });
            }
            RunOutcome::Exhausted { .. } => out["status"] = json!("exhausted"),
        }
        Ok(out)
    })())
}

/// `op` is one of `add`, `compare` or `limit_jump`. `limit_jump` reads `a`
/// as the start of a period of length `b`.
#[wasm_bindgen]
pub fn ordinal_op(a: &str, op: &str, b: &str) -> String {
    respond((|| {
        let x: Ordinal = a.trim().parse().map_err(|e| format!("left operand: {e}"))?;
        let y: Ordinal = b.trim().parse().map_err(|e| format!("right operand: {e}"))?;
        let result = match op {
            "add" => x.add(&y).to_string(),
            "compare" => match x.cmp(&y) {
                std::cmp::Ordering::Less => "<",
                std::cmp::Ordering::Equal => "=",
                std::cmp::Ordering::Greater => ">",
            }
            .to_string(),
            "limit_jump" => Ordinal::limit_jump(&x, &y).map_err(|e| e.to_string())?.to_string(),
            _ => return Err(format!("unknown operation {op:?}")),
        };
        Ok(json!({ "result": result }))
    })())
}

/// Builds a gadget by name. `arg` is the formula for `fo`, the target
/// oracle for `eq-recognizer`, and a number for the parameterised loops.
#[wasm_bindgen]
pub fn generate_gadget(kind: &str, arg: &str) -> String {
    respond((|| {
        let number = || arg.trim().parse::<u64>().map_err(|_| format!("{kind} needs a number"));
        let g: Gadget = match kind {
            "flag-counter" => flag_counter(),
            "failing-loop" => failing_flag_loop(number()?),
            "nested-counter" => nested_flag_counter(number()? as usize),
            "accept" => constant_acceptor(),
            "even-reader" => join_splitter().0,
            "odd-reader" => join_splitter().1,
            "decode-naturals" => decode_naturals(number()? as usize),
            "eq-recognizer" => {
                let target = OracleSpec::parse(arg).map_err(|e| e.to_string())?;
                equality_recognizer(&target).map_err(|e| e.to_string())?
            }
            "fo" => {
                let f = parse_formula(arg).map_err(|e| e.to_string())?;
                fo_compile(&f, DEFAULT_MAX_DEPTH).map_err(|e| e.to_string())?
            }
            _ => return Err(format!("unknown gadget {kind:?}")),
        };
        Ok(json!({
            "name": g.name,
            "params": g.params,
            "lines": g.program.lines.len(),
            "source": g.to_source(),
        }))
    })())
}
