//! The `itrm` command line tool.
//!
//! Every command returns an [`Output`] instead of printing, so the binary
//! is a thin wrapper and the commands are testable in-process.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success; `run`: halted; `recognize`: PASS |
//! | 1 | `check`: diagnostics found; `recognize`: FAIL |
//! | 2 | usage, parse or I/O error |
//! | 10 | `run`: certified non-halting |
//! | 11 | `run`: step budget exhausted |
//! | 12 | `recognize`: INCONCLUSIVE |

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use itrm_core::coding::parse_structure;
use itrm_core::gadgets::{
    check_recognizer, constant_acceptor, decode_naturals, equality_recognizer, failing_flag_loop,
    flag_counter, fo_compile, join_recognizer, join_splitter, model_check, nested_flag_counter,
    parse_formula, Gadget, GadgetError, Verdict, DEFAULT_MAX_DEPTH,
};
use itrm_core::isa::{parse_named, print, validate, ParseError, Program};
use itrm_core::oracle::OracleSpec;
use itrm_core::vm::{run, Budgets, RunConfig, RunOutcome};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NON_HALTING: i32 = 10;
pub const EXIT_EXHAUSTED: i32 = 11;
pub const EXIT_INCONCLUSIVE: i32 = 12;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Output {
    fn ok(stdout: String) -> Self {
        Output {
            code: EXIT_OK,
            stdout,
            stderr: String::new(),
        }
    }

    fn error(msg: impl std::fmt::Display) -> Self {
        Output {
            code: EXIT_USAGE,
            stdout: String::new(),
            stderr: format!("error: {msg}\n"),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "itrm", version, about = "Infinite time register machine toolchain")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct BudgetArgs {
    /// Successor-step budget.
    #[arg(long, default_value_t = 100_000)]
    pub steps: u64,
    /// Highest lasso-detection level.
    #[arg(long = "max-level", default_value_t = 3)]
    pub max_level: usize,
}

impl BudgetArgs {
    fn config(&self) -> RunConfig {
        RunConfig::new(Budgets {
            successor_steps: self.steps,
            max_level: self.max_level,
        })
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a program and print its outcome.
    Run(RunRequest),
    /// Print a program in canonical form.
    Fmt { program: PathBuf },
    /// Validate a program.
    Check { program: PathBuf },
    /// Emit a generated program.
    Gen {
        #[command(subcommand)]
        gadget: GenCommand,
    },
    /// Check that a program recognizes one member of a family of oracles.
    Recognize {
        program: PathBuf,
        /// Oracle specs, in order.
        #[arg(long = "family", required = true, num_args = 1..)]
        family: Vec<String>,
        /// Index of the member that should be accepted.
        #[arg(long, default_value_t = 0)]
        target: usize,
        #[command(flatten)]
        budgets: BudgetArgs,
    },
    /// Evaluate a sentence on a structure file by brute force.
    Modelcheck { formula: String, structure: PathBuf },
}

#[derive(Debug, Clone, clap::Args)]
pub struct RunRequest {
    pub program: PathBuf,
    /// Oracle spec, e.g. `finite{1,5}` or `code(graph.txt)`.
    #[arg(long, default_value = "finite{}")]
    pub oracle: String,
    #[arg(long, default_value_t = 0)]
    pub input: u64,
    #[command(flatten)]
    pub budgets: BudgetArgs,
    /// Write the trace as JSON lines to this file.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum GenCommand {
    /// Flag loop counting its rounds; halts at ω + c.
    FlagCounter,
    /// Flag loop that fails in a given round.
    FailingLoop {
        #[arg(long, default_value_t = 3)]
        round: u64,
    },
    /// Nested flag loops; halts at a time of degree `depth`.
    NestedCounter {
        #[arg(long, default_value_t = 2)]
        depth: usize,
    },
    /// Halts with output 1.
    Accept,
    /// Recognizer for a finite or periodic oracle.
    EqRecognizer { target: String },
    /// Recognizer for the join of two finite or periodic oracles.
    JoinRecognizer { left: String, right: String },
    /// Outputs bit 2i of the oracle on input i.
    EvenReader,
    /// Outputs bit 2i+1 of the oracle on input i.
    OddReader,
    /// Decodes von Neumann naturals in a structure code.
    DecodeNaturals {
        #[arg(long, default_value_t = 3)]
        limit: usize,
    },
    /// Compiles a first-order sentence.
    Fo {
        formula: String,
        /// Also record the brute-force verdict on this structure file.
        #[arg(long)]
        structure: Option<PathBuf>,
        #[arg(long = "max-depth", default_value_t = DEFAULT_MAX_DEPTH)]
        max_depth: usize,
    },
}

/// Parses arguments (including the program name) and runs the command.
pub fn main_with<I, T>(args: I) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => dispatch(cli.command),
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                Output {
                    code: EXIT_USAGE,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Output::ok(text)
            }
        }
    }
}

pub fn dispatch(cmd: Command) -> Output {
    match cmd {
        Command::Run(req) => cmd_run(&req),
        Command::Fmt { program } => cmd_fmt(&program),
        Command::Check { program } => cmd_check(&program),
        Command::Gen { gadget } => cmd_gen(&gadget),
        Command::Recognize {
            program,
            family,
            target,
            budgets,
        } => cmd_recognize(&program, &family, target, &budgets),
        Command::Modelcheck { formula, structure } => cmd_modelcheck(&formula, &structure),
    }
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_program(path: &Path) -> Result<Program, String> {
    let src = read(path)?;
    parse_named(&path.display().to_string(), &src).map_err(|e| format!("{}:{e}", path.display()))
}

/// Parses an oracle spec; `code(...)` paths are read from disk.
pub fn parse_oracle(text: &str) -> Result<OracleSpec, String> {
    OracleSpec::parse_with(text, &|p| read(Path::new(p))).map_err(|e| e.to_string())
}

fn budget_check(b: &BudgetArgs) -> Result<(), String> {
    if b.steps == 0 {
        return Err("--steps must be positive".into());
    }
    Ok(())
}

pub fn cmd_run(req: &RunRequest) -> Output {
    let prepared = (|| {
        budget_check(&req.budgets)?;
        let p = load_program(&req.program)?;
        let o = parse_oracle(&req.oracle)?;
        Ok::<_, String>((p, o))
    })();
    let (p, o) = match prepared {
        Ok(x) => x,
        Err(e) => return Output::error(e),
    };
    let (outcome, trace) = match run(&p, &o, req.input, &req.budgets.config()) {
        Ok(r) => r,
        Err(e) => return Output::error(e),
    };
    if let Some(path) = &req.trace {
        if let Err(e) = fs::write(path, trace.to_jsonl()) {
            return Output::error(format!("{}: {e}", path.display()));
        }
    }
    let mut stdout = format!("{outcome}\n");
    let code = match &outcome {
        RunOutcome::Halted { .. } => EXIT_OK,
        RunOutcome::NonHalting(cert) => {
            stdout.push_str(&format!(
                "certificate: line={} registers={:?}\n",
                cert.config.line, cert.config.registers
            ));
            EXIT_NON_HALTING
        }
        RunOutcome::Exhausted { .. } => EXIT_EXHAUSTED,
    };
    Output {
        code,
        stdout,
        stderr: String::new(),
    }
}

pub fn cmd_fmt(path: &Path) -> Output {
    match load_program(path) {
        Ok(p) => Output::ok(print(&p) + "\n"),
        Err(e) => Output::error(e),
    }
}

pub fn cmd_check(path: &Path) -> Output {
    let src = match read(path) {
        Ok(s) => s,
        Err(e) => return Output::error(e),
    };
    let name = path.display().to_string();
    let diags: Vec<String> = match parse_named(&name, &src) {
        Ok(p) => validate(&p).iter().map(|d| format!("{name}: {d}")).collect(),
        Err(e @ (ParseError::TargetOutOfRange { .. } | ParseError::RegisterOutOfRange { .. })) => {
            vec![format!("{name}:{e}")]
        }
        Err(e) => return Output::error(format!("{name}:{e}")),
    };
    if diags.is_empty() {
        Output::ok(format!("{name}: ok\n"))
    } else {
        Output {
            code: EXIT_FAIL,
            stdout: diags.join("\n") + "\n",
            stderr: String::new(),
        }
    }
}

fn build_gadget(cmd: &GenCommand) -> Result<Gadget, String> {
    let oracle = |s: &str| parse_oracle(s);
    let g = match cmd {
        GenCommand::FlagCounter => flag_counter(),
        GenCommand::FailingLoop { round } => failing_flag_loop(*round),
        GenCommand::NestedCounter { depth } => nested_flag_counter(*depth),
        GenCommand::Accept => constant_acceptor(),
        GenCommand::EqRecognizer { target } => {
            equality_recognizer(&oracle(target)?).map_err(|e| e.to_string())?
        }
        GenCommand::JoinRecognizer { left, right } => {
            join_recognizer(&oracle(left)?, &oracle(right)?).map_err(|e| e.to_string())?
        }
        GenCommand::EvenReader => join_splitter().0,
        GenCommand::OddReader => join_splitter().1,
        GenCommand::DecodeNaturals { limit } => decode_naturals(*limit),
        GenCommand::Fo {
            formula,
            structure,
            max_depth,
        } => {
            let f = parse_formula(formula).map_err(|e| e.to_string())?;
            let mut g = fo_compile(&f, *max_depth)
                .map_err(|e| GadgetError::from(e).to_string())?;
            if let Some(path) = structure {
                let (_, edges) = parse_structure(&read(path)?).map_err(|e| e.to_string())?;
                let v = model_check(&f, &edges);
                g.params = format!("{} on {} is {v}", g.params, path.display());
            }
            g
        }
    };
    Ok(g)
}

pub fn cmd_gen(cmd: &GenCommand) -> Output {
    match build_gadget(cmd) {
        Ok(g) => Output::ok(g.to_source()),
        Err(e) => Output::error(e),
    }
}

pub fn cmd_recognize(program: &Path, family: &[String], target: usize, budgets: &BudgetArgs) -> Output {
    let prepared = (|| {
        budget_check(budgets)?;
        if target >= family.len() {
            return Err(format!("--target {target} outside family of {}", family.len()));
        }
        let p = load_program(program)?;
        let fam = family
            .iter()
            .map(|s| parse_oracle(s))
            .collect::<Result<Vec<_>, _>>()?;
        Ok::<_, String>((p, fam))
    })();
    let (p, fam) = match prepared {
        Ok(x) => x,
        Err(e) => return Output::error(e),
    };
    let report = match check_recognizer(&p, &fam, target, &budgets.config()) {
        Ok(r) => r,
        Err(e) => return Output::error(e),
    };
    let code = match report.verdict {
        Verdict::Pass => EXIT_OK,
        Verdict::Fail => EXIT_FAIL,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    };
    Output {
        code,
        stdout: format!("{report}\n"),
        stderr: String::new(),
    }
}

pub fn cmd_modelcheck(formula: &str, structure: &Path) -> Output {
    let prepared = (|| {
        let f = parse_formula(formula).map_err(|e| e.to_string())?;
        let (_, edges) = parse_structure(&read(structure)?).map_err(|e| e.to_string())?;
        Ok::<_, String>(model_check(&f, &edges))
    })();
    match prepared {
        Ok(v) => Output::ok(format!("{v}\n")),
        Err(e) => Output::error(e),
    }
}
