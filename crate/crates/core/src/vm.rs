//! Transfinite execution.
//!
//! Successor steps follow the register machine semantics. At limit times
//! every register takes the liminf of its earlier values (0 if that is
//! infinite) and the active line takes the liminf of earlier lines.
//!
//! The engine never simulates ω steps literally. It looks for *lassos*
//! (two stages whose configurations force the future to repeat) and jumps
//! the clock to the supremum of the repetition:
//!
//! * level 0 compares successor stages inside one block of finite length;
//! * level k ≥ 1 compares the configurations found at consecutive level
//!   k-1 limits.
//!
//! A lasso is *exact* when both configurations are equal, or *drift* when
//! some registers grow by a fixed amount per period without influencing
//! control flow.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::isa::{validate, Diagnostic, Instruction, Line, Program, Reg};
use crate::oracle::OracleSpec;
use crate::ordinal::Ordinal;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Configuration {
    pub line: Line,
    pub registers: Vec<u64>,
}

impl Configuration {
    /// Line 0, `r1 = input`, every other register 0. At least two
    /// registers are allocated so that `r1` always exists.
    pub fn initial(register_count: usize, input: u64) -> Self {
        let mut registers = vec![0; register_count.max(2)];
        registers[1] = input;
        Configuration { line: 0, registers }
    }

    /// Halted when the line is past the end or holds `HALT`.
    pub fn is_halted(&self, p: &Program) -> bool {
        !matches!(p.get(self.line), Some(i) if *i != Instruction::Halt)
    }

    fn dominated_by(&self, other: &Configuration) -> bool {
        self.registers
            .iter()
            .zip(&other.registers)
            .all(|(a, b)| a <= b)
    }
}

/// Componentwise minima over an interval of stages.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct MinProfile {
    pub min_registers: Vec<u64>,
    pub min_line: Line,
}

impl MinProfile {
    pub fn of(c: &Configuration) -> Self {
        MinProfile {
            min_registers: c.registers.clone(),
            min_line: c.line,
        }
    }

    pub fn over(span: &[Configuration]) -> Option<Self> {
        let (first, rest) = span.split_first()?;
        let mut m = MinProfile::of(first);
        for c in rest {
            m.absorb(c);
        }
        Some(m)
    }

    pub fn absorb(&mut self, c: &Configuration) {
        self.min_line = self.min_line.min(c.line);
        for (m, &v) in self.min_registers.iter_mut().zip(&c.registers) {
            *m = (*m).min(v);
        }
    }

    pub fn merge(&mut self, other: &MinProfile) {
        self.min_line = self.min_line.min(other.min_line);
        for (m, &v) in self.min_registers.iter_mut().zip(&other.min_registers) {
            *m = (*m).min(v);
        }
    }

    /// The configuration made of the minima.
    pub fn to_config(&self) -> Configuration {
        Configuration {
            line: self.min_line,
            registers: self.min_registers.clone(),
        }
    }
}

/// A configuration recorded at a limit stage.
///
/// `since` and `touched` describe the stages from this snapshot up to the
/// next snapshot of the same level: the minima, and which registers were
/// copied, queried or reset by a drift acceleration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Snapshot {
    pub at: Ordinal,
    pub config: Configuration,
    pub since: MinProfile,
    pub touched: Vec<bool>,
}

/// One successor step. A halted configuration is returned unchanged.
pub fn step(p: &Program, c: &Configuration, o: &OracleSpec) -> Configuration {
    let mut next = c.clone();
    let Some(&instr) = p.get(c.line) else {
        return next;
    };
    match instr {
        Instruction::Halt => return next,
        Instruction::Inc(r) => next.registers[r] = next.registers[r].saturating_add(1),
        Instruction::Dec(r) => next.registers[r] = next.registers[r].saturating_sub(1),
        Instruction::Copy { src, dst } => next.registers[dst] = c.registers[src],
        Instruction::JumpIfZero { reg, target } => {
            if c.registers[reg] == 0 {
                next.line = target;
                return next;
            }
        }
        Instruction::OracleQuery(r) => next.registers[r] = o.query(c.registers[r]),
    }
    next.line += 1;
    next
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LassoKind {
    Exact,
    Drift {
        /// Per-period growth, `end - start`.
        delta: Vec<u64>,
        /// Per register, the minimum over the stages of the period at
        /// which its value repeats exactly; `None` if it grows at every
        /// stage.
        stable_min: Vec<Option<u64>>,
        /// Registers whose value was shifted somewhere in the period.
        perturbed: Vec<bool>,
    },
}

/// A lasso between history positions `start < end`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lasso {
    pub start: usize,
    pub end: usize,
    pub kind: LassoKind,
}

/// Configuration at the supremum of the repetitions of `span`, one full
/// period `[t1, t2)` of a level-0 lasso.
pub fn limit_config(span: &[Configuration], kind: &LassoKind) -> Configuration {
    let profile = MinProfile::over(span).expect("lasso span is never empty");
    match kind {
        LassoKind::Exact => profile.to_config(),
        LassoKind::Drift { stable_min, .. } => Configuration {
            line: profile.min_line,
            registers: stable_min.iter().map(|m| m.unwrap_or(0)).collect(),
        },
    }
}

/// Checks whether `end` repeats `span[0]` up to a drift, by replaying the
/// span with a symbolic shift per register.
///
/// Replaying the period from `span[0] + k·delta` must visit the same
/// lines with every register offset by its current shift. A taken jump
/// or a floored decrement on a shifted register breaks that, and so does
/// an oracle query unless the oracle is constant along the progression.
pub fn analyze_drift(
    p: &Program,
    o: &OracleSpec,
    span: &[Configuration],
    end: &Configuration,
) -> Option<LassoKind> {
    let first = span.first()?;
    if first.line != end.line || !first.dominated_by(end) || first == end {
        return None;
    }
    let delta: Vec<u64> = end
        .registers
        .iter()
        .zip(&first.registers)
        .map(|(b, a)| b - a)
        .collect();
    let n = delta.len();
    let mut span_min = first.registers.clone();
    let mut shift = delta.clone();
    let mut stable_min: Vec<Option<u64>> = vec![None; n];
    let mut perturbed: Vec<bool> = delta.iter().map(|&d| d > 0).collect();
    for c in span {
        for r in 0..n {
            span_min[r] = span_min[r].min(c.registers[r]);
            if shift[r] == 0 {
                let v = c.registers[r];
                stable_min[r] = Some(stable_min[r].map_or(v, |m| m.min(v)));
            }
        }
        match *p.get(c.line)? {
            Instruction::Inc(_) => {}
            Instruction::Dec(r) => {
                if c.registers[r] == 0 && shift[r] > 0 {
                    return None;
                }
            }
            Instruction::Copy { src, dst } => {
                shift[dst] = shift[src];
                perturbed[dst] |= shift[dst] > 0;
            }
            Instruction::JumpIfZero { reg, .. } => {
                if c.registers[reg] == 0 && shift[reg] > 0 {
                    return None;
                }
            }
            Instruction::OracleQuery(r) => {
                if shift[r] > 0 {
                    o.stable_along(c.registers[r], shift[r])?;
                }
                shift[r] = 0;
            }
            Instruction::Halt => return None,
        }
    }
    if shift != delta {
        return None;
    }
    if (0..n).any(|r| delta[r] > 0 && span_min[r] == 0) {
        return None;
    }
    Some(LassoKind::Drift {
        delta,
        stable_min,
        perturbed,
    })
}

/// Finds the lasso with the earliest end in a level-0 history of
/// consecutive successor stages. For that end an exact match is preferred,
/// then the most recent drift partner.
pub fn detect_lasso(p: &Program, o: &OracleSpec, history: &[Configuration]) -> Option<Lasso> {
    for end in 1..history.len() {
        let c = &history[end];
        if let Some(start) = history[..end].iter().position(|h| h == c) {
            return Some(Lasso {
                start,
                end,
                kind: LassoKind::Exact,
            });
        }
        for start in (0..end).rev() {
            if let Some(kind) = analyze_drift(p, o, &history[start..end], c) {
                return Some(Lasso { start, end, kind });
            }
        }
    }
    None
}

/// A lasso among snapshots of one level, ending at the last snapshot.
/// Returns the start index, kind and the limit configuration.
pub fn detect_snapshot_lasso(snaps: &[Snapshot]) -> Option<(usize, LassoKind, Configuration)> {
    let (last, earlier) = snaps.split_last()?;
    let c = &last.config;
    let segment = |start: usize| {
        let mut m = earlier[start].since.clone();
        let mut touched = earlier[start].touched.clone();
        for s in &earlier[start + 1..] {
            m.merge(&s.since);
            for (t, &u) in touched.iter_mut().zip(&s.touched) {
                *t |= u;
            }
        }
        (m, touched)
    };
    if let Some(start) = earlier.iter().position(|s| &s.config == c) {
        let (m, _) = segment(start);
        return Some((start, LassoKind::Exact, m.to_config()));
    }
    for start in (0..earlier.len()).rev() {
        let first = &earlier[start].config;
        if first.line != c.line || !first.dominated_by(c) {
            continue;
        }
        let (m, touched) = segment(start);
        let delta: Vec<u64> = c
            .registers
            .iter()
            .zip(&first.registers)
            .map(|(b, a)| b - a)
            .collect();
        let inert = delta
            .iter()
            .enumerate()
            .all(|(r, &d)| d == 0 || (m.min_registers[r] >= 1 && !touched[r]));
        if !inert {
            continue;
        }
        let stable_min: Vec<Option<u64>> = delta
            .iter()
            .zip(&m.min_registers)
            .map(|(&d, &v)| (d == 0).then_some(v))
            .collect();
        let limit = Configuration {
            line: m.min_line,
            registers: stable_min.iter().map(|v| v.unwrap_or(0)).collect(),
        };
        let perturbed = delta.iter().map(|&d| d > 0).collect();
        let kind = LassoKind::Drift {
            delta,
            stable_min,
            perturbed,
        };
        return Some((start, kind, limit));
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budgets {
    pub successor_steps: u64,
    pub max_level: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            successor_steps: 100_000,
            max_level: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunConfig {
    pub budgets: Budgets,
    /// Snapshots retained per level.
    pub history_window: usize,
    /// Successor-step trace records retained; limit stages are always kept.
    pub trace_cap: usize,
    /// Earlier visits to the same line tried as drift partners.
    pub drift_candidates: usize,
}

impl RunConfig {
    pub fn new(budgets: Budgets) -> Self {
        RunConfig {
            budgets,
            ..RunConfig::default()
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            budgets: Budgets::default(),
            history_window: 4096,
            trace_cap: 10_000,
            drift_candidates: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub level: usize,
    pub t1: Ordinal,
    pub t2: Ordinal,
    /// Configuration at both `t1` and the limit of the repetition.
    pub config: Configuration,
    /// Minima over `[t1, t2)`.
    pub profile: MinProfile,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunOutcome {
    Halted { output: u64, time: Ordinal },
    NonHalting(Certificate),
    Exhausted { steps_used: u64, deepest_level: usize },
}

impl std::fmt::Display for RunOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunOutcome::Halted { output, time } => write!(f, "Halted output={output} time={time}"),
            RunOutcome::NonHalting(c) => {
                write!(f, "NonHalting level={} t1={} t2={}", c.level, c.t1, c.t2)
            }
            RunOutcome::Exhausted {
                steps_used,
                deepest_level,
            } => write!(f, "Exhausted steps={steps_used} deepest_level={deepest_level}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Event {
    Step,
    Limit,
    Halt,
    Certificate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceRecord {
    pub time: Ordinal,
    pub line: Line,
    pub registers: Vec<u64>,
    pub event: Event,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("trace records serialize"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VmError {
    #[error("invalid program: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidProgram(Vec<Diagnostic>),
    #[error("successor step budget must be positive")]
    ZeroBudget,
    #[error("configuration has {got} registers, program needs {need}")]
    RegisterMismatch { got: usize, need: usize },
}

pub fn run(
    p: &Program,
    o: &OracleSpec,
    input: u64,
    cfg: &RunConfig,
) -> Result<(RunOutcome, Trace), VmError> {
    check(p, cfg)?;
    let start = Configuration::initial(p.register_count, input);
    let mut engine = Engine::new(p, o, cfg, start, None);
    match engine.execute() {
        Flow::Done(outcome) => Ok((outcome, engine.trace)),
        Flow::Stopped => unreachable!("no stop time was set"),
    }
}

pub fn classify_halting(
    p: &Program,
    o: &OracleSpec,
    inputs: &[u64],
    cfg: &RunConfig,
) -> Result<Vec<RunOutcome>, VmError> {
    inputs
        .iter()
        .map(|&i| run(p, o, i, cfg).map(|(outcome, _)| outcome))
        .collect()
}

/// Runs from `start` for exactly `period` and reports the configuration
/// reached together with the minima over `[0, period)`. `None` if the run
/// halts, is certified non-halting or runs out of budget first.
pub fn run_for(
    p: &Program,
    o: &OracleSpec,
    start: Configuration,
    period: &Ordinal,
    cfg: &RunConfig,
) -> Result<Option<(Configuration, MinProfile)>, VmError> {
    check(p, cfg)?;
    let need = p.register_count.max(2);
    if start.registers.len() != need {
        return Err(VmError::RegisterMismatch {
            got: start.registers.len(),
            need,
        });
    }
    let mut engine = Engine::new(p, o, cfg, start, Some(period.clone()));
    match engine.execute() {
        Flow::Stopped => Ok(Some((
            engine.config.clone(),
            engine.total.expect("period is nonzero").min,
        ))),
        Flow::Done(_) => Ok(None),
    }
}

/// Re-runs one period from the certified configuration and checks that it
/// returns to the same configuration with the same minima.
pub fn verify_certificate(
    p: &Program,
    o: &OracleSpec,
    cert: &Certificate,
    cfg: &RunConfig,
) -> Result<bool, VmError> {
    let Some(period) = cert.t2.checked_sub(&cert.t1) else {
        return Ok(false);
    };
    if period.is_zero() {
        return Ok(false);
    }
    let replay = run_for(p, o, cert.config.clone(), &period, cfg)?;
    Ok(replay.is_some_and(|(c, m)| c == cert.config && m == cert.profile))
}

fn check(p: &Program, cfg: &RunConfig) -> Result<(), VmError> {
    let diags = validate(p);
    if !diags.is_empty() {
        return Err(VmError::InvalidProgram(diags));
    }
    if cfg.budgets.successor_steps == 0 {
        return Err(VmError::ZeroBudget);
    }
    Ok(())
}

#[derive(Debug, Clone)]
struct Segment {
    min: MinProfile,
    touched: Vec<bool>,
}

impl Segment {
    fn fresh(c: &Configuration) -> Self {
        Segment {
            min: MinProfile::of(c),
            touched: vec![false; c.registers.len()],
        }
    }

    fn absorb(&mut self, c: &Configuration, touched: &[Reg]) {
        self.min.absorb(c);
        for &r in touched {
            self.touched[r] = true;
        }
    }
}

/// Successor stages of the current block, with lookup tables.
struct Block {
    start: Ordinal,
    /// Absolute position of `configs[0]` within the block.
    base: usize,
    configs: Vec<Configuration>,
    exact: HashMap<Configuration, usize>,
    by_line: Vec<Vec<usize>>,
}

impl Block {
    fn new(start: Ordinal, lines: usize) -> Self {
        Block {
            start,
            base: 0,
            configs: Vec::new(),
            exact: HashMap::new(),
            by_line: vec![Vec::new(); lines],
        }
    }

    fn time(&self, pos: usize) -> Ordinal {
        self.start.add(&Ordinal::finite(pos as u64))
    }

    fn span(&self, from: usize) -> &[Configuration] {
        &self.configs[from - self.base..]
    }

    /// Records `c` and returns a lasso ending at it, if any.
    fn push(
        &mut self,
        p: &Program,
        o: &OracleSpec,
        c: &Configuration,
        cfg: &RunConfig,
    ) -> Option<Lasso> {
        let end = self.base + self.configs.len();
        if let Some(&start) = self.exact.get(c) {
            return Some(Lasso {
                start,
                end,
                kind: LassoKind::Exact,
            });
        }
        for &start in self.by_line[c.line]
            .iter()
            .rev()
            .take(cfg.drift_candidates)
        {
            if start < self.base {
                break;
            }
            let span = &self.configs[start - self.base..];
            if !span[0].dominated_by(c) {
                continue;
            }
            if let Some(kind) = analyze_drift(p, o, span, c) {
                return Some(Lasso { start, end, kind });
            }
        }
        self.configs.push(c.clone());
        self.exact.insert(c.clone(), end);
        let visits = &mut self.by_line[c.line];
        visits.push(end);
        if visits.len() > 2 * cfg.drift_candidates.max(1) {
            visits.drain(..visits.len() - cfg.drift_candidates.max(1));
        }
        let window = cfg.history_window.max(1);
        if self.configs.len() > 2 * window {
            let cut = self.configs.len() - window;
            self.configs.drain(..cut);
            self.base += cut;
            let base = self.base;
            self.exact.retain(|_, &mut i| i >= base);
            for v in &mut self.by_line {
                v.retain(|&i| i >= base);
            }
        }
        None
    }
}

struct Level {
    snaps: Vec<Snapshot>,
    acc: Segment,
}

enum Flow {
    Done(RunOutcome),
    Stopped,
}

struct Engine<'a> {
    program: &'a Program,
    oracle: &'a OracleSpec,
    cfg: &'a RunConfig,
    clock: Ordinal,
    config: Configuration,
    steps: u64,
    deepest: usize,
    block: Block,
    /// `levels[k - 1]` holds level-k snapshots.
    levels: Vec<Level>,
    /// Minima since the start; `None` until the first stage is absorbed.
    total: Option<Segment>,
    stop_at: Option<Ordinal>,
    trace: Trace,
    traced_steps: usize,
}

impl<'a> Engine<'a> {
    fn new(
        program: &'a Program,
        oracle: &'a OracleSpec,
        cfg: &'a RunConfig,
        start: Configuration,
        stop_at: Option<Ordinal>,
    ) -> Self {
        let levels = (0..cfg.budgets.max_level)
            .map(|_| Level {
                snaps: Vec::new(),
                acc: Segment::fresh(&start),
            })
            .collect();
        Engine {
            program,
            oracle,
            cfg,
            clock: Ordinal::zero(),
            block: Block::new(Ordinal::zero(), program.len()),
            config: start,
            steps: 0,
            deepest: 0,
            levels,
            total: None,
            stop_at,
            trace: Trace::default(),
            traced_steps: 0,
        }
    }

    fn record(&mut self, event: Event) {
        if event == Event::Step {
            if self.traced_steps >= self.cfg.trace_cap {
                return;
            }
            self.traced_steps += 1;
        }
        self.trace.records.push(TraceRecord {
            time: self.clock.clone(),
            line: self.config.line,
            registers: self.config.registers.clone(),
            event,
        });
    }

    fn absorb_total(&mut self, c: &Configuration, touched: &[Reg]) {
        match &mut self.total {
            Some(t) => t.absorb(c, touched),
            None => {
                let mut t = Segment::fresh(c);
                t.absorb(c, touched);
                self.total = Some(t);
            }
        }
    }

    fn execute(&mut self) -> Flow {
        if self.stop_at.as_ref() == Some(&self.clock) {
            return Flow::Stopped;
        }
        if !self.config.is_halted(self.program) {
            self.record(Event::Step);
        }
        loop {
            if self.stop_at.as_ref() == Some(&self.clock) {
                return Flow::Stopped;
            }
            if self.config.is_halted(self.program) {
                self.record(Event::Halt);
                return Flow::Done(RunOutcome::Halted {
                    output: self.config.registers[1],
                    time: self.clock.clone(),
                });
            }
            let current = self.config.clone();
            if let Some(lasso) = self.block.push(self.program, self.oracle, &current, self.cfg) {
                if let Some(flow) = self.accelerate_block(lasso) {
                    return flow;
                }
                continue;
            }
            if self.steps >= self.cfg.budgets.successor_steps {
                return Flow::Done(RunOutcome::Exhausted {
                    steps_used: self.steps,
                    deepest_level: self.deepest,
                });
            }
            let touched: Vec<Reg> = match self.program.get(current.line) {
                Some(Instruction::Copy { src, dst }) => vec![*src, *dst],
                Some(Instruction::OracleQuery(r)) => vec![*r],
                _ => Vec::new(),
            };
            for level in &mut self.levels {
                level.acc.absorb(&current, &touched);
            }
            self.absorb_total(&current, &touched);
            self.config = step(self.program, &current, self.oracle);
            self.clock = self.clock.successor();
            self.steps += 1;
            if !self.config.is_halted(self.program) {
                self.record(Event::Step);
            }
        }
    }

    fn accelerate_block(&mut self, lasso: Lasso) -> Option<Flow> {
        let t1 = self.block.time(lasso.start);
        let t2 = self.block.time(lasso.end);
        let span = self.block.span(lasso.start);
        let limit = limit_config(span, &lasso.kind);
        if lasso.kind == LassoKind::Exact && limit == span[0] {
            let cert = Certificate {
                level: 0,
                t1,
                t2,
                config: limit,
                profile: MinProfile::over(span).expect("nonempty span"),
            };
            return Some(self.certify(cert));
        }
        if let LassoKind::Drift { perturbed, .. } = &lasso.kind {
            let marks: Vec<Reg> = (0..perturbed.len()).filter(|&r| perturbed[r]).collect();
            self.mark(0, &marks);
        }
        let lambda = Ordinal::limit_jump(&t1, &(t2.checked_sub(&t1).expect("t1 < t2")))
            .expect("period is nonzero");
        self.enter_limit(0, lambda, limit)
    }

    /// Marks registers as touched in every accumulator above `level`.
    fn mark(&mut self, level: usize, regs: &[Reg]) {
        if regs.is_empty() {
            return;
        }
        for l in self.levels.iter_mut().skip(level) {
            for &r in regs {
                l.acc.touched[r] = true;
            }
        }
        if let Some(t) = &mut self.total {
            for &r in regs {
                t.touched[r] = true;
            }
        }
    }

    fn certify(&mut self, cert: Certificate) -> Flow {
        let lambda = Ordinal::limit_jump(
            &cert.t1,
            &cert.t2.checked_sub(&cert.t1).expect("t1 < t2"),
        )
        .expect("period is nonzero");
        self.clock = lambda;
        self.config = cert.config.clone();
        self.record(Event::Certificate);
        Flow::Done(RunOutcome::NonHalting(cert))
    }

    /// Moves to the limit stage `lambda` that closes a level-`k` lasso.
    fn enter_limit(&mut self, k: usize, lambda: Ordinal, limit: Configuration) -> Option<Flow> {
        self.clock = lambda;
        self.config = limit;
        self.deepest = self.deepest.max(k + 1);
        if self.stop_at.as_ref() == Some(&self.clock) {
            return Some(Flow::Stopped);
        }
        if self.config.is_halted(self.program) {
            return None;
        }
        self.record(Event::Limit);
        let limit = self.config.clone();
        self.block = Block::new(self.clock.clone(), self.program.len());
        for level in self.levels.iter_mut().take(k) {
            level.snaps.clear();
            level.acc = Segment::fresh(&limit);
        }
        let upper = k + 1;
        if upper <= self.levels.len() {
            let window = self.cfg.history_window.max(2);
            let level = &mut self.levels[upper - 1];
            if let Some(prev) = level.snaps.last_mut() {
                prev.since = level.acc.min.clone();
                prev.touched = level.acc.touched.clone();
            }
            level.acc = Segment::fresh(&limit);
            level.snaps.push(Snapshot {
                at: self.clock.clone(),
                config: limit.clone(),
                since: MinProfile::of(&limit),
                touched: vec![false; limit.registers.len()],
            });
            if level.snaps.len() > window {
                let cut = level.snaps.len() - window;
                level.snaps.drain(..cut);
            }
        }
        for level in self.levels.iter_mut().skip(upper) {
            level.acc.absorb(&limit, &[]);
        }
        self.absorb_total(&limit, &[]);
        if upper > self.levels.len() {
            return None;
        }
        let snaps = &self.levels[upper - 1].snaps;
        let (start, kind, next) = detect_snapshot_lasso(snaps)?;
        let t1 = snaps[start].at.clone();
        let t2 = snaps[snaps.len() - 1].at.clone();
        if kind == LassoKind::Exact && next == snaps[start].config {
            let mut profile = snaps[start].since.clone();
            for s in &snaps[start + 1..snaps.len() - 1] {
                profile.merge(&s.since);
            }
            let cert = Certificate {
                level: upper,
                t1,
                t2,
                config: next,
                profile,
            };
            return Some(self.certify(cert));
        }
        if let LassoKind::Drift { perturbed, .. } = &kind {
            let marks: Vec<Reg> = (0..perturbed.len()).filter(|&r| perturbed[r]).collect();
            self.mark(upper, &marks);
        }
        let lambda = Ordinal::limit_jump(&t1, &t2.checked_sub(&t1).expect("t1 < t2"))
            .expect("period is nonzero");
        self.enter_limit(upper, lambda, next)
    }
}
