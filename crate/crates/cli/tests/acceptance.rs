//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::panic;
use std::time::Instant;

use common::{corpus, p, random_program, simulate};
use itrm_core::coding::{canonical_code, pair, unpair, well_founded, Edge};
use itrm_core::gadgets::{
    check_recognizer, constant_acceptor, decode_naturals, equality_recognizer, flag_counter,
    fo_compile, join_recognizer, model_check, nested_flag_counter, Formula, Verdict,
};
use itrm_core::isa::{parse, print, Program};
use itrm_core::oracle::{join, OracleSpec};
use itrm_core::ordinal::Ordinal;
use itrm_core::vm::{
    detect_lasso, limit_config, run, verify_certificate, Budgets, LassoKind, MinProfile,
    RunConfig, RunOutcome,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn cfg(steps: u64) -> RunConfig {
    RunConfig::new(Budgets {
        successor_steps: steps,
        max_level: 3,
    })
}

fn halted(outcome: &RunOutcome) -> Option<(u64, Ordinal)> {
    match outcome {
        RunOutcome::Halted { output, time } => Some((*output, time.clone())),
        _ => None,
    }
}

fn random_ordinal(rng: &mut impl Rng) -> Ordinal {
    let n = rng.gen_range(0..=4);
    Ordinal::from_sum((0..n).map(|_| (rng.gen_range(0..8u32), rng.gen_range(1..=5u64))))
}

fn ordinal_laws() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let zero = Ordinal::zero();
    for _ in 0..10_000 {
        let (a, b, c) = (
            random_ordinal(&mut rng),
            random_ordinal(&mut rng),
            random_ordinal(&mut rng),
        );
        ensure(a.add(&b).add(&c) == a.add(&b.add(&c)), || format!("assoc {a} {b} {c}"))?;
        ensure(a.add(&zero) == a && zero.add(&a) == a, || format!("identity {a}"))?;
        let big = Ordinal::omega_pow(a.degree() + 1);
        ensure(a.add(&big) == big, || format!("absorption {a} + {big}"))?;
        if b != c {
            let (lo, hi) = if b < c { (&b, &c) } else { (&c, &b) };
            ensure(a.add(lo) < a.add(hi), || format!("monotone {a} {lo} {hi}"))?;
        }
    }
    ensure(Ordinal::finite(1).add(&Ordinal::omega()) == Ordinal::omega(), || "1+w".into())?;
    Ok("10000 triples below w^8".into())
}

fn assembler_round_trip() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let prog = random_program(&mut rng, 20, 8);
        let text = print(&prog);
        let back = parse(&text).map_err(|e| format!("{e} in\n{text}"))?;
        ensure(back == prog, || format!("round trip changed\n{text}"))?;
    }
    let mut files = 0;
    for name in ["halt.itrm", "inc_loop.itrm", "parity.itrm", "sweep.itrm"] {
        let text = fs::read_to_string(corpus(name)).map_err(|e| e.to_string())?;
        let canonical = text.trim_end_matches('\n');
        let printed = print(&parse(&text).map_err(|e| e.to_string())?);
        ensure(printed == canonical, || format!("{name} not canonical"))?;
        files += 1;
    }
    Ok(format!("1000 generated programs, {files} corpus files"))
}

fn random_oracle(rng: &mut impl Rng) -> OracleSpec {
    match rng.gen_range(0..3) {
        0 => OracleSpec::empty(),
        1 => OracleSpec::finite((0..rng.gen_range(1..4)).map(|_| rng.gen_range(0..6u64))),
        _ => OracleSpec::Cofinite((0..rng.gen_range(0..3)).map(|_| rng.gen_range(0..6u64)).collect()),
    }
}

fn exact_limit_soundness() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    let mut attempts = 0;
    while checked < 150 && attempts < 20_000 {
        attempts += 1;
        let regs = rng.gen_range(1..=3);
        let prog = random_program(&mut rng, 8, regs);
        let o = random_oracle(&mut rng);
        let mut start = vec![0; prog.register_count.max(2)];
        start[1] = rng.gen_range(0..4);
        let hist = simulate(&prog, &o, start.clone(), 300);
        let Some(lasso) = detect_lasso(&prog, &o, &hist) else { continue };
        if lasso.kind != LassoKind::Exact {
            continue;
        }
        let period = lasso.end - lasso.start;
        let limit = limit_config(&hist[lasso.start..lasso.end], &lasso.kind);
        let long = simulate(&prog, &o, start, lasso.start + 3 * period);
        let direct = MinProfile::over(&long[lasso.start..]).unwrap().to_config();
        ensure(limit == direct, || format!("{}\naccelerated {limit:?} simulated {direct:?}", print(&prog)))?;
        checked += 1;
    }
    ensure(checked >= 100, || format!("only {checked} exact lassos"))?;
    Ok(format!("{checked} programs with exact lassos, 3 periods each"))
}

/// Adds `a` to r4 and `b` to r5 per round; r6 holds `c` throughout; with
/// `sweep`, also queries the oracle at the current value of r4.
fn drift_program(a: usize, b: usize, c: usize, sweep: bool) -> Program {
    let mut src = String::new();
    for _ in 0..c {
        src.push_str("INC r6\n");
    }
    src.push_str("top: ");
    for _ in 0..a {
        src.push_str("INC r4\n");
    }
    for _ in 0..b {
        src.push_str("INC r5\n");
    }
    if sweep {
        src.push_str("COPY r4 r7\nORACLE r7\n");
    }
    src.push_str("JZ r6 top\nJZ r0 top\n");
    parse(&src).unwrap()
}

fn drift_soundness() -> Result<String, String> {
    let mut cases: Vec<(String, Program, OracleSpec)> = Vec::new();
    for k in 1..=4 {
        let body = "INC r0\n".repeat(k);
        let src = format!("loop: {body}JZ r1 loop\nHALT");
        cases.push((format!("inc-loop x{k}"), parse(&src).unwrap(), OracleSpec::empty()));
    }
    let oracles = [
        OracleSpec::empty(),
        OracleSpec::finite([1, 5]),
        OracleSpec::periodic(&[1], &[0, 1]).unwrap(),
    ];
    'outer: for a in 1..=2 {
        for b in 0..=2 {
            for c in 0..=1 {
                for (i, o) in oracles.iter().enumerate() {
                    if cases.len() == 24 {
                        break 'outer;
                    }
                    let sweep = i > 0 || (a + b + c) % 2 == 0;
                    if i == 2 && a == 1 {
                        continue;
                    }
                    let prog = drift_program(a, b, c, sweep);
                    cases.push((format!("a={a} b={b} c={c} oracle={o}"), prog, o.clone()));
                }
            }
        }
    }
    ensure(cases.len() == 24, || format!("built {} cases", cases.len()))?;
    for (name, prog, o) in &cases {
        let regs = prog.register_count.max(2);
        let hist = simulate(prog, o, vec![0; regs], 400);
        let lasso = detect_lasso(prog, o, &hist).ok_or(format!("{name}: no lasso"))?;
        let LassoKind::Drift { delta, stable_min, .. } = &lasso.kind else {
            return Err(format!("{name}: expected a drift lasso"));
        };
        let period = lasso.end - lasso.start;
        let limit = limit_config(&hist[lasso.start..lasso.end], &lasso.kind);
        let long = simulate(prog, o, vec![0; regs], lasso.start + 5 * period);
        let windows: Vec<MinProfile> = long[lasso.start..]
            .chunks(period)
            .map(|w| MinProfile::over(w).unwrap())
            .collect();
        ensure(windows.len() == 5, || format!("{name}: simulation stopped"))?;
        for r in 0..regs {
            if stable_min[r].is_none() {
                let mins: Vec<u64> = windows.iter().map(|w| w.min_registers[r]).collect();
                ensure(mins.windows(2).all(|w| w[1] >= w[0] + delta[r]), || {
                    format!("{name}: r{r} minima {mins:?} do not grow")
                })?;
            } else {
                ensure(windows.iter().all(|w| w.min_registers[r] == limit.registers[r]), || {
                    format!("{name}: r{r} differs from limit {}", limit.registers[r])
                })?;
            }
        }
        ensure(windows.iter().all(|w| w.min_line == limit.line), || format!("{name}: line"))?;
    }
    Ok(format!("{} drift programs ({} inc-loops), 5 periods each", cases.len(), 4))
}

fn transfinite_timestamps() -> Result<String, String> {
    let g = flag_counter();
    let (out, _) = run(&g.program, &OracleSpec::empty(), 0, &cfg(100_000)).map_err(|e| e.to_string())?;
    let (_, t) = halted(&out).ok_or(format!("flag counter: {out}"))?;
    let c = t
        .checked_sub(&Ordinal::omega())
        .and_then(|c| c.as_finite())
        .ok_or(format!("flag counter halted at {t}"))?;
    ensure(c < 50, || format!("c = {c}"))?;
    let g = nested_flag_counter(2);
    let (out, _) = run(&g.program, &OracleSpec::empty(), 0, &cfg(100_000)).map_err(|e| e.to_string())?;
    let (_, t2) = halted(&out).ok_or(format!("nested: {out}"))?;
    ensure(t2.degree() == 2, || format!("nested halted at {t2}"))?;
    Ok(format!("flag counter at {t}, nested loops at {t2}"))
}

fn non_halting_certification() -> Result<String, String> {
    let prog = parse(&fs::read_to_string(corpus("inc_loop.itrm")).unwrap()).unwrap();
    let o = OracleSpec::empty();
    let (out, _) = run(&prog, &o, 0, &cfg(10_000)).map_err(|e| e.to_string())?;
    let RunOutcome::NonHalting(cert) = out else {
        return Err(format!("inc-loop: {out}"));
    };
    ensure(cert.level <= 2, || format!("level {}", cert.level))?;
    let replay = verify_certificate(&prog, &o, &cert, &cfg(10_000)).map_err(|e| e.to_string())?;
    ensure(replay, || "replay did not reproduce the certificate".into())?;
    Ok(format!("level {} certificate t1={} t2={}, replay matches", cert.level, cert.t1, cert.t2))
}

fn periodic(prefix: &[u8], cycle: &[u8]) -> OracleSpec {
    OracleSpec::periodic(prefix, cycle).unwrap()
}

fn recognizer_contract() -> Result<String, String> {
    let budget = cfg(200_000);
    let finite_target = OracleSpec::finite([1, 4, 6]);
    let finite_family = vec![
        OracleSpec::empty(),
        OracleSpec::finite([1]),
        OracleSpec::finite([1, 4]),
        OracleSpec::finite([4, 6]),
        finite_target.clone(),
        OracleSpec::finite([1, 4, 6, 7]),
        OracleSpec::finite([1, 4, 6, 30]),
        OracleSpec::Cofinite([0].into_iter().collect()),
        periodic(&[], &[0, 1]),
        join(OracleSpec::finite([0, 2]), OracleSpec::finite([3])),
    ];
    let periodic_target = periodic(&[1, 0], &[0, 1, 1]);
    let bits: Vec<u8> = (0..14).map(|n| periodic_target.query(n) as u8).collect();
    let mut periodic_family = vec![periodic_target.clone()];
    for flip in [0, 1, 2, 5, 9, 13] {
        let mut b = bits.clone();
        b[flip] ^= 1;
        periodic_family.push(periodic(&b[..11], &b[11..14]));
    }
    periodic_family.push(periodic(&[1, 0], &[1, 1, 0]));
    periodic_family.push(OracleSpec::finite([0, 3, 4]));
    periodic_family.push(OracleSpec::Cofinite(BTreeSet::new()));
    let mut lines = Vec::new();
    for (target, family, index) in [
        (&finite_target, &finite_family, 4),
        (&periodic_target, &periodic_family, 0),
    ] {
        ensure(family.len() == 10, || "family size".into())?;
        let g = equality_recognizer(target).map_err(|e| e.to_string())?;
        let r = check_recognizer(&g.program, family, index, &budget).map_err(|e| e.to_string())?;
        ensure(r.verdict == Verdict::Pass, || format!("{target}:\n{r}"))?;
        let acc = constant_acceptor();
        let r = check_recognizer(&acc.program, family, index, &budget).map_err(|e| e.to_string())?;
        ensure(r.verdict == Verdict::Fail, || format!("constant acceptor on {target}: {}", r.verdict))?;
        lines.push(format!("{target} PASS"));
    }
    Ok(format!("{}; constant acceptor FAIL", lines.join(", ")))
}

fn join_laws() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let x = OracleSpec::finite((0..rng.gen_range(0..20)).map(|_| rng.gen_range(0..600u64)));
        let y = OracleSpec::finite((0..rng.gen_range(0..20)).map(|_| rng.gen_range(0..600u64)));
        let j = join(x.clone(), y.clone());
        for n in 0..1000 {
            ensure(j.query(2 * n) == x.query(n) && j.query(2 * n + 1) == y.query(n), || {
                format!("split law at {n} for {j}")
            })?;
        }
    }
    let a = OracleSpec::finite([0, 3]);
    let b = periodic(&[], &[0, 1, 1]);
    let g = join_recognizer(&a, &b).map_err(|e| e.to_string())?;
    let family = vec![
        join(b.clone(), a.clone()),
        join(a.clone(), b.clone()),
        join(a.clone(), periodic(&[], &[0, 1])),
        join(OracleSpec::finite([0]), b.clone()),
    ];
    let r = check_recognizer(&g.program, &family, 1, &cfg(200_000)).map_err(|e| e.to_string())?;
    ensure(r.verdict == Verdict::Pass, || format!("{r}"))?;
    Ok("20 random pairs, n < 1000; join recognizer PASS on 4 members".into())
}

fn random_formula(rng: &mut impl Rng, depth: usize, bound: usize) -> Formula {
    let atom = |rng: &mut ChaCha8Rng| Formula::Edge(rng.gen_range(0..bound), rng.gen_range(0..bound));
    let mut own = ChaCha8Rng::seed_from_u64(rng.gen());
    let roll = rng.gen_range(0..10);
    if bound == 0 || (depth > 0 && roll < 5) {
        if depth == 0 {
            return Formula::exists(Formula::Edge(0, 0));
        }
        let body = random_formula(rng, depth - 1, bound + 1);
        return if rng.gen_bool(0.5) {
            Formula::exists(body)
        } else {
            Formula::forall(body)
        };
    }
    match roll {
        5 | 6 if depth > 0 => Formula::not(random_formula(rng, depth, bound)),
        7 => Formula::and(random_formula(rng, depth.saturating_sub(1), bound), atom(&mut own)),
        8 => Formula::or(atom(&mut own), random_formula(rng, depth.saturating_sub(1), bound)),
        _ => atom(&mut own),
    }
}

fn fo_equivalence() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut depths = Vec::new();
    for i in 0..20 {
        let depth = 1 + i % 3;
        let f = random_formula(&mut rng, depth, 0);
        let m = rng.gen_range(1..=6);
        let edges: BTreeSet<Edge> = (0..rng.gen_range(0..=7))
            .map(|_| (rng.gen_range(0..m), rng.gen_range(0..m)))
            .collect();
        let g = fo_compile(&f, 3).map_err(|e| format!("{f}: {e}"))?;
        let o = OracleSpec::StructureCode(canonical_code(m, &edges).unwrap());
        let (out, _) = run(&g.program, &o, 0, &cfg(5_000_000)).map_err(|e| e.to_string())?;
        let (v, t) = halted(&out).ok_or(format!("{f} on {edges:?}: {out}"))?;
        let expect = model_check(&f, &edges);
        ensure(v == u64::from(expect), || format!("{f} on {edges:?}: got {v}, expected {expect}"))?;
        let q = f.quantifier_depth();
        ensure(t.degree() as usize <= q, || format!("{f}: time {t} degree above {q}"))?;
        depths.push(q);
    }
    Ok(format!("20 sentences, quantifier depths {depths:?}"))
}

/// Cycle search by depth-first search with colours.
fn has_cycle(m: usize, edges: &BTreeSet<Edge>) -> bool {
    fn visit(v: usize, adj: &[Vec<usize>], colour: &mut [u8]) -> bool {
        colour[v] = 1;
        for &w in &adj[v] {
            if colour[w] == 1 || (colour[w] == 0 && visit(w, adj, colour)) {
                return true;
            }
        }
        colour[v] = 2;
        false
    }
    let mut adj = vec![Vec::new(); m];
    for &(a, b) in edges {
        adj[a].push(b);
    }
    let mut colour = vec![0u8; m];
    (0..m).any(|v| colour[v] == 0 && visit(v, &adj, &mut colour))
}

/// Transitive sets with at most `max` elements, one per isomorphism type.
/// Elements are given by the indices of their members.
fn transitive_sets(max: usize) -> Vec<Vec<Vec<usize>>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut frontier: Vec<Vec<Vec<usize>>> = vec![vec![vec![]]];
    while let Some(s) = frontier.pop() {
        let key = canonical_code(s.len(), &membership(&s)).unwrap().code;
        if !seen.insert(key) {
            continue;
        }
        if s.len() < max {
            for mask in 0u32..(1 << s.len()) {
                let members: Vec<usize> = (0..s.len()).filter(|i| mask >> i & 1 == 1).collect();
                if !s.contains(&members) {
                    let mut t = s.clone();
                    t.push(members);
                    frontier.push(t);
                }
            }
        }
        out.push(s);
    }
    out
}

fn membership(s: &[Vec<usize>]) -> BTreeSet<Edge> {
    s.iter()
        .enumerate()
        .flat_map(|(j, members)| members.iter().map(move |&i| (i, j)))
        .collect()
}

/// Positions of the von Neumann naturals 0, 1, 2, ... in `s`.
fn naturals(s: &[Vec<usize>]) -> Vec<usize> {
    let mut nats: Vec<usize> = Vec::new();
    loop {
        let mut want = nats.clone();
        want.sort_unstable();
        match s.iter().position(|m| {
            let mut m = m.clone();
            m.sort_unstable();
            m == want
        }) {
            Some(i) => nats.push(i),
            None => return nats,
        }
    }
}

fn coding() -> Result<String, String> {
    for n in 0..10_000u64 {
        let (a, b) = unpair(n);
        ensure(pair(a, b) == n, || format!("pair(unpair({n}))"))?;
    }
    for a in 0..100 {
        for b in 0..100 {
            ensure(unpair(pair(a, b)) == (a, b), || format!("unpair(pair({a},{b}))"))?;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..1000 {
        let m = rng.gen_range(1..=10);
        let density = rng.gen_range(0.0..0.3);
        let edges: BTreeSet<Edge> = (0..m)
            .flat_map(|a| (0..m).map(move |b| (a, b)))
            .filter(|_| rng.gen_bool(density))
            .collect();
        ensure(well_founded(m, &edges) == !has_cycle(m, &edges), || format!("m={m} {edges:?}"))?;
    }
    let mut sets = transitive_sets(5);
    sets.retain(|s| s.len() >= 2);
    sets.sort_by_key(|s| (std::cmp::Reverse(naturals(s).len()), s.len(), membership(s)));
    let chosen: Vec<_> = sets.into_iter().take(10).collect();
    ensure(chosen.len() == 10, || "not enough transitive sets".into())?;
    let mut decoded = 0;
    for s in &chosen {
        let cs = canonical_code(s.len(), &membership(s)).unwrap();
        let nats = naturals(s);
        let g = decode_naturals(nats.len());
        let o = OracleSpec::StructureCode(cs.clone());
        for (t, &pos) in nats.iter().enumerate() {
            let (out, _) = run(&g.program, &o, t as u64, &cfg(2_000_000)).map_err(|e| e.to_string())?;
            let (v, _) = halted(&out).ok_or(format!("decode {s:?} input {t}: {out}"))?;
            let want = cs.index_of(pos).unwrap() as u64;
            ensure(v == want, || format!("{s:?}: k_{t} = {v}, assignment gives {want}"))?;
            decoded += 1;
        }
    }
    Ok(format!("pairing on 0..10^4, 1000 digraphs, {decoded} naturals in 10 codes"))
}

fn determinism() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runs = [
        ("nested_counter.itrm", "finite{}"),
        ("eq_finite2.itrm", "finite{2}"),
        ("sweep.itrm", "periodic[1|01]"),
        ("fo_edge.itrm", "code(three.txt)"),
    ];
    for (name, oracle) in runs {
        let oracle = oracle.replace("three.txt", &p(&corpus("three.txt")));
        let mut seen = Vec::new();
        for i in 0..3 {
            let trace = dir.path().join(format!("{name}.{i}.jsonl"));
            let args = ["itrm", "run", &p(&corpus(name)), "--oracle", &oracle, "--trace", &p(&trace)];
            let out = itrm_cli::main_with(args);
            let bytes = fs::read(&trace).map_err(|e| e.to_string())?;
            seen.push((out, bytes));
        }
        ensure(seen.windows(2).all(|w| w[0] == w[1]), || format!("{name} differs between runs"))?;
    }
    Ok(format!("{} programs x 3 runs, byte-identical", runs.len()))
}

fn main() {
    let criteria: [(&str, Check); 11] = [
        ("ordinal laws", ordinal_laws),
        ("assembler round trip", assembler_round_trip),
        ("limit-rule soundness", exact_limit_soundness),
        ("drift-rule soundness", drift_soundness),
        ("transfinite timestamps", transfinite_timestamps),
        ("non-halting certification", non_halting_certification),
        ("recognizer contract", recognizer_contract),
        ("join laws", join_laws),
        ("fo compiler equivalence", fo_equivalence),
        ("coding", coding),
        ("determinism", determinism),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (name, check) in criteria {
        let t = Instant::now();
        let result = panic::catch_unwind(check).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {name} ({secs:.2}s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name} ({secs:.2}s): {why}");
            }
        }
    }
    println!(
        "{} of {} criteria passed in {:.1}s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
