//! One test per acceptance criterion. Each prints a single
//! `criterion N: PASS|FAIL ...` line before asserting.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sizax::interp::{self, entry_points, InputGen, Status};
use sizax::pipeline::{analyze, inputs_for, interpretation_lines, load, validate, Options};
use sizax::sized::{is_canonical, CanonicalError};
use sizax::solver::{solve, SolveError, SolverConfig};
use sizax::syntax::callgraph::CallGraph;
use sizax::syntax::parser::{parse_constraints, parse_sized_type, parse_term};
use sizax::syntax::simple::type_of_term;
use sizax::ticking::tick_program;
use sizax::typecheck::{check_equation, check_program, generate_templates, infer_closed, CheckError, Declarations, Mode};
use sizax::{ConstraintSet, IndexSymbol, IndexTerm, Interpretation, Program, Type};

const CORPUS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/corpus");

fn source(name: &str) -> String {
    std::fs::read_to_string(format!("{CORPUS}/{name}.fp")).unwrap()
}

fn program(name: &str) -> Program {
    load(&source(name)).unwrap()
}

fn corpus() -> Vec<(String, Program)> {
    let mut out: Vec<(String, Program)> = std::fs::read_dir(CORPUS)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "fp"))
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            let prog = load(&std::fs::read_to_string(&p).unwrap()).unwrap();
            (name, prog)
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

fn verdict(n: u32, title: &str, failures: &[String], detail: &str) {
    let status = if failures.is_empty() { "PASS" } else { "FAIL" };
    println!("criterion {n}: {status} {title} ({detail})");
    for f in failures {
        println!("  - {f}");
    }
    assert!(failures.is_empty(), "criterion {n} failed: {failures:?}");
}

/// Value of an index term, computed directly from the term structure and
/// the interpretation polynomials.
fn value(t: &IndexTerm, interp: &Interpretation, env: &BTreeMap<String, u128>) -> u128 {
    match t {
        IndexTerm::Var(v) => env[v.name()],
        IndexTerm::App(s, args) => {
            let a: Vec<u128> = args.iter().map(|x| value(x, interp, env)).collect();
            match s {
                IndexSymbol::Zero => 0,
                IndexSymbol::Succ => a[0] + 1,
                IndexSymbol::Plus => a[0] + a[1],
                IndexSymbol::Mul => a[0] * a[1],
                IndexSymbol::Unknown(f) => interp.get(f).unwrap().poly.terms().map(|(m, c)| {
                    let c = u128::try_from(*c).unwrap();
                    m.powers().fold(c, |acc, (k, e)| acc * a[*k].pow(e))
                }).sum(),
            }
        }
    }
}

fn size_only() -> Options {
    Options { size_only: true, ..Options::default() }
}

#[test]
fn criterion_1_append() {
    let start = Instant::now();
    let a = analyze(&program("append"), &Options::default()).unwrap();
    let elapsed = start.elapsed();
    let mut failures = Vec::new();
    let ty = a.sizes.sized_type("append").map(|t| t.pretty_names().to_string());
    if ty.as_deref() != Some("forall i j. L i a -> L j a -> L (i + j) a") {
        failures.push(format!("append : {ty:?}"));
    }
    let lines = interpretation_lines(&a.sizes.interpretation);
    if lines != ["F1(x1,x2) = x1 + x2"] {
        failures.push(format!("interpretation {lines:?}"));
    }
    if elapsed >= Duration::from_secs(1) {
        failures.push(format!("took {elapsed:?}"));
    }
    verdict(1, "append inferred type", &failures, &format!("{}, F1(i,j) = i + j, {:?}", ty.unwrap_or_default(), elapsed));
}

#[test]
fn criterion_2_reverse() {
    let a = analyze(&program("reverse"), &Options::default()).unwrap();
    let mut failures = Vec::new();
    for (f, want) in [("rev", "forall i j. L i a -> L j a -> L (i + j) a"), ("reverse", "forall i. L i a -> L i a")] {
        let got = a.sizes.sized_type(f).map(|t| t.pretty_names().to_string());
        if got.as_deref() != Some(want) {
            failures.push(format!("{f} : {got:?}"));
        }
    }
    let time = a.time.as_ref().unwrap();
    let bound = time.bound("reverse");
    match &bound {
        Some(b) => {
            for i in 0..=20u128 {
                let v = value(b, &Interpretation::new(), &BTreeMap::from([("i".to_string(), i)]));
                if v > i + 4 {
                    failures.push(format!("bound {b} is {v} at i = {i}"));
                }
            }
        }
        None => failures.push("no runtime bound for reverse".into()),
    }
    let gen = InputGen { budget: 20, ..InputGen::default() };
    let r = validate(&a, "reverse", &gen, 1_000_000).unwrap();
    if r.inputs != 21 || r.clock_checked != r.inputs || !r.clock_mismatches.is_empty() {
        failures.push(format!("clock: {} of {} inputs checked, {} mismatches", r.clock_checked, r.inputs, r.clock_mismatches.len()));
    }
    if r.runtime_checked != r.inputs || !r.runtime_violations.is_empty() {
        failures.push(format!("bound below observed steps on {} inputs", r.runtime_violations.len()));
    }
    let detail = format!("runtime {}, clock = steps on {} lists", bound.map(|b| b.to_string()).unwrap_or_default(), r.clock_checked);
    verdict(2, "reverse types and runtime", &failures, &detail);
}

/// Drops the `'n` suffixes of renamed index variables.
fn unprimed(s: &str) -> String {
    let mut out = String::new();
    let mut chars = s.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '\'' {
            while chars.peek().is_some_and(|d| d.is_ascii_digit()) {
                chars.next();
            }
        } else {
            out.push(c);
        }
    }
    out
}

const RANK_ONE_TWICE: &str = "forall i. (Nat i -> Nat (i + 1)) -> Nat i -> Nat (i + 2)";

#[test]
fn criterion_3_twice() {
    let prog = program("twice");
    let mut failures = Vec::new();
    let opts = Options { check: true, ..size_only() };
    let a = analyze(&prog, &opts).unwrap();
    if !a.sizes.failed.is_empty() {
        failures.push(format!("check rejected {:?}", a.sizes.failed));
    }
    let decls = a.sizes.decls.instantiate(&a.sizes.interpretation);
    let mut term = parse_term("twice Succ", &prog).unwrap();
    type_of_term(&prog, &mut term).unwrap();
    let t = infer_closed(&prog, &decls, &term).unwrap();
    let want = parse_sized_type("forall c. Nat c -> Nat (c + 2)").unwrap();
    if t.pretty_names().to_string() != want.pretty_names().to_string() {
        failures.push(format!("twice Succ : {t}"));
    }

    // The rank-1 declaration fails the canonicity gate ...
    let src = format!("twice ::: {RANK_ONE_TWICE}\ntwice f x = f (f x)\n");
    let rank1 = load(&src).unwrap();
    match analyze(&rank1, &Options { check: true, ..size_only() }) {
        Err(e) if e.to_string().contains("not canonical") => {}
        Err(e) => failures.push(format!("rank-1 rejected for another reason: {e}")),
        Ok(a) if !a.sizes.failed.is_empty() => {}
        Ok(_) => failures.push("rank-1 declaration accepted".into()),
    }
    // ... and checking the body against it fails as well.
    let mut decls = Declarations::default();
    decls.insert("twice", parse_sized_type(RANK_ONE_TWICE).unwrap());
    let f = rank1.function("twice").unwrap();
    let body = check_equation(&rank1, &decls, "twice", 0, &f.equations[0], Mode::Semantic(&Interpretation::new()));
    let body_error = match body {
        Err(CheckError::SubtypeFailure { lhs, rhs, .. }) => unprimed(&format!("{lhs} <= {rhs}")),
        other => {
            failures.push(format!("rank-1 body: {other:?}"));
            String::new()
        }
    };
    if body_error != "i + 1 <= i" {
        failures.push(format!("rank-1 body fails with `{body_error}`"));
    }
    verdict(3, "twice rank-2 accepted, rank-1 rejected", &failures, &format!("twice Succ : {t}; rank-1 body needs {body_error}"));
}

#[test]
fn criterion_4_product() {
    let start = Instant::now();
    let prog = program("product");
    let a = analyze(&prog, &Options { check: true, ..size_only() }).unwrap();
    let mut failures = Vec::new();
    if !a.sizes.failed.is_empty() {
        failures.push(format!("rejected {:?}", a.sizes.failed));
    }
    let ty = a.sizes.sized_type("product").map(|t| t.pretty_names().to_string());
    if ty.as_deref() != Some("forall i j. L i a -> L j b -> L (i * j) (a, b)") {
        failures.push(format!("product : {ty:?}"));
    }
    let gen = InputGen { budget: 8, ..InputGen::default() };
    let r = validate(&a, "product", &gen, 1_000_000).unwrap();
    if r.inputs != 81 || !r.size_violations.is_empty() || r.inconclusive > 0 {
        failures.push(format!("{} inputs, {} violations", r.inputs, r.size_violations.len()));
    }
    if r.max_slack.iter().any(|(_, s)| *s != 0) {
        failures.push(format!("slack {:?}", r.max_slack));
    }
    let elapsed = start.elapsed();
    if elapsed >= Duration::from_secs(5) {
        failures.push(format!("took {elapsed:?}"));
    }
    verdict(4, "product checked and validated", &failures, &format!("{} inputs, slack 0, {elapsed:?}", r.inputs));
}

#[test]
fn criterion_5_ticking_exactness() {
    let gen = InputGen::default();
    assert_eq!(gen.budget, 15);
    let programs = corpus();
    let mut failures = Vec::new();
    let mut runs = 0;
    for (name, prog) in &programs {
        let ticked = tick_program(prog).unwrap();
        for f in entry_points(prog) {
            for args in inputs_for(prog, &f, &gen).unwrap() {
                let plain = interp::call(prog, &f, &args, 1_000_000).unwrap();
                let clocked = ticked.run(&f, &args, 1_000_000).unwrap();
                assert_eq!((plain.status, clocked.status), (Status::Finished, Status::Finished));
                let (v, clock) = clocked.value.unwrap();
                runs += 1;
                if Some(&v) != plain.value.as_ref() || clock != plain.steps {
                    failures.push(format!("{name}/{f} {args:?}: clock {clock}, steps {}", plain.steps));
                }
            }
        }
    }
    for required in ["append", "reverse", "product", "map", "sum", "evenodd"] {
        if !programs.iter().any(|(n, _)| n == required) {
            failures.push(format!("corpus lacks {required}"));
        }
    }
    if programs.len() < 10 {
        failures.push(format!("only {} programs", programs.len()));
    }
    failures.truncate(10);
    verdict(5, "clock = steps", &failures, &format!("{} programs, {runs} runs", programs.len()));
}

#[test]
fn criterion_6_size_soundness() {
    let gen = InputGen::default();
    let mut failures = Vec::new();
    let (mut checked, mut inputs) = (0, 0);
    for (name, prog) in corpus() {
        let a = analyze(&prog, &size_only()).unwrap();
        for f in entry_points(&prog) {
            if a.sizes.declaration(&f).is_none() {
                continue;
            }
            let r = validate(&a, &f, &gen, 1_000_000).unwrap();
            checked += 1;
            inputs += r.inputs;
            if !r.size_violations.is_empty() || r.inconclusive > 0 {
                failures.push(format!("{name}/{f}: {} violations, {} inconclusive", r.size_violations.len(), r.inconclusive));
            }
        }
    }
    verdict(6, "observed sizes within bounds", &failures, &format!("{checked} functions, {inputs} inputs"));
}

#[test]
fn criterion_7_canonicity() {
    let mut failures = Vec::new();
    let half = parse_sized_type("forall i. Nat (2 * i) -> Nat i").unwrap();
    match is_canonical(&half) {
        Err(CanonicalError::NonVariableIndex { index }) if index == "2 * i" => {}
        other => failures.push(format!("half: {other:?}")),
    }
    let dup = parse_sized_type("forall i. Nat i -> Nat i -> Nat i").unwrap();
    match is_canonical(&dup) {
        Err(CanonicalError::DuplicateNegativeVariable { var }) if var == "i" => {}
        other => failures.push(format!("f: {other:?}")),
    }
    for ok in ["forall i. Nat i -> Nat i", "forall i j. Nat i -> Nat j -> Nat (i + j)"] {
        if let Err(e) = is_canonical(&parse_sized_type(ok).unwrap()) {
            failures.push(format!("{ok}: {e}"));
        }
    }
    let detail = format!(
        "{}; {}",
        is_canonical(&half).unwrap_err(),
        is_canonical(&dup).unwrap_err()
    );
    verdict(7, "non-canonical declarations rejected", &failures, &detail);
}

/// Constraints of a program with every function given a template.
fn raw_constraints(prog: &Program) -> ConstraintSet {
    let decls = generate_templates(prog, &BTreeMap::new()).unwrap();
    check_program(prog, &decls, Mode::Generate).constraints
}

fn audit(cs: &ConstraintSet, interp: &Interpretation, rng: &mut ChaCha8Rng) -> Option<String> {
    for c in cs.iter() {
        let vars: BTreeSet<String> = c.lhs.vars().union(&c.rhs.vars()).map(|v| v.name().to_string()).collect();
        for _ in 0..1000 {
            let env: BTreeMap<String, u128> = vars.iter().map(|v| (v.clone(), rng.gen_range(0..=40))).collect();
            let (l, r) = (value(&c.lhs, interp, &env), value(&c.rhs, interp, &env));
            if l > r {
                return Some(format!("{c} at {env:?}: {l} > {r}"));
            }
        }
    }
    None
}

#[test]
fn criterion_8_certificates() {
    let cfg = SolverConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut failures = Vec::new();
    let mut sat = 0;
    for (name, prog) in corpus() {
        for ticked in [false, true] {
            let p = if ticked { tick_program(&prog).unwrap().program } else { prog.clone() };
            let cs = raw_constraints(&p);
            let Ok(sol) = solve(&cs, &cfg) else { continue };
            sat += 1;
            if sol.certificate.samples != 1000 || sol.certificate.witnesses.len() != cs.len() {
                failures.push(format!("{name}: incomplete certificate"));
            }
            if sol.certificate.witnesses.iter().any(|w| w.difference.contains('-')) {
                failures.push(format!("{name}: negative coefficient in a witness"));
            }
            if let Some(e) = audit(&cs, &sol.interpretation, &mut rng) {
                failures.push(format!("{name}: {e}"));
            }
        }
    }
    let square = parse_constraints("i * i <= i\n").unwrap();
    match solve(&square, &cfg) {
        Err(SolveError::Unsat { .. }) => {}
        other => failures.push(format!("i * i <= i: {other:?}")),
    }
    let open = parse_constraints("i * i <= F(i)\nF(i) <= i\n").unwrap();
    if !matches!(solve(&open, &cfg), Err(SolveError::Unsat { .. })) {
        failures.push("{i * i <= F(i), F(i) <= i} not Unsat".into());
    }
    verdict(8, "solver answers audited", &failures, &format!("{sat} satisfiable sets re-checked, i * i <= i unsat"));
}

/// Symbols in the final result of each function's template.
fn result_symbols(decls: &Declarations) -> BTreeMap<String, BTreeSet<String>> {
    decls
        .funs
        .iter()
        .map(|(f, t)| {
            let (_, res) = t.body.uncurry();
            (f.clone(), Type::mono(res.clone()).symbols().into_keys().collect())
        })
        .collect()
}

#[test]
fn criterion_9_scc_incrementality() {
    let mut failures = Vec::new();
    let (mut groups, mut first_order, mut merges) = (0, 0, 0);
    for (name, prog) in corpus() {
        let decls = generate_templates(&prog, &BTreeMap::new()).unwrap();
        let cs = check_program(&prog, &decls, Mode::Generate).constraints;
        let base = SolverConfig { timeout: Some(Duration::from_secs(20)), ..SolverConfig::default() };
        let per_scc = solve(&cs, &SolverConfig { incremental: true, ..base.clone() });
        let whole = solve(&cs, &SolverConfig { incremental: false, ..base });
        if matches!(per_scc, Err(SolveError::Timeout { .. })) || matches!(whole, Err(SolveError::Timeout { .. })) {
            failures.push(format!("{name}: timeout"));
            continue;
        }
        if per_scc.is_ok() != whole.is_ok() {
            failures.push(format!("{name}: per-SCC {} but whole {}", per_scc.is_ok(), whole.is_ok()));
        }
        let Ok(sol) = per_scc else { continue };
        groups += sol.groups.len();
        let graph = CallGraph::new(&prog);
        let scc = graph.scc_index();
        let position: BTreeMap<&str, usize> =
            sol.groups.iter().enumerate().flat_map(|(k, g)| g.symbols.iter().map(move |s| (s.as_str(), k))).collect();
        let results = result_symbols(&decls);
        let span = |f: &str| -> Option<(usize, usize)> {
            let ps: Vec<usize> = results.get(f)?.iter().filter_map(|s| position.get(s.as_str()).copied()).collect();
            Some((*ps.iter().min()?, *ps.iter().max()?))
        };
        let all_results: BTreeSet<&String> = results.values().flatten().collect();
        // Result sizes of a function are solved after those of its callees,
        // or together with them when a call-site symbol closes a cycle.
        for f in prog.functions.keys() {
            for g in graph.reachable(std::slice::from_ref(f)) {
                if scc[f] == scc[&g] {
                    continue;
                }
                if let (Some((lo, _)), Some((_, hi))) = (span(f), span(&g)) {
                    let merged = hi == lo && sol.groups[lo].symbols.iter().any(|s| !all_results.contains(s));
                    if merged {
                        merges += 1;
                    } else if hi >= lo {
                        failures.push(format!("{name}: result of {f} solved no later than that of its callee {g}"));
                    }
                }
            }
        }
        // Sizes of functional arguments and existential sizes are fixed by
        // call sites; without them groups and components correspond exactly.
        let callsite_fixed = cs.symbols().into_keys().filter(|s| !all_results.contains(s)).count();
        if callsite_fixed == 0 {
            first_order += 1;
            for g in &sol.groups {
                let comps: BTreeSet<usize> = g.symbols.iter().filter_map(|s| cs.owners.get(s)).map(|f| scc[f]).collect();
                if comps.len() != 1 {
                    failures.push(format!("{name}: group {:?} spans {} components", g.symbols, comps.len()));
                }
            }
        }
    }
    let detail = format!(
        "{groups} groups; result sizes follow the condensation, {merges} caller/callee pairs joined by call-site symbols; exact group/component match on {first_order} first-order programs"
    );
    verdict(9, "per-SCC and whole solving agree", &failures, &detail);
}
