use std::collections::BTreeMap;

use proptest::prelude::*;

use sizax::index::{evaluate, leq_semantic, Assignment, IndexSubst, SymbolInterp};
use sizax::interp::{self, size, SizeMeasure, Value};
use sizax::pipeline::load;
use sizax::sized::subtype_semantic;
use sizax::solver::{solve, SolverConfig};
use sizax::syntax::parser::{parse_constraints, parse_index_term, parse_program, parse_sized_type};
use sizax::syntax::pretty;
use sizax::ticking::{tick_program, tick_type};
use sizax::{IVar, IndexTerm, Interpretation, Monomial, Poly, Program, SimpleType, Verdict};

const VARS: [&str; 3] = ["i", "j", "k"];

fn term(depth: u32) -> impl Strategy<Value = IndexTerm> {
    let leaf = prop_oneof![
        prop::sample::select(VARS.to_vec()).prop_map(IndexTerm::var),
        (0u64..4).prop_map(IndexTerm::numeral),
    ];
    leaf.prop_recursive(depth, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(IndexTerm::succ),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| IndexTerm::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| IndexTerm::mul(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| IndexTerm::sym("F", vec![a, b])),
        ]
    })
}

fn linear_term() -> impl Strategy<Value = IndexTerm> {
    let leaf = prop_oneof![
        prop::sample::select(VARS.to_vec()).prop_map(IndexTerm::var),
        (0u64..4).prop_map(IndexTerm::numeral),
    ];
    leaf.prop_recursive(2, 6, 2, |inner| {
        prop_oneof![inner.clone().prop_map(IndexTerm::succ), (inner.clone(), inner).prop_map(|(a, b)| IndexTerm::add(a, b))]
    })
}

/// An interpretation of the binary symbol `F` with small natural coefficients.
fn interpretation() -> impl Strategy<Value = Interpretation> {
    prop::collection::vec(0i64..3, 5).prop_map(|cs| {
        let monomials: [&[(usize, u32)]; 5] = [&[], &[(0, 1)], &[(1, 1)], &[(0, 1), (1, 1)], &[(0, 2)]];
        let poly: Poly<usize, i64> =
            Poly::from_terms(monomials.iter().zip(cs).map(|(m, c)| (Monomial::from_powers(m.iter().copied()), c)));
        let mut interp = Interpretation::new();
        interp.insert("F", SymbolInterp::new(2, poly).unwrap());
        interp
    })
}

fn assignment(max: u64) -> impl Strategy<Value = [u64; 3]> {
    [0..=max, 0..=max, 0..=max]
}

fn alpha(values: &[u64; 3]) -> Assignment {
    VARS.iter().zip(values).fold(Assignment::new(), |a, (v, n)| a.with(*v, *n))
}

proptest! {
    #[test]
    fn evaluate_is_monotone(t in term(4), interp in interpretation(), a in assignment(30), d in assignment(5)) {
        let b = [a[0] + d[0], a[1] + d[1], a[2] + d[2]];
        prop_assert!(evaluate(&t, &interp, &alpha(&a)).unwrap() <= evaluate(&t, &interp, &alpha(&b)).unwrap());
    }

    #[test]
    fn substitution_commutes_with_evaluation(
        t in term(3),
        theta in prop::collection::vec(linear_term(), 3),
        interp in interpretation(),
        a in assignment(10),
    ) {
        let subst: IndexSubst = VARS.iter().map(|v| IVar::new(*v)).zip(theta.iter().cloned()).collect();
        let before = alpha(&a);
        let shifted: Vec<u64> = theta.iter().map(|s| evaluate(s, &interp, &before).unwrap() as u64).collect();
        let after = alpha(&[shifted[0], shifted[1], shifted[2]]);
        prop_assert_eq!(
            evaluate(&t.substitute(&subst), &interp, &before).unwrap(),
            evaluate(&t, &interp, &after).unwrap()
        );
    }

    #[test]
    fn semantic_leq_is_sound(
        s in term(3),
        extra in term(2),
        independent in term(3),
        related in any::<bool>(),
        interp in interpretation(),
        samples in prop::collection::vec(assignment(40), 50),
    ) {
        let t = if related { IndexTerm::add(s.clone(), extra) } else { independent };
        if leq_semantic(&interp, &s, &t).unwrap() == Verdict::Yes {
            for a in &samples {
                prop_assert!(evaluate(&s, &interp, &alpha(a)).unwrap() <= evaluate(&t, &interp, &alpha(a)).unwrap());
            }
        }
    }

    #[test]
    fn polynomial_normal_form_has_the_same_values(t in term(4), interp in interpretation(), a in assignment(20)) {
        let normal = IndexTerm::from_poly(&t.to_poly(&interp).unwrap());
        prop_assert!(normal.symbols().is_empty());
        prop_assert_eq!(
            evaluate(&normal, &Interpretation::new(), &alpha(&a)).unwrap(),
            evaluate(&t, &interp, &alpha(&a)).unwrap()
        );
    }

    #[test]
    fn index_terms_print_and_parse_back(t in term(4), interp in interpretation()) {
        let back = parse_index_term(&t.to_string()).unwrap();
        prop_assert_eq!(back.to_poly(&interp).unwrap(), t.to_poly(&interp).unwrap());
    }
}

fn sized(result: &IndexTerm) -> sizax::Type {
    parse_sized_type(&format!("forall i j k. Nat i -> L j a -> Nat k -> L ({result}) a")).unwrap()
}

proptest! {
    #[test]
    fn subtyping_is_reflexive(t in term(3), interp in interpretation()) {
        let ty = sized(&t);
        prop_assert_eq!(subtype_semantic(&interp, &ty, &ty).unwrap(), Verdict::Yes);
    }

    #[test]
    fn subtyping_is_transitive(
        t1 in term(3),
        d1 in term(2),
        d2 in term(2),
        interp in interpretation(),
        samples in prop::collection::vec(assignment(20), 20),
    ) {
        let t2 = IndexTerm::add(t1.clone(), d1);
        let t3 = IndexTerm::add(t2.clone(), d2);
        let (a, b, c) = (sized(&t1), sized(&t2), sized(&t3));
        prop_assert_eq!(subtype_semantic(&interp, &a, &b).unwrap(), Verdict::Yes);
        prop_assert_eq!(subtype_semantic(&interp, &b, &c).unwrap(), Verdict::Yes);
        prop_assert_eq!(subtype_semantic(&interp, &a, &c).unwrap(), Verdict::Yes);
        for s in &samples {
            prop_assert!(evaluate(&t1, &interp, &alpha(s)).unwrap() <= evaluate(&t3, &interp, &alpha(s)).unwrap());
        }
    }
}

/// `a*i + b <= F(i)` for lower bounds, `F(i) <= a*i*i + b` for upper ones.
fn bound_constraints() -> impl Strategy<Value = Vec<(bool, u64, u64)>> {
    prop::collection::vec((any::<bool>(), 0u64..4, 0u64..4), 1..5)
}

fn constraint_text(cs: &[(bool, u64, u64)]) -> String {
    cs.iter()
        .map(|(lower, a, b)| if *lower { format!("{a} * i + {b} <= F(i)\n") } else { format!("F(i) <= {a} * i * i + {b}\n") })
        .collect()
}

fn holds(cs: &[(bool, u64, u64)], f: &dyn Fn(u128) -> u128) -> bool {
    (0..60u128).all(|i| cs.iter().all(|(lower, a, b)| {
        let (a, b) = (*a as u128, *b as u128);
        if *lower { a * i + b <= f(i) } else { f(i) <= a * i * i + b }
    }))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solutions_satisfy_their_constraints(cs in bound_constraints()) {
        let set = parse_constraints(&constraint_text(&cs)).unwrap();
        if let Ok(sol) = solve(&set, &SolverConfig::default()) {
            let f = sol.interpretation.get("F").unwrap().clone();
            let eval = |i: u128| f.poly.eval_nat(&|_| i) as u128;
            prop_assert!(holds(&cs, &eval));
        }
    }

    #[test]
    fn dropping_constraints_keeps_satisfiability(cs in bound_constraints(), keep in prop::collection::vec(any::<bool>(), 5)) {
        let subset: Vec<_> = cs.iter().zip(&keep).filter(|(_, k)| **k).map(|(c, _)| *c).collect();
        prop_assume!(!subset.is_empty());
        let cfg = SolverConfig::default();
        let full = solve(&parse_constraints(&constraint_text(&cs)).unwrap(), &cfg);
        let part = solve(&parse_constraints(&constraint_text(&subset)).unwrap(), &cfg);
        prop_assert!(full.is_err() || part.is_ok());
    }
}

fn corpus(name: &str) -> Program {
    load(&std::fs::read_to_string(format!("{}/corpus/{name}.fp", env!("CARGO_MANIFEST_DIR"))).unwrap()).unwrap()
}

fn nats(xs: &[u64]) -> Value {
    Value::list(xs.iter().map(|n| Value::nat(*n)).collect())
}

fn bools(xs: &[bool]) -> Value {
    Value::list(xs.iter().map(|b| Value::con(if *b { "True" } else { "False" }, vec![])).collect())
}

/// Runs `f` plainly and ticked; checks that both agree and that the clock
/// equals the step count.
fn run_both(prog: &Program, f: &str, args: &[Value]) -> (Value, u64) {
    let plain = interp::call(prog, f, args, 1_000_000).unwrap();
    let again = interp::call(prog, f, args, 1_000_000).unwrap();
    assert_eq!(plain, again);
    let ticked = tick_program(prog).unwrap().run(f, args, 1_000_000).unwrap();
    let (v, clock) = ticked.value.unwrap();
    let value = plain.value.unwrap();
    assert_eq!(v, value);
    assert_eq!(clock, plain.steps);
    (value, plain.steps)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn append_matches_concatenation(xs in prop::collection::vec(0u64..5, 0..=20), ys in prop::collection::vec(0u64..5, 0..=20)) {
        let (v, steps) = run_both(&corpus("append"), "append", &[nats(&xs), nats(&ys)]);
        prop_assert_eq!(v, nats(&[xs.clone(), ys].concat()));
        prop_assert_eq!(steps, xs.len() as u64 + 1);
    }

    #[test]
    fn reverse_matches_and_takes_linear_time(xs in prop::collection::vec(0u64..5, 0..=20)) {
        let prog = corpus("reverse");
        let (v, steps) = run_both(&prog, "reverse", &[nats(&xs)]);
        let mut rev = xs.clone();
        rev.reverse();
        prop_assert_eq!(size(&prog, &v, SizeMeasure::Natural), Some(xs.len() as u64));
        prop_assert_eq!(v, nats(&rev));
        prop_assert_eq!(steps, xs.len() as u64 + 2);
    }

    #[test]
    fn insertion_sort_sorts(xs in prop::collection::vec(any::<bool>(), 0..=20)) {
        let (v, steps) = run_both(&corpus("insertion"), "sort", &[bools(&xs)]);
        let mut sorted = xs.clone();
        sorted.sort();
        prop_assert_eq!(v, bools(&sorted));
        let n = xs.len() as u64;
        prop_assert!(steps <= 2 * n * n + 1);
    }

    #[test]
    fn product_pairs_every_element(xs in prop::collection::vec(0u64..4, 0..=8), ys in prop::collection::vec(0u64..4, 0..=8)) {
        let (v, _) = run_both(&corpus("product"), "product", &[nats(&xs), nats(&ys)]);
        let pairs: Vec<Value> = xs.iter().flat_map(|x| ys.iter().map(move |y| Value::pair(Value::nat(*x), Value::nat(*y)))).collect();
        prop_assert_eq!(v, Value::list(pairs));
    }

    #[test]
    fn arithmetic_matches_machine_arithmetic(m in 0u64..12, n in 0u64..12) {
        let prog = corpus("arith");
        prop_assert_eq!(run_both(&prog, "add", &[Value::nat(m), Value::nat(n)]).0, Value::nat(m + n));
        prop_assert_eq!(run_both(&prog, "mul", &[Value::nat(m), Value::nat(n)]).0, Value::nat(m * n));
        prop_assert_eq!(run_both(&prog, "double", &[Value::nat(m)]).0, Value::nat(2 * m));
    }
}

fn simple_type() -> impl Strategy<Value = SimpleType> {
    let leaf = prop_oneof![Just(SimpleType::nat()), Just(SimpleType::Var("a".into()))];
    leaf.prop_recursive(4, 16, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(SimpleType::list),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| SimpleType::product(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| SimpleType::arrow(a, b)),
        ]
    })
}

fn has_arrow(t: &SimpleType) -> bool {
    match t {
        SimpleType::Arrow(..) => true,
        SimpleType::Var(_) => false,
        SimpleType::Base { args, .. } => args.iter().any(has_arrow),
        SimpleType::Product(a, b) => has_arrow(a) || has_arrow(b),
    }
}

proptest! {
    #[test]
    fn ticking_types_is_structural(t in simple_type()) {
        let ticked = tick_type(&t);
        if !has_arrow(&t) {
            prop_assert_eq!(&ticked, &t);
        }
        let expected = match &t {
            SimpleType::Arrow(a, b) => SimpleType::arrow(
                tick_type(a),
                SimpleType::arrow(SimpleType::nat(), SimpleType::product(tick_type(b), SimpleType::nat())),
            ),
            SimpleType::Product(a, b) => SimpleType::product(tick_type(a), tick_type(b)),
            SimpleType::Base { name, args } => SimpleType::Base { name: name.clone(), args: args.iter().map(tick_type).collect() },
            SimpleType::Var(_) => t.clone(),
        };
        prop_assert_eq!(ticked, expected);
    }
}

#[test]
fn corpus_programs_print_and_parse_back() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/corpus");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let src = std::fs::read_to_string(entry.unwrap().path()).unwrap();
        let once = pretty::program(&parse_program(&src).unwrap());
        let twice = pretty::program(&parse_program(&once).unwrap());
        assert_eq!(once, twice);
        seen += 1;
    }
    assert!(seen >= 10);
}

#[test]
fn call_graph_order_is_topological() {
    for name in ["evenodd", "insertion", "product", "tree", "twice"] {
        let prog = corpus(name);
        let graph = sizax::syntax::callgraph::CallGraph::new(&prog);
        let position: BTreeMap<String, usize> =
            graph.sccs().into_iter().enumerate().flat_map(|(k, c)| c.into_iter().map(move |f| (f, k))).collect();
        for f in prog.functions.keys() {
            for g in graph.callees(f) {
                assert!(position[g] <= position[f], "{name}: {f} calls {g}");
            }
        }
    }
}
