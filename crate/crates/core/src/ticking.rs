//! Clock threading: every function takes a clock as its last argument and
//! returns its result paired with the advanced clock. The clock is a Nat
//! that gains one `Succ` per equation firing, so the size of the returned
//! clock is the running time.
//!
//! The target language has no `let`, so a right-hand side with several
//! calls is split into a chain of cost-free auxiliary functions, each one
//! taking apart the pair returned by the previous call.

use std::collections::{BTreeMap, BTreeSet};

use indexmap::IndexMap;
use thiserror::Error;

use crate::index::{IVar, IndexError, IndexSubst, IndexTerm, Interpretation};
use crate::interp::{call, EvalError, Status, Value};
use crate::sized::{Monotype, Type};
use crate::syntax::ast::{FunDef, Origin, Pattern, PatternKind, Program, SimpleType, Term, TermKind, PAIR, SUCC};
use crate::syntax::simple::{self, TypeError};

const CLOCK: &str = "c#";

pub fn clock_type() -> SimpleType {
    SimpleType::nat()
}

pub fn ticked_name(f: &str) -> String {
    format!("{f}#")
}

/// Wrapper for `f` applied to `m` arguments, `m + 1` below its arity.
fn partial_name(f: &str, m: usize) -> String {
    format!("{f}#{m}")
}

fn con_wrapper_name(c: &str, m: usize) -> String {
    format!("mk#{c}#{m}")
}

fn aux_name(f: &str, eq: usize, j: usize) -> String {
    format!("{f}#{eq}_{j}")
}

/// Clock-enriched type: functional types take a clock and return their
/// result paired with one.
pub fn tick_type(t: &SimpleType) -> SimpleType {
    match t {
        SimpleType::Var(_) => t.clone(),
        SimpleType::Base { name, args } => SimpleType::Base { name: name.clone(), args: args.iter().map(tick_type).collect() },
        SimpleType::Product(a, b) => SimpleType::product(tick_type(a), tick_type(b)),
        SimpleType::Arrow(a, b) => SimpleType::arrow(tick_type(a), clocked(tick_type(b))),
    }
}

fn clocked(t: SimpleType) -> SimpleType {
    SimpleType::arrow(clock_type(), SimpleType::product(t, clock_type()))
}

/// Signature of the ticked version of a `k`-ary function of type `t`.
pub fn tick_signature(t: &SimpleType, k: usize) -> Option<SimpleType> {
    let (doms, res) = t.uncurry(k)?;
    Some(SimpleType::arrows(doms.into_iter().map(tick_type).collect(), clocked(tick_type(res))))
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TickError {
    #[error("`{0}` has no simple type")]
    Untyped(String),
    #[error("`{0}` still contains a lambda")]
    Lambda(String),
    #[error("unknown symbol `{0}`")]
    Unknown(String),
    #[error("ticked program is ill-typed: {0}")]
    Type(#[from] TypeError),
}

#[derive(Clone, Debug)]
pub struct TickedProgram {
    pub program: Program,
    /// Original function name to ticked name.
    pub names: BTreeMap<String, String>,
}

struct Ticker<'p> {
    prog: &'p Program,
    funs: IndexMap<String, FunDef>,
    /// Partial-application wrappers still to generate: function or
    /// constructor name, whether it is a constructor, arguments given.
    wrappers: BTreeSet<(String, bool, usize)>,
}

/// One evaluation step of a right-hand side: `var` receives the value of
/// `call` applied to the current clock.
struct Step {
    var: String,
    call: Term,
    /// Original simple type of the value.
    ty: SimpleType,
}

struct Anf<'a, 'p> {
    ticker: &'a mut Ticker<'p>,
    steps: Vec<Step>,
}

impl Anf<'_, '_> {
    fn bind(&mut self, call: Term, ty: SimpleType) -> Term {
        let var = format!("v#{}", self.steps.len() + 1);
        self.steps.push(Step { var: var.clone(), call, ty });
        Term::var(var)
    }

    /// Applies `v` (of original type `ty`) to `args` one call at a time.
    fn apply_each(&mut self, fun: &str, mut v: Term, mut ty: SimpleType, args: Vec<Term>) -> Result<Term, TickError> {
        for a in args {
            let SimpleType::Arrow(_, cod) = ty else { return Err(TickError::Untyped(fun.to_string())) };
            ty = *cod;
            v = self.bind(Term::app(v, a), ty.clone());
        }
        Ok(v)
    }

    /// Translates `t` to a pure term, recording the calls it performs.
    fn atom(&mut self, fun: &str, t: &Term) -> Result<Term, TickError> {
        let (head, args) = t.spine();
        if matches!(head.kind, TermKind::Lam(..) | TermKind::App(..)) {
            return Err(TickError::Lambda(fun.to_string()));
        }
        let args = args.into_iter().map(|a| self.atom(fun, a)).collect::<Result<Vec<_>, _>>()?;
        let n = args.len();
        Ok(match &head.kind {
            TermKind::Var(x) => {
                let ty = head.ty.clone().ok_or_else(|| TickError::Untyped(fun.to_string()))?;
                self.apply_each(fun, Term::var(x.clone()), ty, args)?
            }
            TermKind::Con(c) => {
                let arity = self.ticker.prog.constructor(c).ok_or_else(|| TickError::Unknown(c.clone()))?.arity();
                if n >= arity {
                    Term::apps(Term::con(c.clone()), args)
                } else {
                    self.ticker.wrappers.insert((c.clone(), true, n));
                    Term::apps(Term::fun(con_wrapper_name(c, n)), args)
                }
            }
            TermKind::Fun(f) => {
                let k = self.ticker.prog.function(f).ok_or_else(|| TickError::Unknown(f.clone()))?.arity;
                if n + 1 == k {
                    Term::apps(Term::fun(ticked_name(f)), args)
                } else if n < k {
                    self.ticker.wrappers.insert((f.clone(), false, n));
                    Term::apps(Term::fun(partial_name(f, n)), args)
                } else {
                    let ty = head.ty.clone().ok_or_else(|| TickError::Untyped(fun.to_string()))?;
                    let (_, res) = ty.uncurry(k).ok_or_else(|| TickError::Untyped(fun.to_string()))?;
                    let res = res.clone();
                    let mut rest = args;
                    let extra = rest.split_off(k);
                    let v = self.bind(Term::apps(Term::fun(ticked_name(f)), rest), res.clone());
                    self.apply_each(fun, v, res, extra)?
                }
            }
            TermKind::App(..) | TermKind::Lam(..) => unreachable!(),
        })
    }
}

fn untyped_pattern(p: &Pattern) -> Pattern {
    match &p.kind {
        PatternKind::Var(x) => Pattern::var(x.clone()),
        PatternKind::Con(c, ps) => Pattern::con(c.clone(), ps.iter().map(untyped_pattern).collect()),
    }
}

fn pair_pattern(v: &str, c: &str) -> Pattern {
    Pattern::con(PAIR, vec![Pattern::var(v), Pattern::var(c)])
}

fn aux_def(name: String, ty: SimpleType, arity: usize, origin: Origin) -> FunDef {
    let mut d = FunDef::new(name, Default::default());
    d.arity = arity;
    d.ty = Some(ty);
    d.declared_ty = true;
    d.origin = origin;
    d
}

fn pattern_types(p: &Pattern, out: &mut BTreeMap<String, SimpleType>) -> Result<(), TickError> {
    match &p.kind {
        PatternKind::Var(x) => {
            let ty = p.ty.clone().ok_or_else(|| TickError::Untyped(x.clone()))?;
            out.insert(x.clone(), ty);
        }
        PatternKind::Con(_, ps) => {
            for q in ps {
                pattern_types(q, out)?;
            }
        }
    }
    Ok(())
}

impl<'p> Ticker<'p> {
    fn equation(&mut self, def: &FunDef, eq_index: usize) -> Result<(), TickError> {
        let eq = &def.equations[eq_index];
        let mut anf = Anf { ticker: self, steps: Vec::new() };
        let result = anf.atom(&def.name, &eq.rhs)?;
        let steps = anf.steps;
        let start = if def.is_cost_free() {
            Term::var(CLOCK)
        } else {
            Term::app(Term::con(SUCC), Term::var(CLOCK))
        };
        let n = steps.len();
        let tail_call = n > 0 && matches!(&result.kind, TermKind::Var(v) if *v == steps[n - 1].var);
        // right-hand side continuing after step `j` (0 = before any step)
        let rest = |j: usize, clock: Term, live: &[String]| -> Term {
            if j == n {
                Term::pair(result.clone(), clock)
            } else if j + 1 == n && tail_call {
                Term::app(steps[j].call.clone(), clock)
            } else {
                let aux = aux_name(&def.name, eq_index + 1, j + 1);
                Term::app(Term::apps(Term::fun(aux), live.iter().map(|v| Term::var(v.clone()))), Term::app(steps[j].call.clone(), clock))
            }
        };
        // variables an auxiliary function needs after step j
        let live_after = |j: usize| -> Vec<String> {
            let mut used = Vec::new();
            for s in &steps[j + 1..] {
                s.call.free_vars(&mut used);
            }
            result.free_vars(&mut used);
            used.retain(|v| !steps[j..].iter().any(|s| s.var == *v));
            used
        };
        let mut lhs: Vec<Pattern> = eq.lhs.iter().map(untyped_pattern).collect();
        lhs.push(Pattern::var(CLOCK));
        let main = rest(0, start, &if n > 0 { live_after(0) } else { vec![] });
        let f = self.funs.get_mut(&ticked_name(&def.name)).expect("ticked function exists");
        f.equations.push(crate::syntax::ast::Equation { fun: f.name.clone(), lhs, rhs: main, span: eq.span });
        let chain = if tail_call { n - 1 } else { n };
        let mut types = BTreeMap::new();
        for p in &eq.lhs {
            pattern_types(p, &mut types)?;
        }
        for st in &steps {
            types.insert(st.var.clone(), st.ty.clone());
        }
        let rhs_ty = eq.rhs.ty.clone().ok_or_else(|| TickError::Untyped(def.name.clone()))?;
        for j in 1..=chain {
            let live = live_after(j - 1);
            let name = aux_name(&def.name, eq_index + 1, j);
            let clock = format!("c#{j}");
            let mut lhs: Vec<Pattern> = live.iter().map(Pattern::var).collect();
            lhs.push(pair_pattern(&steps[j - 1].var, &clock));
            let next_live = if j < n { live_after(j) } else { vec![] };
            let rhs = rest(j, Term::var(clock), &next_live);
            let doms = live
                .iter()
                .map(|v| tick_type(&types[v]))
                .chain([SimpleType::product(tick_type(&steps[j - 1].ty), clock_type())])
                .collect();
            let ty = SimpleType::arrows(doms, SimpleType::product(tick_type(&rhs_ty), clock_type()));
            let mut d = aux_def(name.clone(), ty, lhs.len(), Origin::Continuation);
            d.equations.push(crate::syntax::ast::Equation { fun: name.clone(), lhs, rhs, span: eq.span });
            self.funs.insert(name, d);
        }
        Ok(())
    }

    fn wrapper(&mut self, name: &str, is_con: bool, m: usize) -> Result<(), TickError> {
        let (arity, ty) = if is_con {
            let c = self.prog.constructor(name).ok_or_else(|| TickError::Unknown(name.to_string()))?;
            (c.arity(), c.ty())
        } else {
            let f = self.prog.function(name).ok_or_else(|| TickError::Unknown(name.to_string()))?;
            (f.arity, f.ty.clone().ok_or_else(|| TickError::Untyped(name.to_string()))?)
        };
        let ty = tick_signature(&ty, m + 1).ok_or_else(|| TickError::Untyped(name.to_string()))?;
        let vars: Vec<String> = (1..=m + 1).map(|k| format!("x#{k}")).collect();
        let args = || vars.iter().map(|v| Term::var(v.clone()));
        let value = if is_con && m + 1 == arity {
            Term::apps(Term::con(name), args())
        } else if is_con {
            self.wrappers.insert((name.to_string(), true, m + 1));
            Term::apps(Term::fun(con_wrapper_name(name, m + 1)), args())
        } else if m + 2 == arity {
            Term::apps(Term::fun(ticked_name(name)), args())
        } else {
            self.wrappers.insert((name.to_string(), false, m + 1));
            Term::apps(Term::fun(partial_name(name, m + 1)), args())
        };
        let wname = if is_con { con_wrapper_name(name, m) } else { partial_name(name, m) };
        let mut lhs: Vec<Pattern> = vars.iter().map(Pattern::var).collect();
        lhs.push(Pattern::var(CLOCK));
        let mut d = aux_def(wname.clone(), ty, m + 2, Origin::Auxiliary);
        d.equations.push(crate::syntax::ast::Equation {
            fun: wname.clone(),
            lhs,
            rhs: Term::pair(value, Term::var(CLOCK)),
            span: Default::default(),
        });
        self.funs.insert(wname, d);
        Ok(())
    }
}

/// Ticks a simply typed, lambda-free program. The result is simply typed
/// again.
pub fn tick_program(prog: &Program) -> Result<TickedProgram, TickError> {
    let mut t = Ticker { prog, funs: IndexMap::new(), wrappers: BTreeSet::new() };
    let mut names = BTreeMap::new();
    for def in prog.functions.values() {
        let ty = def.ty.as_ref().ok_or_else(|| TickError::Untyped(def.name.clone()))?;
        let sig = tick_signature(ty, def.arity).ok_or_else(|| TickError::Untyped(def.name.clone()))?;
        let name = ticked_name(&def.name);
        let mut d = FunDef::new(name.clone(), def.span);
        d.ty = Some(sig);
        d.declared_ty = true;
        d.arity = def.arity + 1;
        d.origin = def.origin;
        t.funs.insert(name.clone(), d);
        names.insert(def.name.clone(), name);
    }
    for def in prog.functions.values() {
        for k in 0..def.equations.len() {
            t.equation(def, k)?;
        }
    }
    let mut done = BTreeSet::new();
    while let Some(w) = t.wrappers.iter().find(|w| !done.contains(*w)).cloned() {
        t.wrapper(&w.0, w.1, w.2)?;
        done.insert(w);
    }
    let program = Program { datatypes: prog.datatypes.clone(), functions: t.funs };
    Ok(TickedProgram { program: simple::typecheck(&program)?, names })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TickedRun {
    /// Result and clock, when evaluation finished.
    pub value: Option<(Value, u64)>,
    pub status: Status,
}

impl TickedProgram {
    /// Runs the ticked version of `f` from the zero clock.
    pub fn run(&self, f: &str, args: &[Value], fuel: u64) -> Result<TickedRun, EvalError> {
        let name = self.names.get(f).ok_or_else(|| EvalError::UnknownFunction(f.to_string()))?;
        let mut args = args.to_vec();
        args.push(Value::nat(0));
        let r = call(&self.program, name, &args, fuel)?;
        let value = r.value.and_then(|v| match &v {
            Value::Con(c, vs) if c == PAIR && vs.len() == 2 => Some((vs[0].clone(), nat_value(&vs[1])?)),
            _ => None,
        });
        Ok(TickedRun { value, status: r.status })
    }
}

fn nat_value(v: &Value) -> Option<u64> {
    let mut n = 0;
    let mut v = v;
    loop {
        match v {
            Value::Con(c, vs) if c == SUCC && vs.len() == 1 => {
                n += 1;
                v = &vs[0];
            }
            Value::Con(_, vs) if vs.is_empty() => return Some(n),
            _ => return None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClockError {
    #[error("`{0}` does not have a ticked signature")]
    NotTicked(String),
    #[error(transparent)]
    Index(#[from] IndexError),
}

/// Running time bound read off the sized type of a ticked function: the
/// clock component of its result, with symbols interpreted and the input
/// clock set to zero.
pub fn clock_bound(name: &str, ty: &Type, interp: &Interpretation) -> Result<IndexTerm, ClockError> {
    let bad = || ClockError::NotTicked(name.to_string());
    let (doms, result) = ty.body.uncurry();
    let clock = match doms.last().map(|d| &d.body) {
        Some(Monotype::Base { index, .. }) => index.as_var().cloned().ok_or_else(bad)?,
        _ => return Err(bad()),
    };
    let Monotype::Product(_, c) = result else { return Err(bad()) };
    let Some(index) = c.index() else { return Err(bad()) };
    let mut theta = IndexSubst::new();
    theta.insert(clock, IndexTerm::zero());
    let p = index.substitute(&theta).to_poly(interp)?;
    Ok(IndexTerm::from_poly(&p))
}

/// The clock variable of a ticked signature, if any.
pub fn clock_var(ty: &Type) -> Option<&IVar> {
    match ty.body.uncurry().0.last().map(|d| &d.body) {
        Some(Monotype::Base { index, .. }) => index.as_var(),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{lift::lambda_lift, parse_program, parse_simple_type, pretty};

    fn ticked(src: &str) -> (Program, TickedProgram) {
        let p = simple::typecheck(&lambda_lift(&parse_program(src).unwrap())).unwrap();
        let tp = tick_program(&p).unwrap();
        (p, tp)
    }

    fn ty(s: &str) -> SimpleType {
        parse_simple_type(s).unwrap()
    }

    #[test]
    fn tick_type_cases() {
        assert_eq!(tick_type(&ty("Nat")), ty("Nat"));
        assert_eq!(tick_type(&ty("Nat -> Nat")), ty("Nat -> Nat -> (Nat, Nat)"));
        assert_eq!(tick_type(&ty("(Nat -> Nat) -> Nat")), ty("(Nat -> Nat -> (Nat, Nat)) -> Nat -> (Nat, Nat)"));
        assert_eq!(tick_signature(&ty("Nat -> Nat"), 1).unwrap(), ty("Nat -> Nat -> (Nat, Nat)"));
    }

    const REVERSE: &str = "rev [] ys = ys\nrev (x : xs) ys = rev xs (x : ys)\nreverse xs = rev xs []\n";

    #[test]
    fn reverse_equations() {
        let (_, tp) = ticked(REVERSE);
        let rev = tp.program.function("rev#").unwrap();
        assert_eq!(pretty::equation(&rev.equations[0]), "rev# [] ys c# = (ys, Succ c#)");
        let reverse = tp.program.function("reverse#").unwrap();
        assert_eq!(pretty::equation(&reverse.equations[0]), "reverse# xs c# = rev# xs [] (Succ c#)");
        assert_eq!(tp.program.functions.len(), 2);
    }

    #[test]
    fn several_calls_use_auxiliaries() {
        let (_, tp) = ticked("double 0 = 0\ndouble (Succ n) = Succ (Succ (double n))\nquad n = double (double n)\nboth n = (double n, double n)\n");
        let both = tp.program.function("both#").unwrap();
        assert_eq!(pretty::equation(&both.equations[0]), "both# n c# = both#1_1 n (double# n (Succ c#))");
        let aux = tp.program.function("both#1_1").unwrap();
        assert!(aux.is_cost_free());
        assert_eq!(pretty::equation(&aux.equations[0]), "both#1_1 n (v#1, c#1) = both#1_2 v#1 (double# n c#1)");
        let quad = tp.program.function("quad#").unwrap();
        assert_eq!(pretty::equation(&quad.equations[0]), "quad# n c# = quad#1_1 (double# n (Succ c#))");
    }

    fn exact(src: &str, f: &str, inputs: Vec<Vec<Value>>) {
        let (p, tp) = ticked(src);
        for args in inputs {
            let r = call(&p, f, &args, 100_000).unwrap();
            let t = tp.run(f, &args, 100_000).unwrap();
            let (v, clock) = t.value.unwrap();
            assert_eq!(Some(v), r.value);
            assert_eq!(clock, r.steps, "{f} on {args:?}");
        }
    }

    fn nats(n: u64) -> Value {
        Value::list((0..n).map(Value::nat).collect())
    }

    #[test]
    fn clock_counts_firings() {
        exact(REVERSE, "reverse", (0..8).map(|n| vec![nats(n)]).collect());
        let hof = "map f [] = []\nmap f (x : xs) = f x : map f xs\n\
                   add 0 m = m\nadd (Succ n) m = Succ (add n m)\n\
                   incs xs = map Succ xs\nadds xs = map (add 2) xs\n\
                   twice f x = f (f x)\nquad x = twice (twice (add 1)) x\n";
        exact(hof, "incs", (0..6).map(|n| vec![nats(n)]).collect());
        exact(hof, "adds", (0..6).map(|n| vec![nats(n)]).collect());
        exact(hof, "quad", (0..6).map(|n| vec![Value::nat(n)]).collect());
    }

    #[test]
    fn partial_applications_get_wrappers() {
        let src = "add3 x y z = x\nfirst xs = map (add3) xs\nmap f [] = []\nmap f (x : xs) = f x : map f xs\n";
        let (_, tp) = ticked(src);
        assert!(tp.program.function("add3#0").is_some());
        assert!(tp.program.function("add3#1").is_some());
        assert_eq!(tp.program.function("first#").unwrap().ty().to_string(), "List a -> Nat -> (List (b -> Nat -> (c -> Nat -> (a, Nat), Nat)), Nat)");
    }

    #[test]
    fn clock_bound_of_declared_type() {
        let ty = crate::syntax::parse_sized_type("forall i k. L i a -> Nat k -> (L i a, Nat (i + k + 2))").unwrap();
        let b = clock_bound("reverse#", &ty, &Interpretation::new()).unwrap();
        assert_eq!(b.to_string(), "i + 2");
    }
}
