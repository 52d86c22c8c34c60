//! Simple type inference by unification, one call-graph component at a time.
//!
//! Declared signatures are trusted (their type variables are rigid while
//! checking the function and instantiated at each use); undeclared functions
//! are monomorphic within their component and generalized afterwards. Every
//! term and pattern node gets its type recorded.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::ast::*;
use super::callgraph::CallGraph;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TypeError {
    #[error("{span}: type mismatch in {context}: expected `{expected}`, found `{actual}`")]
    Mismatch { span: Span, expected: String, actual: String, context: String },
    #[error("{span}: infinite type `{var}` = `{ty}`")]
    Occurs { span: Span, var: String, ty: String },
    #[error("{span}: `{fun}` has {arity} parameters but its type `{ty}` allows fewer")]
    TooManyParameters { span: Span, fun: String, arity: usize, ty: String },
}

fn is_meta(v: &str) -> bool {
    v.starts_with('?')
}

#[derive(Default)]
struct Unifier {
    subst: BTreeMap<String, SimpleType>,
    counter: usize,
}

impl Unifier {
    fn fresh(&mut self) -> SimpleType {
        self.counter += 1;
        SimpleType::Var(format!("?{}", self.counter))
    }

    fn zonk(&self, t: &SimpleType) -> SimpleType {
        match t {
            SimpleType::Var(v) => match self.subst.get(v) {
                Some(u) => self.zonk(u),
                None => t.clone(),
            },
            SimpleType::Base { name, args } => SimpleType::Base { name: name.clone(), args: args.iter().map(|a| self.zonk(a)).collect() },
            SimpleType::Product(a, b) => SimpleType::product(self.zonk(a), self.zonk(b)),
            SimpleType::Arrow(a, b) => SimpleType::arrow(self.zonk(a), self.zonk(b)),
        }
    }

    fn unify(&mut self, expected: &SimpleType, actual: &SimpleType, span: Span, context: &str) -> Result<(), TypeError> {
        let e = self.zonk(expected);
        let a = self.zonk(actual);
        let mismatch = |u: &Self| TypeError::Mismatch {
            span,
            expected: u.zonk(expected).to_string(),
            actual: u.zonk(actual).to_string(),
            context: context.to_string(),
        };
        match (&e, &a) {
            (SimpleType::Var(x), SimpleType::Var(y)) if x == y => Ok(()),
            (SimpleType::Var(x), t) | (t, SimpleType::Var(x)) if is_meta(x) => {
                let mut fv = BTreeSet::new();
                t.type_vars(&mut fv);
                if fv.contains(x) {
                    return Err(TypeError::Occurs { span, var: x.clone(), ty: t.to_string() });
                }
                self.subst.insert(x.clone(), t.clone());
                Ok(())
            }
            (SimpleType::Base { name: n1, args: a1 }, SimpleType::Base { name: n2, args: a2 }) if n1 == n2 && a1.len() == a2.len() => {
                for (x, y) in a1.iter().zip(a2) {
                    self.unify(x, y, span, context).map_err(|_| mismatch(self))?;
                }
                Ok(())
            }
            (SimpleType::Product(a1, b1), SimpleType::Product(a2, b2)) | (SimpleType::Arrow(a1, b1), SimpleType::Arrow(a2, b2)) => {
                self.unify(a1, a2, span, context).map_err(|_| mismatch(self))?;
                self.unify(b1, b2, span, context).map_err(|_| mismatch(self))
            }
            _ => Err(mismatch(self)),
        }
    }

    /// Replaces the (rigid) type variables of a scheme by fresh metas.
    fn instantiate(&mut self, t: &SimpleType) -> SimpleType {
        let mut vs = BTreeSet::new();
        t.type_vars(&mut vs);
        let s: BTreeMap<String, SimpleType> = vs.into_iter().filter(|v| !is_meta(v)).map(|v| (v, self.fresh())).collect();
        t.subst(&s)
    }
}

struct Checker<'a> {
    prog: &'a Program,
    u: Unifier,
    /// Types of functions: schemes for finished ones, metas for the current component.
    env: BTreeMap<String, (SimpleType, bool)>,
}

impl Checker<'_> {
    fn pattern(&mut self, p: &mut Pattern, expected: &SimpleType, vars: &mut BTreeMap<String, SimpleType>) -> Result<(), TypeError> {
        match &mut p.kind {
            PatternKind::Var(v) => {
                vars.insert(v.clone(), expected.clone());
            }
            PatternKind::Con(c, args) => {
                let info = self.prog.constructor(c).expect("constructors are resolved");
                let ty = self.u.instantiate(&info.ty());
                let (arg_tys, res) = ty.uncurry(args.len()).expect("pattern arity is checked");
                let (arg_tys, res): (Vec<SimpleType>, SimpleType) = (arg_tys.into_iter().cloned().collect(), res.clone());
                self.u.unify(expected, &res, p.span, &format!("pattern `{c}`"))?;
                for (a, t) in args.iter_mut().zip(arg_tys) {
                    self.pattern(a, &t, vars)?;
                }
            }
        }
        p.ty = Some(expected.clone());
        Ok(())
    }

    fn term(&mut self, t: &mut Term, vars: &BTreeMap<String, SimpleType>) -> Result<SimpleType, TypeError> {
        let ty = match &mut t.kind {
            TermKind::Var(v) => vars.get(v).cloned().expect("variables are resolved"),
            TermKind::Fun(f) => {
                let (ty, poly) = self.env.get(f).cloned().expect("functions are resolved");
                if poly {
                    self.u.instantiate(&ty)
                } else {
                    ty
                }
            }
            TermKind::Con(c) => {
                let info = self.prog.constructor(c).expect("constructors are resolved");
                self.u.instantiate(&info.ty())
            }
            TermKind::App(f, a) => {
                let tf = self.term(f, vars)?;
                let ta = self.term(a, vars)?;
                let res = self.u.fresh();
                let span = a.span;
                self.u.unify(&tf, &SimpleType::arrow(ta, res.clone()), span, "application")?;
                res
            }
            TermKind::Lam(params, body) => {
                let mut inner = vars.clone();
                let ps: Vec<SimpleType> = params.iter().map(|_| self.u.fresh()).collect();
                for (p, ty) in params.iter().zip(&ps) {
                    inner.insert(p.clone(), ty.clone());
                }
                let b = self.term(body, &inner)?;
                SimpleType::arrows(ps, b)
            }
        };
        t.ty = Some(ty.clone());
        Ok(ty)
    }

    fn equation(&mut self, eq: &mut Equation, fty: &SimpleType, fun: &FunDef) -> Result<(), TypeError> {
        let k = eq.lhs.len();
        let (args, res) = match fty.uncurry(k) {
            Some((a, r)) => (a.into_iter().cloned().collect::<Vec<_>>(), r.clone()),
            None => {
                // undeclared function types are metas: refine them
                let args: Vec<SimpleType> = (0..k).map(|_| self.u.fresh()).collect();
                let res = self.u.fresh();
                let shape = SimpleType::arrows(args.clone(), res.clone());
                self.u.unify(fty, &shape, eq.span, &format!("definition of `{}`", fun.name)).map_err(|_| TypeError::TooManyParameters {
                    span: eq.span,
                    fun: fun.name.clone(),
                    arity: k,
                    ty: self.u.zonk(fty).to_string(),
                })?;
                (args, res)
            }
        };
        let mut vars = BTreeMap::new();
        for (p, t) in eq.lhs.iter_mut().zip(&args) {
            self.pattern(p, t, &mut vars)?;
        }
        let span = eq.rhs.span;
        let got = self.term(&mut eq.rhs, &vars)?;
        self.u.unify(&res, &got, span, &format!("right-hand side of `{}`", fun.name))
    }
}

fn zonk_pattern(u: &Unifier, p: &mut Pattern, fin: &dyn Fn(SimpleType) -> SimpleType) {
    p.ty = p.ty.as_ref().map(|t| fin(u.zonk(t)));
    if let PatternKind::Con(_, args) = &mut p.kind {
        args.iter_mut().for_each(|a| zonk_pattern(u, a, fin));
    }
}

fn zonk_term(u: &Unifier, t: &mut Term, fin: &dyn Fn(SimpleType) -> SimpleType) {
    t.ty = t.ty.as_ref().map(|x| fin(u.zonk(x)));
    match &mut t.kind {
        TermKind::App(f, a) => {
            zonk_term(u, f, fin);
            zonk_term(u, a, fin);
        }
        TermKind::Lam(_, b) => zonk_term(u, b, fin),
        _ => {}
    }
}

/// Names for leftover metas: `a`, `b`, ... skipping `taken`.
fn generalizer(metas: &[String], taken: &BTreeSet<String>) -> BTreeMap<String, SimpleType> {
    let mut out = BTreeMap::new();
    let mut names = (0..).map(|k: usize| {
        let letter = (b'a' + (k % 26) as u8) as char;
        if k < 26 {
            letter.to_string()
        } else {
            format!("{letter}{}", k / 26)
        }
    });
    for m in metas {
        let name = names.by_ref().find(|n| !taken.contains(n)).unwrap();
        out.insert(m.clone(), SimpleType::Var(name));
    }
    out
}

fn metas_in_order(t: &SimpleType, out: &mut Vec<String>) {
    match t {
        SimpleType::Var(v) if is_meta(v) => {
            if !out.contains(v) {
                out.push(v.clone());
            }
        }
        SimpleType::Var(_) => {}
        SimpleType::Base { args, .. } => args.iter().for_each(|a| metas_in_order(a, out)),
        SimpleType::Product(a, b) | SimpleType::Arrow(a, b) => {
            metas_in_order(a, out);
            metas_in_order(b, out);
        }
    }
}

/// Infers and records simple types for the whole program.
pub fn typecheck(prog: &Program) -> Result<Program, TypeError> {
    let mut out = prog.clone();
    let graph = CallGraph::new(prog);
    let mut ck = Checker { prog, u: Unifier::default(), env: BTreeMap::new() };
    for f in prog.functions.values() {
        if f.declared_ty {
            ck.env.insert(f.name.clone(), (f.ty().clone(), true));
        }
    }
    for comp in graph.sccs() {
        for name in &comp {
            if !ck.env.contains_key(name) {
                let m = ck.u.fresh();
                ck.env.insert(name.clone(), (m, false));
            }
        }
        for name in &comp {
            let fty = ck.env[name].0.clone();
            let f = out.functions.get_mut(name).unwrap();
            if f.declared_ty && f.ty().leading_arrows() < f.arity {
                return Err(TypeError::TooManyParameters { span: f.span, fun: name.clone(), arity: f.arity, ty: f.ty().to_string() });
            }
            let snapshot = f.clone();
            for eq in f.equations.iter_mut() {
                ck.equation(eq, &fty, &snapshot)?;
            }
        }
        // generalize the component's undeclared functions
        for name in &comp {
            let f = out.functions.get_mut(name).unwrap();
            let fty = ck.u.zonk(&ck.env[name].0);
            let mut taken = BTreeSet::new();
            fty.type_vars(&mut taken);
            let mut order = Vec::new();
            metas_in_order(&fty, &mut order);
            let mut inner = Vec::new();
            for eq in &f.equations {
                collect_metas_term(&ck.u, &eq.rhs, &mut inner);
                eq.lhs.iter().for_each(|p| collect_metas_pattern(&ck.u, p, &mut inner));
            }
            for m in inner {
                if !order.contains(&m) {
                    order.push(m);
                }
            }
            let gen = generalizer(&order, &taken);
            let fin = |t: SimpleType| t.subst(&gen);
            for eq in f.equations.iter_mut() {
                eq.lhs.iter_mut().for_each(|p| zonk_pattern(&ck.u, p, &fin));
                zonk_term(&ck.u, &mut eq.rhs, &fin);
            }
            let final_ty = fty.subst(&gen);
            if !f.declared_ty {
                f.ty = Some(final_ty.clone());
                ck.env.insert(name.clone(), (final_ty, true));
            }
        }
    }
    Ok(out)
}

fn collect_metas_term(u: &Unifier, t: &Term, out: &mut Vec<String>) {
    if let Some(ty) = &t.ty {
        metas_in_order(&u.zonk(ty), out);
    }
    match &t.kind {
        TermKind::App(f, a) => {
            collect_metas_term(u, f, out);
            collect_metas_term(u, a, out);
        }
        TermKind::Lam(_, b) => collect_metas_term(u, b, out),
        _ => {}
    }
}

fn collect_metas_pattern(u: &Unifier, p: &Pattern, out: &mut Vec<String>) {
    if let Some(ty) = &p.ty {
        metas_in_order(&u.zonk(ty), out);
    }
    if let PatternKind::Con(_, args) = &p.kind {
        args.iter().for_each(|a| collect_metas_pattern(u, a, out));
    }
}

/// Simple type of a closed term in the context of a typed program.
pub fn type_of_term(prog: &Program, t: &mut Term) -> Result<SimpleType, TypeError> {
    let mut ck = Checker { prog, u: Unifier::default(), env: BTreeMap::new() };
    for f in prog.functions.values() {
        if let Some(ty) = &f.ty {
            ck.env.insert(f.name.clone(), (ty.clone(), true));
        }
    }
    let ty = ck.term(t, &BTreeMap::new())?;
    let ty = ck.u.zonk(&ty);
    let mut order = Vec::new();
    metas_in_order(&ty, &mut order);
    collect_metas_term(&ck.u, t, &mut order);
    let gen = generalizer(&order, &BTreeSet::new());
    let fin = |x: SimpleType| x.subst(&gen);
    zonk_term(&ck.u, t, &fin);
    Ok(ty.subst(&gen))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::lift::lambda_lift;
    use crate::syntax::parse_program;
    use crate::syntax::parser::parse_term;

    fn typed(src: &str) -> Program {
        typecheck(&lambda_lift(&parse_program(src).unwrap())).unwrap()
    }

    #[test]
    fn infers_append_and_reverse() {
        let p = typed("append [] ys = ys\nappend (x : xs) ys = x : append xs ys\nrev [] ys = ys\nrev (x : xs) ys = rev xs (x : ys)\nreverse xs = rev xs []");
        assert_eq!(p.functions["append"].ty().to_string(), "List a -> List a -> List a");
        assert_eq!(p.functions["reverse"].ty().to_string(), "List a -> List a");
        let eq = &p.functions["append"].equations[1];
        assert_eq!(eq.rhs.ty().to_string(), "List a");
        assert_eq!(eq.lhs[0].ty().to_string(), "List a");
    }

    #[test]
    fn infers_higher_order() {
        let p = typed("foldr f z [] = z\nfoldr f z (x : xs) = f x (foldr f z xs)\nsum xs = foldr plus 0 xs\nplus 0 m = m\nplus (Succ n) m = Succ (plus n m)");
        assert_eq!(p.functions["foldr"].ty().to_string(), "(a -> b -> b) -> b -> List a -> b");
        assert_eq!(p.functions["sum"].ty().to_string(), "List Nat -> Nat");
    }

    #[test]
    fn lifted_lambdas_are_typed() {
        let p = typed("twice f x = f (f x)\nadd2 n = twice (\\y. Succ y) n");
        assert_eq!(p.functions["add2_lam1"].ty().to_string(), "Nat -> Nat");
        assert_eq!(p.functions["twice"].ty().to_string(), "(a -> a) -> a -> a");
    }

    #[test]
    fn declared_signatures_are_checked() {
        let prog = lambda_lift(&parse_program("f :: Nat -> List Nat\nf x = x").unwrap());
        let e = typecheck(&prog).unwrap_err();
        match e {
            TypeError::Mismatch { expected, actual, .. } => {
                assert_eq!(expected, "List Nat");
                assert_eq!(actual, "Nat");
            }
            other => panic!("unexpected {other}"),
        }
        let prog = lambda_lift(&parse_program("f :: a -> Nat\nf x = x").unwrap());
        assert!(typecheck(&prog).is_err());
    }

    #[test]
    fn closed_terms() {
        let p = typed("twice f x = f (f x)");
        let mut t = parse_term("twice Succ", &p).unwrap();
        assert_eq!(type_of_term(&p, &mut t).unwrap().to_string(), "Nat -> Nat");
        let mut bad = parse_term("Succ []", &p).unwrap();
        assert!(type_of_term(&p, &mut bad).is_err());
    }
}
