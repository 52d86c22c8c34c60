//! Footprints, syntax-directed inference of right-hand sides, and checking
//! of whole programs.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use super::templates::{constructor_type, sized_identity};
use super::{CheckError, Declarations, Mode};
use crate::constraint::{Constraint, ConstraintSet, Provenance};
use crate::index::{leq_semantic, IVar, IndexSubst, IndexTerm, Interpretation, Verdict};
use crate::sized::{is_symbol_free, MetaContext, Monotype, SizedError, Type};
use crate::syntax::ast::{Equation, FunDef, Origin, Pattern, PatternKind, Program, SimpleType, Span, Term, TermKind, PAIR};
use crate::syntax::callgraph::CallGraph;

/// Typing of a left-hand side: the variables it binds, the type left for the
/// right-hand side, and the index variables in scope.
#[derive(Clone, Debug, PartialEq)]
pub struct Footprint {
    pub context: Vec<(String, Type)>,
    pub ty: Monotype,
    pub vars: Vec<IVar>,
}

/// Outcome of checking every function of a program.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProgramCheck {
    pub constraints: ConstraintSet,
    /// Functions that could not be checked, with the first error met. A
    /// function calling a failed one fails too.
    pub errors: BTreeMap<String, CheckError>,
}

impl ProgramCheck {
    pub fn failed(&self, f: &str) -> bool {
        self.errors.contains_key(f)
    }
}

fn sized(span: Span) -> impl Fn(SizedError) -> CheckError {
    move |error| CheckError::Sized { span, error }
}

fn ordered_vars(t: &IndexTerm, out: &mut Vec<IVar>) {
    match t {
        IndexTerm::Var(v) => {
            if !out.contains(v) {
                out.push(v.clone());
            }
        }
        IndexTerm::App(_, args) => args.iter().for_each(|a| ordered_vars(a, out)),
    }
}

fn type_vars_ordered(t: &Type, out: &mut Vec<IVar>) {
    let acc = RefCell::new(Vec::new());
    t.body.map_index(&|ix| {
        ordered_vars(ix, &mut acc.borrow_mut());
        ix.clone()
    });
    for v in acc.into_inner() {
        if !t.bound.contains(&v) && !out.contains(&v) {
            out.push(v);
        }
    }
}

/// Strips the quantifier prefix with fresh rigid variables.
fn strip(cx: &mut MetaContext, t: &Type) -> Monotype {
    let theta: IndexSubst = t.bound.iter().map(|b| (b.clone(), IndexTerm::Var(cx.fresh_rigid(b)))).collect();
    t.body.subst(&theta)
}

fn unsized_vars(p: &Pattern, ctx: &mut Vec<(String, Type)>) {
    match &p.kind {
        PatternKind::Var(x) => ctx.push((x.clone(), Type::mono(Monotype::Unsized(p.ty().clone())))),
        PatternKind::Con(_, args) => args.iter().for_each(|a| unsized_vars(a, ctx)),
    }
}

struct Lhs<'a> {
    prog: &'a Program,
    fun: &'a str,
    ctx: Vec<(String, Type)>,
}

impl Lhs<'_> {
    /// Matches `p` against `dom`; returns the refinement of the index
    /// variables of `dom` it determines.
    fn pattern(&mut self, cx: &mut MetaContext, p: &Pattern, dom: &Monotype) -> Result<IndexSubst, CheckError> {
        let PatternKind::Con(c, args) = &p.kind else {
            let PatternKind::Var(x) = &p.kind else { unreachable!() };
            self.ctx.push((x.clone(), Type::mono(dom.clone())));
            return Ok(IndexSubst::new());
        };
        match dom {
            Monotype::Unsized(_) => {
                unsized_vars(p, &mut self.ctx);
                Ok(IndexSubst::new())
            }
            Monotype::Product(a, b) if c == PAIR => {
                let mut theta = self.pattern(cx, &args[0], a)?;
                theta.extend(self.pattern(cx, &args[1], b)?);
                Ok(theta)
            }
            Monotype::Base { params, index, .. } => {
                let Some(i) = index.as_var() else {
                    return Err(CheckError::NonCanonicalDeclaration {
                        name: self.fun.to_string(),
                        error: crate::sized::CanonicalError::NonVariableIndex { index: index.to_string() },
                    });
                };
                let info = self.prog.constructor(c).ok_or_else(|| CheckError::MissingDeclaration { name: c.clone() })?;
                let s: BTreeMap<String, SimpleType> = info.params.iter().cloned().zip(params.iter().cloned()).collect();
                let mut ty = strip(cx, &constructor_type(&info).subst_simple(&s));
                for a in args {
                    let Monotype::Arrow(d, rest) = ty else { unreachable!("constructor arity checked") };
                    let theta = self.pattern(cx, a, &d.body)?;
                    ty = rest.subst(&theta);
                }
                let size = ty.index().cloned().expect("constructor result is a base type");
                Ok([(i.clone(), size)].into_iter().collect())
            }
            _ => Err(CheckError::PatternNotBase { span: p.span, ty: dom.to_string() }),
        }
    }
}

/// Footprint of an equation of `fun` against its declaration.
pub fn footprint(prog: &Program, decls: &Declarations, cx: &mut MetaContext, fun: &str, eq: &Equation) -> Result<Footprint, CheckError> {
    let decl = decls.get(fun).ok_or_else(|| CheckError::MissingDeclaration { name: fun.to_string() })?;
    let mut ty = strip(cx, decl);
    let mut lhs = Lhs { prog, fun, ctx: Vec::new() };
    for p in &eq.lhs {
        let Monotype::Arrow(d, rest) = ty else {
            return Err(CheckError::PatternNotBase { span: p.span, ty: ty.to_string() });
        };
        if d.is_mono() {
            let theta = lhs.pattern(cx, p, &d.body)?;
            ty = rest.subst(&theta);
        } else {
            match &p.kind {
                PatternKind::Var(x) => lhs.ctx.push((x.clone(), (*d).clone())),
                PatternKind::Con(..) => return Err(CheckError::PatternNotBase { span: p.span, ty: d.to_string() }),
            }
            ty = *rest;
        }
    }
    let mut vars = Vec::new();
    for (_, t) in &lhs.ctx {
        type_vars_ordered(t, &mut vars);
    }
    Ok(Footprint { context: lhs.ctx, ty, vars })
}

fn head_type(prog: &Program, decls: &Declarations, cx: &mut MetaContext, ctx: &[(String, Type)], head: &Term) -> Result<Monotype, CheckError> {
    Ok(match &head.kind {
        TermKind::Var(x) => {
            let t = ctx.iter().rev().find(|(y, _)| y == x).map(|(_, t)| t.clone());
            match t {
                Some(t) => cx.instantiate(&t),
                None => Monotype::Unsized(head.ty().clone()),
            }
        }
        TermKind::Fun(f) => {
            let decl = decls.get(f).ok_or_else(|| CheckError::MissingDeclaration { name: f.clone() })?;
            let mut s = BTreeMap::new();
            decl.skeleton().match_into(head.ty(), &mut s);
            cx.instantiate(&decl.subst_simple(&s))
        }
        TermKind::Con(c) if c == PAIR => cx.instantiate(&sized_identity(head.ty())),
        TermKind::Con(c) => {
            let info = prog.constructor(c).ok_or_else(|| CheckError::MissingDeclaration { name: c.clone() })?;
            let mut s = BTreeMap::new();
            info.ty().match_into(head.ty(), &mut s);
            cx.instantiate(&constructor_type(&info).subst_simple(&s))
        }
        TermKind::Lam(..) | TermKind::App(..) => Monotype::Unsized(head.ty().clone()),
    })
}

fn retag(cx: &mut MetaContext, from: usize, rule: &str) {
    for c in &mut cx.constraints[from..] {
        c.origin.rule = rule.to_string();
    }
}

/// Sized type of a (lambda-free, simply typed) term, emitting the
/// inequalities its applications require into `cx`.
pub fn infer_term(prog: &Program, decls: &Declarations, cx: &mut MetaContext, ctx: &[(String, Type)], t: &Term) -> Result<Monotype, CheckError> {
    let (head, args) = t.spine();
    if let TermKind::Fun(f) = &head.kind {
        if let Some(def) = prog.function(f).filter(|d| d.origin == Origin::Continuation && d.arity == args.len()) {
            return infer_inlined(prog, decls, cx, ctx, def, &args);
        }
    }
    let mut ty = head_type(prog, decls, cx, ctx, head)?;
    for a in args {
        ty = match ty {
            Monotype::Arrow(dom, cod) => {
                let theta: IndexSubst =
                    dom.bound.iter().map(|b| (b.clone(), IndexTerm::Var(cx.open_local(b)))).collect();
                let param = dom.body.subst(&theta);
                let r = infer_term(prog, decls, cx, ctx, a).and_then(|at| {
                    let saved = cx.origin.span;
                    cx.origin.span = a.span;
                    let from = cx.constraints.len();
                    let r = cx.sub_mono(&at, &param).map_err(sized(a.span));
                    retag(cx, from, "arg");
                    cx.origin.span = saved;
                    r
                });
                cx.close_locals(dom.bound.len());
                r?;
                *cod
            }
            Monotype::Unsized(SimpleType::Arrow(d, c)) => {
                let at = infer_term(prog, decls, cx, ctx, a)?;
                cx.sub_mono(&at, &Monotype::Unsized(*d)).map_err(sized(a.span))?;
                Monotype::Unsized(*c)
            }
            other => {
                return Err(CheckError::Sized {
                    span: a.span,
                    error: SizedError::SkeletonMismatch(other.to_string(), "function".into()),
                })
            }
        };
    }
    Ok(ty)
}

fn bind_pattern(p: &Pattern, m: Monotype, out: &mut Vec<(String, Type)>) -> Result<(), CheckError> {
    match (&p.kind, m) {
        (PatternKind::Var(x), m) => out.push((x.clone(), Type::mono(m))),
        (PatternKind::Con(c, ps), Monotype::Product(a, b)) if c == PAIR && ps.len() == 2 => {
            bind_pattern(&ps[0], *a, out)?;
            bind_pattern(&ps[1], *b, out)?;
        }
        (PatternKind::Con(c, ps), Monotype::Unsized(SimpleType::Product(a, b))) if c == PAIR && ps.len() == 2 => {
            bind_pattern(&ps[0], Monotype::Unsized(*a), out)?;
            bind_pattern(&ps[1], Monotype::Unsized(*b), out)?;
        }
        (_, m) => return Err(CheckError::PatternNotBase { span: p.span, ty: m.to_string() }),
    }
    Ok(())
}

/// A saturated continuation call is typed like a `let`: the arguments are
/// bound to the variables of its only left-hand side and its right-hand
/// side is inferred in that context.
fn infer_inlined(
    prog: &Program,
    decls: &Declarations,
    cx: &mut MetaContext,
    ctx: &[(String, Type)],
    def: &FunDef,
    args: &[&Term],
) -> Result<Monotype, CheckError> {
    let [eq] = def.equations.as_slice() else {
        return Err(CheckError::MissingDeclaration { name: def.name.clone() });
    };
    let mut inner = Vec::new();
    for (p, a) in eq.lhs.iter().zip(args) {
        let m = infer_term(prog, decls, cx, ctx, a)?;
        bind_pattern(p, cx.zonk_mono(&m), &mut inner)?;
    }
    infer_term(prog, decls, cx, &inner, &eq.rhs)
}

fn existential(fun: &str, eq: usize, k: usize) -> String {
    format!("J_{fun}_{eq}_{k}")
}

/// Constraints under which equation `eq_index` of `fun` is well typed; in
/// semantic mode they are decided right away and an undecided one is an
/// error. Placeholders left open become existential symbols `J_...` over
/// the footprint variables.
pub fn check_equation(
    prog: &Program,
    decls: &Declarations,
    fun: &str,
    eq_index: usize,
    eq: &Equation,
    mode: Mode,
) -> Result<Vec<Constraint>, CheckError> {
    let mut cx = MetaContext::new();
    cx.origin = Provenance { function: fun.to_string(), equation: eq_index, span: eq.span, rule: String::new() };
    let fp = footprint(prog, decls, &mut cx, fun, eq)?;
    let rhs = infer_term(prog, decls, &mut cx, &fp.context, &eq.rhs)?;
    cx.origin.span = eq.rhs.span;
    let from = cx.constraints.len();
    cx.sub_mono(&rhs, &fp.ty).map_err(sized(eq.rhs.span))?;
    retag(&mut cx, from, "result");
    let mut k = 0;
    for m in cx.unresolved() {
        k += 1;
        let args = fp.vars.iter().chain(cx.meta_scope(&m)).cloned().map(IndexTerm::Var).collect();
        cx.bind(m, IndexTerm::sym(existential(fun, eq_index, k), args));
    }
    let cs: Vec<Constraint> = cx
        .constraints
        .iter()
        .map(|c| Constraint { lhs: cx.zonk(&c.lhs), rhs: cx.zonk(&c.rhs), ..c.clone() })
        .collect();
    if let Mode::Semantic(interp) = mode {
        let expand = |t: &IndexTerm| {
            t.expand_symbols(&|name| match interp.get(name) {
                Some(s) => Some(s.as_term()),
                None if name.starts_with("J_") => Some(IndexTerm::zero()),
                None => None,
            })
        };
        for c in &cs {
            let (l, r) = (expand(&c.lhs), expand(&c.rhs));
            if leq_semantic(interp, &l, &r)? == Verdict::Unknown {
                return Err(CheckError::SubtypeFailure { lhs: l, rhs: r, origin: c.origin.clone() });
            }
        }
    }
    Ok(cs)
}

/// Checks every function against `decls`, collecting constraints tagged
/// with the call-graph component of their function.
pub fn check_program(prog: &Program, decls: &Declarations, mode: Mode) -> ProgramCheck {
    let graph = CallGraph::new(prog);
    let scc = graph.scc_index();
    let mut out = ProgramCheck::default();
    out.constraints.owners = decls.owners.clone();
    let mut per_fun: BTreeMap<String, Vec<Constraint>> = BTreeMap::new();
    for f in prog.functions.values().filter(|f| f.origin != Origin::Continuation) {
        let mut cs = Vec::new();
        for (k, eq) in f.equations.iter().enumerate() {
            match check_equation(prog, decls, &f.name, k, eq, mode) {
                Ok(more) => cs.extend(more),
                Err(e) => {
                    out.errors.insert(f.name.clone(), e);
                    break;
                }
            }
        }
        for c in &mut cs {
            c.scc = scc.get(&f.name).copied();
        }
        per_fun.insert(f.name.clone(), cs);
    }
    loop {
        let failed: BTreeSet<String> = out.errors.keys().cloned().collect();
        let mut changed = false;
        for f in prog.functions.keys() {
            if failed.contains(f) {
                continue;
            }
            if let Some(g) = graph.callees(f).find(|g| failed.contains(*g)) {
                out.errors.insert(f.clone(), CheckError::MissingDeclaration { name: g.clone() });
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    for f in prog.functions.keys() {
        if out.errors.contains_key(f) {
            continue;
        }
        for c in per_fun.remove(f).unwrap_or_default() {
            for s in c.symbols().into_keys() {
                if s.starts_with("J_") {
                    out.constraints.owners.entry(s).or_insert_with(|| f.clone());
                }
            }
            out.constraints.push(c);
        }
    }
    out
}

/// Symbol-free terms in polynomial normal form; others unchanged.
pub fn normalize_index(t: &IndexTerm) -> IndexTerm {
    if is_symbol_free(t) {
        if let Ok(p) = t.to_poly(&Interpretation::new()) {
            return IndexTerm::from_poly(&p);
        }
    }
    t.clone()
}

/// Sized type of a closed term under `decls` (usually instantiated by a
/// solution), generalizing over the sizes left open. Inequalities that do
/// not hold for all sizes make it fail.
pub fn infer_closed(prog: &Program, decls: &Declarations, t: &Term) -> Result<Type, CheckError> {
    let mut cx = MetaContext::new();
    cx.origin.rule = "closed".into();
    let m = infer_term(prog, decls, &mut cx, &[], t)?;
    let m = cx.zonk_mono(&m);
    let mut open = Vec::new();
    type_vars_ordered(&Type::mono(m.clone()), &mut open);
    let mut bound = Vec::new();
    open.retain(|v| cx.is_meta(v));
    for v in open {
        let r = IVar(format!("c{}", bound.len() + 1));
        cx.bind(v, IndexTerm::Var(r.clone()));
        bound.push(r);
    }
    let empty = Interpretation::new();
    for c in &cx.constraints {
        let (l, r) = (cx.zonk(&c.lhs), cx.zonk(&c.rhs));
        let decided = !l.vars().iter().chain(r.vars().iter()).any(|v| v.is_meta())
            && leq_semantic(&empty, &l, &r).map(|v| v == Verdict::Yes).unwrap_or(false);
        if !decided {
            return Err(CheckError::SubtypeFailure { lhs: l, rhs: r, origin: c.origin.clone() });
        }
    }
    let body = cx.zonk_mono(&m).map_index(&normalize_index);
    Ok(Type::forall(bound, body).pretty_names())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{lift::lambda_lift, parse_program, parser::parse_interpretation, parser::parse_term, simple};
    use crate::typecheck::{generate_templates, user_declarations};

    const APPEND: &str = "append [] ys = ys\nappend (x : xs) ys = x : append xs ys\n";

    fn prepare(src: &str) -> (Program, Declarations) {
        let p = simple::typecheck(&lambda_lift(&parse_program(src).unwrap())).unwrap();
        let d = generate_templates(&p, &user_declarations(&p)).unwrap();
        (p, d)
    }

    fn shown(cs: &[Constraint]) -> Vec<String> {
        cs.iter().map(|c| c.to_string()).collect()
    }

    #[test]
    fn append_constraints() {
        let (p, d) = prepare(APPEND);
        let f = &p.functions["append"];
        let c0 = check_equation(&p, &d, "append", 0, &f.equations[0], Mode::Generate).unwrap();
        let c1 = check_equation(&p, &d, "append", 1, &f.equations[1], Mode::Generate).unwrap();
        assert_eq!(c0.len(), 1);
        assert_eq!(c1.len(), 1);
        let re = |s: &str| s.replace(|c: char| c == '\'' || c.is_ascii_digit(), "");
        assert_eq!(re(&shown(&c0)[0]), re("i2'4 <= F1(0, i2'4)"));
        assert!(c1[0].lhs.to_string().starts_with("F1("), "{}", c1[0]);
        assert_eq!(c1[0].origin.rule, "result");
    }

    #[test]
    fn semantic_mode_decides_append() {
        let (p, d) = prepare(APPEND);
        let good = parse_interpretation("F1(i, j) = i + j").unwrap();
        let bad = parse_interpretation("F1(i, j) = i").unwrap();
        assert!(check_program(&p, &d, Mode::Semantic(&good)).errors.is_empty());
        let r = check_program(&p, &d, Mode::Semantic(&bad));
        assert!(matches!(r.errors.get("append"), Some(CheckError::SubtypeFailure { .. })));
    }

    #[test]
    fn footprint_refines_by_constructors() {
        let (p, d) = prepare("rev [] acc = acc\nrev (x : xs) acc = rev xs (x : acc)\n");
        let mut cx = MetaContext::new();
        let fp = footprint(&p, &d, &mut cx, "rev", &p.functions["rev"].equations[1]).unwrap();
        let names: Vec<&str> = fp.context.iter().map(|(x, _)| x.as_str()).collect();
        assert_eq!(names, ["x", "xs", "acc"]);
        assert!(matches!(fp.context[0].1.body, Monotype::Unsized(_)));
        assert_eq!(fp.vars.len(), 2);
        let Monotype::Base { index, .. } = &fp.ty else { panic!() };
        assert_eq!(index.symbols().len(), 1);
        assert!(index.to_string().contains(" + 1"), "{index}");
    }

    #[test]
    fn constructor_pattern_against_function_is_rejected() {
        let (p, _) = prepare("app f x = f x\n");
        let mut d = Declarations::default();
        d.insert("app", crate::syntax::parse_sized_type("(Nat -> Nat) -> Nat -> Nat").unwrap());
        let eq = Equation { lhs: vec![Pattern::con("Zero", vec![]), Pattern::var("x")], ..p.functions["app"].equations[0].clone() };
        let mut cx = MetaContext::new();
        assert!(matches!(footprint(&p, &d, &mut cx, "app", &eq), Err(CheckError::PatternNotBase { .. })));
    }

    const TWICE: &str = "twice ::: forall e j. (forall i. Nat i -> Nat (i + e)) -> Nat j -> Nat (j + e + e)\ntwice f x = f (f x)\n";

    #[test]
    fn twice_checks_against_its_declaration() {
        let (p, d) = prepare(TWICE);
        let r = check_program(&p, &d, Mode::Semantic(&Interpretation::new()));
        assert!(r.errors.is_empty(), "{:?}", r.errors);
    }

    #[test]
    fn twice_applied_to_successor() {
        let (p, d) = prepare(TWICE);
        let mut t = parse_term("twice Succ", &p).unwrap();
        simple::type_of_term(&p, &mut t).unwrap();
        assert_eq!(infer_closed(&p, &d, &t).unwrap().to_string(), "forall i. Nat i -> Nat (i + 2)");
    }

    #[test]
    fn higher_order_template_constraints() {
        let (p, d) = prepare("twice :: (Nat -> Nat) -> Nat -> Nat\ntwice f x = f (f x)\n");
        assert_eq!(
            d.get("twice").unwrap().to_string(),
            "forall i2 i3. (forall i1. Nat i1 -> Nat (F1(i1, i2))) -> Nat i3 -> Nat (F2(i2, i3))"
        );
        let r = check_program(&p, &d, Mode::Generate);
        assert_eq!(r.constraints.len(), 1);
        let c = &r.constraints.constraints[0];
        assert_eq!(c.lhs.symbols().len(), 1);
        assert!(c.lhs.to_string().starts_with("F1(F1("), "{c}");
        assert_eq!(c.scc, Some(0));
    }

    #[test]
    fn failure_propagates_to_callers() {
        let (p, mut d) = prepare("f :: Nat -> Nat\nf x = x\ng y = f y\n");
        d.insert("f", crate::syntax::parse_sized_type("forall i. Nat i -> Nat i").unwrap());
        let mut p2 = p.clone();
        let mut rhs = Term::nat(1);
        simple::type_of_term(&p, &mut rhs).unwrap();
        p2.functions.get_mut("f").unwrap().equations[0].rhs = rhs;
        let r = check_program(&p2, &d, Mode::Semantic(&Interpretation::new()));
        assert!(r.failed("f") && r.failed("g"));
    }
}
