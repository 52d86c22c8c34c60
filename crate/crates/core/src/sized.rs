//! Sized types: simple types whose base-type occurrences carry index terms,
//! with index quantification allowed left of arrows at any depth.
//!
//! This module also hosts [`MetaContext`], the matching engine shared by
//! subtyping and type inference. Quantified variables are instantiated by
//! placeholders (`?n`) that get bound by one-sided matching against the
//! opposite side of a comparison; canonical declarations expose bare
//! variables in every negative position, which is what makes this work.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::constraint::{Constraint, Provenance};
use crate::index::{leq_semantic, IVar, IndexError, IndexSubst, IndexSymbol, IndexTerm, Interpretation, Verdict};
use crate::syntax::ast::{SimpleType, LIST};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Monotype {
    /// `B_a`; `params` are the (unsized) type arguments of `B`.
    Base { name: String, params: Vec<SimpleType>, index: IndexTerm },
    /// A value whose size is not tracked, such as a list element.
    Unsized(SimpleType),
    Product(Box<Monotype>, Box<Monotype>),
    Arrow(Box<Type>, Box<Monotype>),
}

/// `forall bound. body`; a monotype when `bound` is empty.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Type {
    pub bound: Vec<IVar>,
    pub body: Monotype,
}

pub type Context = BTreeMap<String, Type>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SizedError {
    #[error("skeleton mismatch: `{0}` vs `{1}`")]
    SkeletonMismatch(String, String),
    #[error("expected {expected} index arguments, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("cannot determine instance of quantified variable(s) {0}")]
    MatchFailure(String),
    #[error("size of `{0}` is not tracked here but an indexed type is required")]
    SizeUnavailable(String),
    #[error(transparent)]
    Index(#[from] IndexError),
}

/// Free variables split by polarity.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FreeVars {
    pub positive: BTreeSet<IVar>,
    pub negative: BTreeSet<IVar>,
    pub all: BTreeSet<IVar>,
}

impl Monotype {
    pub fn base(name: impl Into<String>, params: Vec<SimpleType>, index: IndexTerm) -> Self {
        Monotype::Base { name: name.into(), params, index }
    }

    pub fn nat(index: IndexTerm) -> Self {
        Self::base("Nat", vec![], index)
    }

    pub fn list(elem: SimpleType, index: IndexTerm) -> Self {
        Self::base(LIST, vec![elem], index)
    }

    pub fn arrow(dom: impl Into<Type>, cod: Monotype) -> Self {
        Monotype::Arrow(Box::new(dom.into()), Box::new(cod))
    }

    pub fn product(a: Monotype, b: Monotype) -> Self {
        Monotype::Product(Box::new(a), Box::new(b))
    }

    pub fn skeleton(&self) -> SimpleType {
        match self {
            Monotype::Base { name, params, .. } => SimpleType::Base { name: name.clone(), args: params.clone() },
            Monotype::Unsized(s) => s.clone(),
            Monotype::Product(a, b) => SimpleType::product(a.skeleton(), b.skeleton()),
            Monotype::Arrow(d, c) => SimpleType::arrow(d.skeleton(), c.skeleton()),
        }
    }

    pub fn index(&self) -> Option<&IndexTerm> {
        match self {
            Monotype::Base { index, .. } => Some(index),
            _ => None,
        }
    }

    fn polar(&self, positive: bool, out: &mut FreeVars) {
        match self {
            Monotype::Base { index, .. } => {
                let vs = index.vars();
                if positive {
                    out.positive.extend(vs);
                } else {
                    out.negative.extend(vs);
                }
            }
            Monotype::Unsized(_) => {}
            Monotype::Product(a, b) => {
                a.polar(positive, out);
                b.polar(positive, out);
            }
            Monotype::Arrow(d, c) => {
                d.polar(!positive, out);
                c.polar(positive, out);
            }
        }
    }

    pub fn free_vars(&self) -> FreeVars {
        Type::mono(self.clone()).free_vars()
    }

    pub fn fv(&self) -> BTreeSet<IVar> {
        self.free_vars().all
    }

    pub fn symbols(&self, out: &mut BTreeMap<String, usize>) {
        match self {
            Monotype::Base { index, .. } => index.collect_symbols(out),
            Monotype::Unsized(_) => {}
            Monotype::Product(a, b) => {
                a.symbols(out);
                b.symbols(out);
            }
            Monotype::Arrow(d, c) => {
                d.body.symbols(out);
                c.symbols(out);
            }
        }
    }

    /// Capture-avoiding index substitution.
    pub fn subst(&self, theta: &IndexSubst) -> Monotype {
        if theta.is_empty() {
            return self.clone();
        }
        match self {
            Monotype::Base { name, params, index } => Monotype::Base {
                name: name.clone(),
                params: params.clone(),
                index: index.substitute(theta),
            },
            Monotype::Unsized(_) => self.clone(),
            Monotype::Product(a, b) => Monotype::product(a.subst(theta), b.subst(theta)),
            Monotype::Arrow(d, c) => Monotype::Arrow(Box::new(d.subst(theta)), Box::new(c.subst(theta))),
        }
    }

    /// Substitutes type parameters in unsized positions and base arguments.
    pub fn subst_simple(&self, s: &BTreeMap<String, SimpleType>) -> Monotype {
        if s.is_empty() {
            return self.clone();
        }
        match self {
            Monotype::Base { name, params, index } => Monotype::Base {
                name: name.clone(),
                params: params.iter().map(|p| p.subst(s)).collect(),
                index: index.clone(),
            },
            Monotype::Unsized(t) => Monotype::Unsized(t.subst(s)),
            Monotype::Product(a, b) => Monotype::product(a.subst_simple(s), b.subst_simple(s)),
            Monotype::Arrow(d, c) => Monotype::Arrow(
                Box::new(Type { bound: d.bound.clone(), body: d.body.subst_simple(s) }),
                Box::new(c.subst_simple(s)),
            ),
        }
    }

    /// Rewrites every index term; bound variables are passed through `f`
    /// untouched only if `f` leaves them alone, so `f` must not capture.
    pub fn map_index(&self, f: &dyn Fn(&IndexTerm) -> IndexTerm) -> Monotype {
        match self {
            Monotype::Base { name, params, index } => Monotype::Base {
                name: name.clone(),
                params: params.clone(),
                index: f(index),
            },
            Monotype::Unsized(_) => self.clone(),
            Monotype::Product(a, b) => Monotype::product(a.map_index(f), b.map_index(f)),
            Monotype::Arrow(d, c) => Monotype::Arrow(
                Box::new(Type { bound: d.bound.clone(), body: d.body.map_index(f) }),
                Box::new(c.map_index(f)),
            ),
        }
    }

    /// Splits `t1 -> ... -> tn -> r` into its domains and final result.
    pub fn uncurry(&self) -> (Vec<&Type>, &Monotype) {
        let mut doms = Vec::new();
        let mut t = self;
        while let Monotype::Arrow(d, c) = t {
            doms.push(d.as_ref());
            t = c;
        }
        (doms, t)
    }

    fn all_bound(&self, out: &mut BTreeSet<IVar>) {
        match self {
            Monotype::Product(a, b) => {
                a.all_bound(out);
                b.all_bound(out);
            }
            Monotype::Arrow(d, c) => {
                out.extend(d.bound.iter().cloned());
                d.body.all_bound(out);
                c.all_bound(out);
            }
            _ => {}
        }
    }
}

impl From<Monotype> for Type {
    fn from(m: Monotype) -> Self {
        Type::mono(m)
    }
}

impl Type {
    pub fn mono(body: Monotype) -> Self {
        Type { bound: vec![], body }
    }

    pub fn forall(bound: Vec<IVar>, body: Monotype) -> Self {
        Type { bound, body }
    }

    pub fn is_mono(&self) -> bool {
        self.bound.is_empty()
    }

    pub fn skeleton(&self) -> SimpleType {
        self.body.skeleton()
    }

    pub fn free_vars(&self) -> FreeVars {
        let mut out = FreeVars::default();
        self.polar(true, &mut out);
        out.all = out.positive.union(&out.negative).cloned().collect();
        out
    }

    fn polar(&self, positive: bool, out: &mut FreeVars) {
        let mut inner = FreeVars::default();
        self.body.polar(positive, &mut inner);
        for v in &self.bound {
            inner.positive.remove(v);
            inner.negative.remove(v);
        }
        out.positive.extend(inner.positive);
        out.negative.extend(inner.negative);
    }

    pub fn fv(&self) -> BTreeSet<IVar> {
        self.free_vars().all
    }

    pub fn subst(&self, theta: &IndexSubst) -> Type {
        let mut theta: IndexSubst = theta.iter().filter(|(k, _)| !self.bound.contains(k)).map(|(k, v)| (k.clone(), v.clone())).collect();
        if theta.is_empty() {
            return self.clone();
        }
        let body_fv = self.body.fv();
        theta.retain(|k, _| body_fv.contains(k));
        if theta.is_empty() {
            return self.clone();
        }
        let mut range: BTreeSet<IVar> = BTreeSet::new();
        theta.values().for_each(|t| t.collect_vars(&mut range));
        let mut avoid = range.clone();
        avoid.extend(body_fv);
        self.body.all_bound(&mut avoid);
        let mut bound = Vec::new();
        for b in &self.bound {
            if range.contains(b) {
                let fresh = prime_away(b, &avoid);
                avoid.insert(fresh.clone());
                theta.insert(b.clone(), IndexTerm::Var(fresh.clone()));
                bound.push(fresh);
            } else {
                bound.push(b.clone());
            }
        }
        Type { bound, body: self.body.subst(&theta) }
    }

    /// Replaces the quantified variables by `args`.
    pub fn instantiate(&self, args: &[IndexTerm]) -> Result<Monotype, SizedError> {
        if args.len() != self.bound.len() {
            return Err(SizedError::ArityMismatch { expected: self.bound.len(), got: args.len() });
        }
        let theta: IndexSubst = self.bound.iter().cloned().zip(args.iter().cloned()).collect();
        Ok(self.body.subst(&theta))
    }

    pub fn subst_simple(&self, s: &BTreeMap<String, SimpleType>) -> Type {
        Type { bound: self.bound.clone(), body: self.body.subst_simple(s) }
    }

    pub fn symbols(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        self.body.symbols(&mut out);
        out
    }

    /// Bound variables replaced by position-derived names; alpha-equivalent
    /// types become syntactically equal.
    pub fn nameless(&self) -> Type {
        fn go(t: &Type, depth: usize) -> Type {
            let theta: IndexSubst = t
                .bound
                .iter()
                .enumerate()
                .map(|(k, b)| (b.clone(), IndexTerm::Var(IVar(format!("#{depth}.{k}")))))
                .collect();
            let body = t.body.subst_raw(&theta);
            Type { bound: (0..t.bound.len()).map(|k| IVar(format!("#{depth}.{k}"))).collect(), body: body.nameless_inner(depth + 1) }
        }
        go(self, 0)
    }

    pub fn alpha_eq(&self, other: &Type) -> bool {
        self.nameless() == other.nameless()
    }

    /// Renames bound variables to the first unused names from `i, j, k, ...`.
    pub fn pretty_names(&self) -> Type {
        fn go(t: &Type, used: &mut BTreeSet<IVar>) -> Type {
            let mut theta = IndexSubst::new();
            let mut bound = Vec::new();
            for b in &t.bound {
                let fresh = nice_name(used);
                used.insert(fresh.clone());
                theta.insert(b.clone(), IndexTerm::Var(fresh.clone()));
                bound.push(fresh);
            }
            let body = t.body.subst_raw(&theta);
            Type { bound, body: body.pretty_inner(used) }
        }
        // via placeholders
        let mut used = self.fv();
        go(&self.nameless(), &mut used)
    }
}

impl Monotype {
    /// Substitution that assumes no capture can happen.
    fn subst_raw(&self, theta: &IndexSubst) -> Monotype {
        self.map_index(&|t| t.substitute(theta))
    }

    fn nameless_inner(&self, depth: usize) -> Monotype {
        match self {
            Monotype::Product(a, b) => Monotype::product(a.nameless_inner(depth), b.nameless_inner(depth)),
            Monotype::Arrow(d, c) => {
                let theta: IndexSubst = d
                    .bound
                    .iter()
                    .enumerate()
                    .map(|(k, b)| (b.clone(), IndexTerm::Var(IVar(format!("#{depth}.{k}")))))
                    .collect();
                let dom = Type {
                    bound: (0..d.bound.len()).map(|k| IVar(format!("#{depth}.{k}"))).collect(),
                    body: d.body.subst_raw(&theta).nameless_inner(depth + 1),
                };
                Monotype::Arrow(Box::new(dom), Box::new(c.nameless_inner(depth + 1)))
            }
            _ => self.clone(),
        }
    }

    fn pretty_inner(&self, used: &mut BTreeSet<IVar>) -> Monotype {
        match self {
            Monotype::Product(a, b) => {
                let a = a.pretty_inner(used);
                Monotype::product(a, b.pretty_inner(used))
            }
            Monotype::Arrow(d, c) => {
                let mut theta = IndexSubst::new();
                let mut bound = Vec::new();
                for b in &d.bound {
                    let fresh = nice_name(used);
                    used.insert(fresh.clone());
                    theta.insert(b.clone(), IndexTerm::Var(fresh.clone()));
                    bound.push(fresh);
                }
                let dom = Type { bound, body: d.body.subst_raw(&theta).pretty_inner(used) };
                Monotype::Arrow(Box::new(dom), Box::new(c.pretty_inner(used)))
            }
            _ => self.clone(),
        }
    }
}

fn nice_name(used: &BTreeSet<IVar>) -> IVar {
    const NAMES: [&str; 8] = ["i", "j", "k", "l", "m", "n", "o", "p"];
    for round in 0.. {
        for n in NAMES {
            let cand = if round == 0 { IVar::new(n) } else { IVar(format!("{n}{round}")) };
            if !used.contains(&cand) {
                return cand;
            }
        }
    }
    unreachable!()
}

fn prime_away(v: &IVar, avoid: &BTreeSet<IVar>) -> IVar {
    let mut cand = IVar(format!("{}'", v.0));
    while avoid.contains(&cand) {
        cand = IVar(format!("{}'", cand.0));
    }
    cand
}

fn fmt_index_atom(t: &IndexTerm, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let s = t.to_string();
    if s.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '\'' || c == '?' || c == '#' || c == '.') {
        write!(f, "{s}")
    } else {
        write!(f, "({s})")
    }
}

fn fmt_simple_atom(t: &SimpleType, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match t {
        SimpleType::Base { args, .. } if !args.is_empty() => write!(f, "({t})"),
        SimpleType::Arrow(..) => write!(f, "({t})"),
        _ => write!(f, "{t}"),
    }
}

impl Monotype {
    fn fmt_prec(&self, prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Monotype::Base { name, params, index } => {
                let shown = if name == LIST { "L" } else { name.as_str() };
                let wrap = prec > 1;
                if wrap {
                    write!(f, "(")?;
                }
                write!(f, "{shown} ")?;
                fmt_index_atom(index, f)?;
                for p in params {
                    write!(f, " ")?;
                    fmt_simple_atom(p, f)?;
                }
                if wrap {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Monotype::Unsized(SimpleType::Var(v)) => write!(f, "{v}"),
            Monotype::Unsized(s) => write!(f, "{{{s}}}"),
            Monotype::Product(a, b) => {
                write!(f, "(")?;
                a.fmt_prec(0, f)?;
                write!(f, ", ")?;
                b.fmt_prec(0, f)?;
                write!(f, ")")
            }
            Monotype::Arrow(d, c) => {
                if prec > 0 {
                    write!(f, "(")?;
                }
                if d.is_mono() {
                    d.body.fmt_prec(1, f)?;
                } else {
                    write!(f, "({d})")?;
                }
                write!(f, " -> ")?;
                c.fmt_prec(0, f)?;
                if prec > 0 {
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Monotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(0, f)
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.bound.is_empty() {
            write!(f, "forall")?;
            for b in &self.bound {
                write!(f, " {b}")?;
            }
            write!(f, ". ")?;
        }
        self.body.fmt_prec(0, f)
    }
}

// ---------------------------------------------------------------------------
// Canonicity

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CanonicalError {
    #[error("index `{index}` left of an arrow is not a variable")]
    NonVariableIndex { index: String },
    #[error("variable `{var}` occurs more than once in negative position")]
    DuplicateNegativeVariable { var: String },
    #[error("variables {vars} of a functional argument also occur negatively in the rest of the type")]
    SharedWithFunctionalArgument { vars: String },
    #[error("negative variables {vars} of a polytype are not quantified by it")]
    UngeneralizedNegative { vars: String },
    #[error("declaration is not closed: free variables {vars}")]
    NotClosed { vars: String },
}

fn show_vars(vs: &BTreeSet<IVar>) -> String {
    vs.iter().map(|v| v.0.as_str()).collect::<Vec<_>>().join(", ")
}

/// Variables of a pattern-shaped domain (indexed bases, unsized values and
/// products of those), or an error if it is not of that shape.
fn pattern_domain_vars(m: &Monotype, out: &mut Vec<IVar>) -> Result<bool, CanonicalError> {
    match m {
        Monotype::Base { index, .. } => match index.as_var() {
            Some(v) => {
                out.push(v.clone());
                Ok(true)
            }
            None => Err(CanonicalError::NonVariableIndex { index: index.to_string() }),
        },
        Monotype::Unsized(_) => Ok(true),
        Monotype::Product(a, b) => Ok(pattern_domain_vars(a, out)? && pattern_domain_vars(b, out)?),
        Monotype::Arrow(..) => Ok(false),
    }
}

pub fn canonical_mono(m: &Monotype) -> Result<(), CanonicalError> {
    match m {
        Monotype::Base { .. } | Monotype::Unsized(_) => Ok(()),
        Monotype::Product(a, b) => {
            canonical_mono(a)?;
            canonical_mono(b)
        }
        Monotype::Arrow(dom, cod) => {
            canonical_mono(cod)?;
            let cod_neg = cod.free_vars().negative;
            let mut vars = Vec::new();
            if dom.is_mono() && pattern_domain_vars(&dom.body, &mut vars)? {
                let mut seen = BTreeSet::new();
                for v in vars {
                    if cod_neg.contains(&v) || !seen.insert(v.clone()) {
                        return Err(CanonicalError::DuplicateNegativeVariable { var: v.0 });
                    }
                }
                Ok(())
            } else {
                let shared: BTreeSet<IVar> = dom.fv().intersection(&cod_neg).cloned().collect();
                if !shared.is_empty() {
                    return Err(CanonicalError::SharedWithFunctionalArgument { vars: show_vars(&shared) });
                }
                canonical_poly(dom)
            }
        }
    }
}

fn canonical_poly(t: &Type) -> Result<(), CanonicalError> {
    canonical_mono(&t.body)?;
    let bound: BTreeSet<IVar> = t.bound.iter().cloned().collect();
    let neg = t.body.free_vars().negative;
    let escaped: BTreeSet<IVar> = neg.difference(&bound).cloned().collect();
    if !escaped.is_empty() {
        return Err(CanonicalError::UngeneralizedNegative { vars: show_vars(&escaped) });
    }
    Ok(())
}

/// Canonicity of a type; polytypes must quantify all their negative variables.
pub fn is_canonical(t: &Type) -> Result<(), CanonicalError> {
    if t.is_mono() {
        canonical_mono(&t.body)
    } else {
        canonical_poly(t)
    }
}

/// Closed and canonical, as required of declarations.
pub fn check_declaration(t: &Type) -> Result<(), CanonicalError> {
    let fv = t.fv();
    if !fv.is_empty() {
        return Err(CanonicalError::NotClosed { vars: show_vars(&fv) });
    }
    is_canonical(t)
}

// ---------------------------------------------------------------------------
// Matching engine

#[derive(Clone, Debug)]
struct Meta {
    /// Generalized variables in scope when the placeholder was created.
    scope: Vec<IVar>,
}

/// Placeholder bookkeeping and constraint emission for subtyping.
#[derive(Clone, Debug, Default)]
pub struct MetaContext {
    metas: BTreeMap<IVar, Meta>,
    binding: IndexSubst,
    /// Variables introduced by generalization or by stripping a left-hand
    /// quantifier; they may only flow into placeholders created in their scope.
    locals: BTreeSet<IVar>,
    open: Vec<IVar>,
    counter: usize,
    pub origin: Provenance,
    pub constraints: Vec<Constraint>,
}

impl MetaContext {
    pub fn new() -> Self {
        Self::default()
    }

    fn next(&mut self) -> usize {
        self.counter += 1;
        self.counter
    }

    pub fn fresh_meta(&mut self) -> IVar {
        let v = IVar(format!("?{}", self.next()));
        self.metas.insert(v.clone(), Meta { scope: self.open.clone() });
        v
    }

    /// A fresh rigid variable named after `base`.
    pub fn fresh_rigid(&mut self, base: &IVar) -> IVar {
        let stem = base.0.trim_start_matches('?').split('\'').next().unwrap_or("i").to_string();
        IVar(format!("{stem}'{}", self.next()))
    }

    /// A fresh variable that is generalized in the current scope.
    pub fn open_local(&mut self, base: &IVar) -> IVar {
        let v = self.fresh_rigid(base);
        self.locals.insert(v.clone());
        self.open.push(v.clone());
        v
    }

    pub fn close_locals(&mut self, n: usize) {
        let keep = self.open.len() - n;
        self.open.truncate(keep);
    }

    pub fn open_scope(&self) -> &[IVar] {
        &self.open
    }

    pub fn is_local(&self, v: &IVar) -> bool {
        self.locals.contains(v)
    }

    pub fn is_meta(&self, v: &IVar) -> bool {
        self.metas.contains_key(v)
    }

    pub fn is_bound(&self, v: &IVar) -> bool {
        self.binding.contains_key(v)
    }

    pub fn meta_scope(&self, v: &IVar) -> &[IVar] {
        &self.metas[v].scope
    }

    /// Instantiates the quantifier prefix of `t` with fresh placeholders.
    pub fn instantiate(&mut self, t: &Type) -> Monotype {
        let args: Vec<IndexTerm> = t.bound.iter().map(|_| IndexTerm::Var(self.fresh_meta())).collect();
        t.instantiate(&args).expect("arity matches by construction")
    }

    pub fn zonk(&self, t: &IndexTerm) -> IndexTerm {
        match t {
            IndexTerm::Var(v) => match self.binding.get(v) {
                Some(b) => self.zonk(b),
                None => t.clone(),
            },
            IndexTerm::App(h, args) => IndexTerm::App(h.clone(), args.iter().map(|a| self.zonk(a)).collect()),
        }
    }

    pub fn zonk_mono(&self, m: &Monotype) -> Monotype {
        m.map_index(&|t| self.zonk(t))
    }

    pub fn zonk_type(&self, t: &Type) -> Type {
        Type { bound: t.bound.clone(), body: self.zonk_mono(&t.body) }
    }

    pub fn unresolved(&self) -> Vec<IVar> {
        self.metas.keys().filter(|m| !self.binding.contains_key(*m)).cloned().collect()
    }

    pub fn bind(&mut self, m: IVar, t: IndexTerm) {
        self.binding.insert(m, t);
    }

    fn has_unbound_meta(&self, t: &IndexTerm) -> bool {
        t.vars().iter().any(|v| self.is_meta(v) && !self.is_bound(v))
    }

    fn can_bind(&self, m: &IVar, t: &IndexTerm) -> bool {
        if self.has_unbound_meta(t) {
            return false;
        }
        let scope = &self.metas[m].scope;
        t.vars().iter().all(|v| !self.locals.contains(v) || scope.contains(v))
    }

    /// One-sided matching of `pat` (whose unbound placeholders act as
    /// pattern variables) against the placeholder-free `target`.
    fn match_term(&self, pat: &IndexTerm, target: &IndexTerm, acc: &mut IndexSubst) -> bool {
        match pat {
            IndexTerm::Var(v) if self.is_meta(v) && !self.is_bound(v) => match acc.get(v) {
                Some(prev) => prev == target,
                None => {
                    if !self.can_bind(v, target) {
                        return false;
                    }
                    acc.insert(v.clone(), target.clone());
                    true
                }
            },
            IndexTerm::Var(_) => pat == target,
            IndexTerm::App(h, args) => match target {
                IndexTerm::App(h2, args2) if h == h2 && args.len() == args2.len() => {
                    args.iter().zip(args2).all(|(a, b)| self.match_term(a, b, acc))
                }
                _ => false,
            },
        }
    }

    fn emit(&mut self, lhs: IndexTerm, rhs: IndexTerm, rule: &str) {
        let mut origin = self.origin.clone();
        origin.rule = rule.to_string();
        self.constraints.push(Constraint { lhs, rhs, origin, scc: None });
    }

    /// Records `a <= b`, binding placeholders by matching where possible.
    pub fn leq(&mut self, a: &IndexTerm, b: &IndexTerm, rule: &str) {
        let a = self.zonk(a);
        let b = self.zonk(b);
        for (pat, target) in [(&b, &a), (&a, &b)] {
            if !self.has_unbound_meta(pat) || self.has_unbound_meta(target) {
                continue;
            }
            let mut acc = IndexSubst::new();
            if self.match_term(pat, target, &mut acc) {
                self.binding.extend(acc);
                return;
            }
        }
        for (pat, target) in [(&b, &a), (&a, &b)] {
            if let Some((m, t)) = self.match_summand(pat, target) {
                self.binding.insert(m, t);
                return;
            }
        }
        self.emit(a, b, rule);
    }

    /// Arithmetic fallback for `pat = p + ?m` with `p` and the target free of
    /// symbols: binds `?m` to the difference when that is a polynomial with
    /// natural coefficients.
    fn match_summand(&self, pat: &IndexTerm, target: &IndexTerm) -> Option<(IVar, IndexTerm)> {
        let open: Vec<IVar> = pat.vars().into_iter().filter(|v| self.is_meta(v) && !self.is_bound(v)).collect();
        let [m] = open.as_slice() else { return None };
        if self.has_unbound_meta(target) || !is_symbol_free(pat) || !is_symbol_free(target) {
            return None;
        }
        let empty = Interpretation::new();
        let whole = pat.to_poly(&empty).ok()?;
        let rest = pat.substitute(&[(m.clone(), IndexTerm::zero())].into_iter().collect()).to_poly(&empty).ok()?;
        if &whole - &rest != crate::poly::Poly::var(m.clone()) {
            return None;
        }
        let diff = &target.to_poly(&empty).ok()? - &rest;
        if !diff.is_absolutely_positive() {
            return None;
        }
        let t = IndexTerm::from_poly(&diff);
        self.can_bind(m, &t).then(|| (m.clone(), t))
    }

    /// `t1 <= t2`. A quantified left-hand side is treated as rigid while the
    /// right-hand side is instantiated by matching.
    pub fn sub_type(&mut self, t1: &Type, t2: &Type) -> Result<(), SizedError> {
        if t1.is_mono() && t2.is_mono() {
            return self.sub_mono(&t1.body, &t2.body);
        }
        let mut theta = IndexSubst::new();
        for b in &t1.bound {
            let fresh = self.open_local(b);
            theta.insert(b.clone(), IndexTerm::Var(fresh));
        }
        let rho1 = t1.body.subst(&theta);
        let rho2 = self.instantiate(t2);
        let r = self.sub_mono(&rho1, &rho2);
        self.close_locals(t1.bound.len());
        r
    }

    /// An untracked value flowing into `m`: every size position of `m` must
    /// be an open placeholder, which then stands for an arbitrary size.
    fn arbitrary(&mut self, m: &Monotype, s: &SimpleType) -> Result<(), SizedError> {
        match m {
            Monotype::Base { index, .. } => match self.zonk(index) {
                IndexTerm::Var(v) if self.is_meta(&v) && !self.is_bound(&v) => {
                    let u = self.fresh_rigid(&IVar::new("u"));
                    self.bind(v, IndexTerm::Var(u));
                    Ok(())
                }
                _ => Err(SizedError::SizeUnavailable(s.to_string())),
            },
            Monotype::Unsized(_) => Ok(()),
            Monotype::Product(a, b) => {
                self.arbitrary(a, s)?;
                self.arbitrary(b, s)
            }
            Monotype::Arrow(..) => Err(SizedError::SizeUnavailable(s.to_string())),
        }
    }

    pub fn sub_mono(&mut self, m1: &Monotype, m2: &Monotype) -> Result<(), SizedError> {
        match (m1, m2) {
            (Monotype::Base { name: n1, params: p1, index: a }, Monotype::Base { name: n2, params: p2, index: b })
                if n1 == n2 && p1 == p2 =>
            {
                self.leq(a, b, "sub-base");
                Ok(())
            }
            (_, Monotype::Unsized(s)) if m1.skeleton() == *s => Ok(()),
            (Monotype::Unsized(s), _) if *s == m2.skeleton() => self.arbitrary(m2, s),
            (Monotype::Product(a1, b1), Monotype::Product(a2, b2)) => {
                self.sub_mono(a1, a2)?;
                self.sub_mono(b1, b2)
            }
            (Monotype::Arrow(d1, c1), Monotype::Arrow(d2, c2)) => {
                self.sub_type(d2, d1)?;
                self.sub_mono(c1, c2)
            }
            _ => Err(SizedError::SkeletonMismatch(m1.to_string(), m2.to_string())),
        }
    }
}

/// Constraints under which `t1 <= t2` holds.
pub fn subtype_constraints(t1: &Type, t2: &Type) -> Result<Vec<Constraint>, SizedError> {
    if t1.skeleton() != t2.skeleton() {
        return Err(SizedError::SkeletonMismatch(t1.to_string(), t2.to_string()));
    }
    let mut cx = MetaContext::new();
    cx.sub_type(t1, t2)?;
    let open = cx.unresolved();
    // placeholders that only occur where nothing constrains them
    let mut used = BTreeSet::new();
    for c in &cx.constraints {
        c.lhs.collect_vars(&mut used);
        c.rhs.collect_vars(&mut used);
    }
    let stuck: Vec<&IVar> = open.iter().filter(|m| used.contains(*m)).collect();
    if !stuck.is_empty() {
        return Err(SizedError::MatchFailure(stuck.iter().map(|v| v.0.as_str()).collect::<Vec<_>>().join(", ")));
    }
    let cs = cx.constraints.clone();
    Ok(cs
        .into_iter()
        .map(|mut c| {
            c.lhs = cx.zonk(&c.lhs);
            c.rhs = cx.zonk(&c.rhs);
            c
        })
        .collect())
}

/// Decides `t1 <= t2` under `interp`, soundly but incompletely.
pub fn subtype_semantic(interp: &Interpretation, t1: &Type, t2: &Type) -> Result<Verdict, SizedError> {
    let cs = match subtype_constraints(t1, t2) {
        Ok(cs) => cs,
        Err(SizedError::MatchFailure(_)) | Err(SizedError::SizeUnavailable(_)) => return Ok(Verdict::Unknown),
        Err(e) => return Err(e),
    };
    for c in &cs {
        if leq_semantic(interp, &c.lhs, &c.rhs)? == Verdict::Unknown {
            return Ok(Verdict::Unknown);
        }
    }
    Ok(Verdict::Yes)
}

/// Is `t` built only from variables and builtin symbols?
pub fn is_symbol_free(t: &IndexTerm) -> bool {
    match t {
        IndexTerm::Var(_) => true,
        IndexTerm::App(IndexSymbol::Unknown(_), _) => false,
        IndexTerm::App(_, args) => args.iter().all(is_symbol_free),
    }
}
