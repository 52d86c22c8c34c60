//! Abstract syntax of programs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::sized::Type;

pub const NAT: &str = "Nat";
pub const LIST: &str = "List";

pub const ZERO: &str = "Zero";
pub const SUCC: &str = "Succ";
pub const NIL: &str = "Nil";
pub const CONS: &str = "Cons";
pub const PAIR: &str = "Pair";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Simple (unsized) types. `Var` is a rigid type parameter of a signature.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SimpleType {
    Base { name: String, args: Vec<SimpleType> },
    Var(String),
    Product(Box<SimpleType>, Box<SimpleType>),
    Arrow(Box<SimpleType>, Box<SimpleType>),
}

impl SimpleType {
    pub fn base(name: impl Into<String>) -> Self {
        SimpleType::Base { name: name.into(), args: vec![] }
    }

    pub fn nat() -> Self {
        Self::base(NAT)
    }

    pub fn list(elem: SimpleType) -> Self {
        SimpleType::Base { name: LIST.into(), args: vec![elem] }
    }

    pub fn arrow(a: SimpleType, b: SimpleType) -> Self {
        SimpleType::Arrow(Box::new(a), Box::new(b))
    }

    pub fn product(a: SimpleType, b: SimpleType) -> Self {
        SimpleType::Product(Box::new(a), Box::new(b))
    }

    /// `a1 -> ... -> an -> r`
    pub fn arrows(args: Vec<SimpleType>, result: SimpleType) -> Self {
        args.into_iter().rev().fold(result, |acc, a| SimpleType::arrow(a, acc))
    }

    /// Splits off up to `n` leading argument types.
    pub fn uncurry(&self, n: usize) -> Option<(Vec<&SimpleType>, &SimpleType)> {
        let mut args = Vec::new();
        let mut t = self;
        while args.len() < n {
            match t {
                SimpleType::Arrow(a, b) => {
                    args.push(a.as_ref());
                    t = b;
                }
                _ => return None,
            }
        }
        Some((args, t))
    }

    pub fn leading_arrows(&self) -> usize {
        match self {
            SimpleType::Arrow(_, b) => 1 + b.leading_arrows(),
            _ => 0,
        }
    }

    pub fn is_base(&self) -> bool {
        matches!(self, SimpleType::Base { .. })
    }

    pub fn is_first_order_data(&self) -> bool {
        match self {
            SimpleType::Base { args, .. } => args.iter().all(|a| a.is_first_order_data()),
            SimpleType::Var(_) => true,
            SimpleType::Product(a, b) => a.is_first_order_data() && b.is_first_order_data(),
            SimpleType::Arrow(..) => false,
        }
    }

    pub fn type_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            SimpleType::Base { args, .. } => args.iter().for_each(|a| a.type_vars(out)),
            SimpleType::Var(v) => {
                out.insert(v.clone());
            }
            SimpleType::Product(a, b) | SimpleType::Arrow(a, b) => {
                a.type_vars(out);
                b.type_vars(out);
            }
        }
    }

    pub fn subst(&self, s: &BTreeMap<String, SimpleType>) -> SimpleType {
        match self {
            SimpleType::Base { name, args } => SimpleType::Base {
                name: name.clone(),
                args: args.iter().map(|a| a.subst(s)).collect(),
            },
            SimpleType::Var(v) => s.get(v).cloned().unwrap_or_else(|| self.clone()),
            SimpleType::Product(a, b) => SimpleType::product(a.subst(s), b.subst(s)),
            SimpleType::Arrow(a, b) => SimpleType::arrow(a.subst(s), b.subst(s)),
        }
    }

    /// One-sided matching: binds type variables of `self` so that it equals `target`.
    pub fn match_into(&self, target: &SimpleType, s: &mut BTreeMap<String, SimpleType>) -> bool {
        match (self, target) {
            (SimpleType::Var(v), _) => match s.get(v) {
                Some(bound) => bound == target,
                None => {
                    s.insert(v.clone(), target.clone());
                    true
                }
            },
            (SimpleType::Base { name: n1, args: a1 }, SimpleType::Base { name: n2, args: a2 }) => {
                n1 == n2 && a1.len() == a2.len() && a1.iter().zip(a2).all(|(x, y)| x.match_into(y, s))
            }
            (SimpleType::Product(a1, b1), SimpleType::Product(a2, b2))
            | (SimpleType::Arrow(a1, b1), SimpleType::Arrow(a2, b2)) => a1.match_into(a2, s) && b1.match_into(b2, s),
            _ => false,
        }
    }

    fn fmt_prec(&self, prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimpleType::Base { name, args } if args.is_empty() => write!(f, "{name}"),
            SimpleType::Base { name, args } => {
                if prec > 1 {
                    write!(f, "(")?;
                }
                write!(f, "{name}")?;
                for a in args {
                    write!(f, " ")?;
                    a.fmt_prec(2, f)?;
                }
                if prec > 1 {
                    write!(f, ")")?;
                }
                Ok(())
            }
            SimpleType::Var(v) => write!(f, "{v}"),
            SimpleType::Product(a, b) => {
                write!(f, "(")?;
                a.fmt_prec(0, f)?;
                write!(f, ", ")?;
                b.fmt_prec(0, f)?;
                write!(f, ")")
            }
            SimpleType::Arrow(a, b) => {
                if prec > 0 {
                    write!(f, "(")?;
                }
                a.fmt_prec(1, f)?;
                write!(f, " -> ")?;
                b.fmt_prec(0, f)?;
                if prec > 0 {
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for SimpleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(0, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TermKind {
    Var(String),
    Fun(String),
    Con(String),
    App(Box<Term>, Box<Term>),
    /// Only present between parsing and lambda lifting.
    Lam(Vec<String>, Box<Term>),
}

/// A term node. `ty` is filled in by simple type checking.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Term {
    pub kind: TermKind,
    pub span: Span,
    pub ty: Option<SimpleType>,
}

/// Equality ignores locations and annotations.
impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Eq for Term {}

impl Term {
    pub fn new(kind: TermKind, span: Span) -> Self {
        Term { kind, span, ty: None }
    }

    pub fn var(name: impl Into<String>) -> Self {
        Self::new(TermKind::Var(name.into()), Span::default())
    }

    pub fn fun(name: impl Into<String>) -> Self {
        Self::new(TermKind::Fun(name.into()), Span::default())
    }

    pub fn con(name: impl Into<String>) -> Self {
        Self::new(TermKind::Con(name.into()), Span::default())
    }

    pub fn app(f: Term, a: Term) -> Self {
        let span = f.span;
        Self::new(TermKind::App(Box::new(f), Box::new(a)), span)
    }

    pub fn apps(head: Term, args: impl IntoIterator<Item = Term>) -> Self {
        args.into_iter().fold(head, Term::app)
    }

    pub fn nat(n: u64) -> Self {
        (0..n).fold(Term::con(ZERO), |acc, _| Term::app(Term::con(SUCC), acc))
    }

    pub fn list(items: Vec<Term>) -> Self {
        items
            .into_iter()
            .rev()
            .fold(Term::con(NIL), |acc, x| Term::apps(Term::con(CONS), [x, acc]))
    }

    pub fn pair(a: Term, b: Term) -> Self {
        Term::apps(Term::con(PAIR), [a, b])
    }

    /// Simple type, available after type checking.
    pub fn ty(&self) -> &SimpleType {
        self.ty.as_ref().expect("term has not been simply typed")
    }

    /// Head and arguments of an application spine.
    pub fn spine(&self) -> (&Term, Vec<&Term>) {
        let mut args = Vec::new();
        let mut t = self;
        while let TermKind::App(f, a) = &t.kind {
            args.push(a.as_ref());
            t = f;
        }
        args.reverse();
        (t, args)
    }

    pub fn free_vars(&self, out: &mut Vec<String>) {
        match &self.kind {
            TermKind::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            TermKind::App(f, a) => {
                f.free_vars(out);
                a.free_vars(out);
            }
            TermKind::Lam(params, body) => {
                let mut inner = Vec::new();
                body.free_vars(&mut inner);
                for v in inner {
                    if !params.contains(&v) && !out.contains(&v) {
                        out.push(v);
                    }
                }
            }
            TermKind::Fun(_) | TermKind::Con(_) => {}
        }
    }

    pub fn functions(&self, out: &mut Vec<String>) {
        match &self.kind {
            TermKind::Fun(f) => {
                if !out.contains(f) {
                    out.push(f.clone());
                }
            }
            TermKind::App(f, a) => {
                f.functions(out);
                a.functions(out);
            }
            TermKind::Lam(_, b) => b.functions(out),
            _ => {}
        }
    }

    pub fn contains_lambda(&self) -> bool {
        match &self.kind {
            TermKind::Lam(..) => true,
            TermKind::App(f, a) => f.contains_lambda() || a.contains_lambda(),
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PatternKind {
    Var(String),
    Con(String, Vec<Pattern>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Pattern {
    pub kind: PatternKind,
    pub span: Span,
    pub ty: Option<SimpleType>,
}

impl PartialEq for Pattern {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Eq for Pattern {}

impl Pattern {
    pub fn var(name: impl Into<String>) -> Self {
        Pattern { kind: PatternKind::Var(name.into()), span: Span::default(), ty: None }
    }

    pub fn con(name: impl Into<String>, args: Vec<Pattern>) -> Self {
        Pattern { kind: PatternKind::Con(name.into(), args), span: Span::default(), ty: None }
    }

    pub fn ty(&self) -> &SimpleType {
        self.ty.as_ref().expect("pattern has not been simply typed")
    }

    /// Variables in left-to-right order, duplicates kept.
    pub fn vars(&self, out: &mut Vec<String>) {
        match &self.kind {
            PatternKind::Var(v) => out.push(v.clone()),
            PatternKind::Con(_, ps) => ps.iter().for_each(|p| p.vars(out)),
        }
    }

    pub fn to_term(&self) -> Term {
        match &self.kind {
            PatternKind::Var(v) => Term { kind: TermKind::Var(v.clone()), span: self.span, ty: self.ty.clone() },
            PatternKind::Con(c, ps) => {
                let head = Term::new(TermKind::Con(c.clone()), self.span);
                let mut t = Term::apps(head, ps.iter().map(Pattern::to_term));
                t.ty = self.ty.clone();
                t
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Equation {
    pub fun: String,
    pub lhs: Vec<Pattern>,
    pub rhs: Term,
    pub span: Span,
}

impl Equation {
    pub fn lhs_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.lhs.iter().for_each(|p| p.vars(&mut out));
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructorDecl {
    pub name: String,
    /// Argument types; may mention the datatype's parameters.
    pub args: Vec<SimpleType>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataDecl {
    pub name: String,
    pub params: Vec<String>,
    pub constructors: Vec<ConstructorDecl>,
    pub builtin: bool,
}

impl DataDecl {
    pub fn result_type(&self) -> SimpleType {
        SimpleType::Base {
            name: self.name.clone(),
            args: self.params.iter().map(|p| SimpleType::Var(p.clone())).collect(),
        }
    }
}

/// How a function came to exist.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Origin {
    User,
    /// Produced from a source lambda.
    Lifted,
    /// Generated by a transformation; fires without cost.
    Auxiliary,
    /// Cost-free rest of a right-hand side split by a transformation; it has
    /// a single equation and is only called saturated.
    Continuation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunDef {
    pub name: String,
    /// Declared or (after simple type checking) inferred simple type.
    pub ty: Option<SimpleType>,
    pub declared_ty: bool,
    #[serde(skip)]
    pub sized: Option<Type>,
    pub arity: usize,
    pub equations: Vec<Equation>,
    pub origin: Origin,
    pub span: Span,
}

impl FunDef {
    pub fn new(name: impl Into<String>, span: Span) -> Self {
        FunDef {
            name: name.into(),
            ty: None,
            declared_ty: false,
            sized: None,
            arity: 0,
            equations: vec![],
            origin: Origin::User,
            span,
        }
    }

    pub fn ty(&self) -> &SimpleType {
        self.ty.as_ref().expect("function has no simple type yet")
    }

    pub fn is_cost_free(&self) -> bool {
        matches!(self.origin, Origin::Auxiliary | Origin::Continuation)
    }
}

/// Information about a constructor, resolved from its datatype.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConInfo {
    pub name: String,
    pub datatype: String,
    pub params: Vec<String>,
    pub args: Vec<SimpleType>,
    pub result: SimpleType,
}

impl ConInfo {
    pub fn arity(&self) -> usize {
        self.args.len()
    }

    /// Generic simple type `args -> result` over the datatype parameters.
    pub fn ty(&self) -> SimpleType {
        SimpleType::arrows(self.args.clone(), self.result.clone())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Program {
    pub datatypes: Vec<DataDecl>,
    pub functions: IndexMap<String, FunDef>,
}

impl Program {
    pub fn with_builtins() -> Self {
        Program { datatypes: builtin_datatypes(), functions: IndexMap::new() }
    }

    pub fn datatype(&self, name: &str) -> Option<&DataDecl> {
        self.datatypes.iter().find(|d| d.name == name)
    }

    pub fn constructor(&self, name: &str) -> Option<ConInfo> {
        if name == PAIR {
            let a = SimpleType::Var("a".into());
            let b = SimpleType::Var("b".into());
            return Some(ConInfo {
                name: PAIR.into(),
                datatype: "(,)".into(),
                params: vec!["a".into(), "b".into()],
                args: vec![a.clone(), b.clone()],
                result: SimpleType::product(a, b),
            });
        }
        self.datatypes.iter().find_map(|d| {
            d.constructors.iter().find(|c| c.name == name).map(|c| ConInfo {
                name: c.name.clone(),
                datatype: d.name.clone(),
                params: d.params.clone(),
                args: c.args.clone(),
                result: d.result_type(),
            })
        })
    }

    pub fn is_constructor(&self, name: &str) -> bool {
        self.constructor(name).is_some()
    }

    pub fn function(&self, name: &str) -> Option<&FunDef> {
        self.functions.get(name)
    }

    pub fn equations(&self) -> impl Iterator<Item = &Equation> {
        self.functions.values().flat_map(|f| f.equations.iter())
    }

    pub fn equation_count(&self) -> usize {
        self.functions.values().map(|f| f.equations.len()).sum()
    }
}

pub fn builtin_datatypes() -> Vec<DataDecl> {
    let a = SimpleType::Var("a".into());
    vec![
        DataDecl {
            name: NAT.into(),
            params: vec![],
            constructors: vec![
                ConstructorDecl { name: ZERO.into(), args: vec![] },
                ConstructorDecl { name: SUCC.into(), args: vec![SimpleType::nat()] },
            ],
            builtin: true,
        },
        DataDecl {
            name: LIST.into(),
            params: vec!["a".into()],
            constructors: vec![
                ConstructorDecl { name: NIL.into(), args: vec![] },
                ConstructorDecl { name: CONS.into(), args: vec![a.clone(), SimpleType::list(a)] },
            ],
            builtin: true,
        },
    ]
}
