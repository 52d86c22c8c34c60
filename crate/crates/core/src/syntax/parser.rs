//! Recursive-descent parser for programs, simple and sized types, index
//! terms, interpretations and constraint files.
//!
//! A top-level item starts at column 1; indented lines continue it.

use std::collections::BTreeMap;

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::SyntaxError;
use crate::constraint::{Constraint, ConstraintSet, Provenance};
use crate::index::{formal, IVar, IndexSymbol, IndexTerm, Interpretation};
use crate::sized::{Monotype, Type};

type PResult<T> = Result<T, SyntaxError>;

/// Number of type parameters per datatype name, for parsing sized types.
pub type Arities = BTreeMap<String, usize>;

pub fn builtin_arities() -> Arities {
    builtin_datatypes().into_iter().map(|d| (d.name, d.params.len())).collect()
}

fn canonical_type_name(name: &str) -> &str {
    if name == "L" {
        LIST
    } else {
        name
    }
}

struct Cursor<'a> {
    toks: &'a [Token],
    pos: usize,
    arities: &'a Arities,
    wildcards: usize,
}

impl<'a> Cursor<'a> {
    fn new(toks: &'a [Token], arities: &'a Arities) -> Self {
        Cursor { toks, pos: 0, arities, wildcards: 0 }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.tok)
    }

    fn span(&self) -> Span {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|t| t.span)
            .unwrap_or_default()
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        self.pos += 1;
        t
    }

    fn at(&self, t: &Tok) -> bool {
        self.peek() == Some(t)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.at(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok) -> PResult<()> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.unexpected(&t.to_string()))
        }
    }

    fn unexpected(&self, wanted: &str) -> SyntaxError {
        match self.peek() {
            Some(t) => SyntaxError::parse(self.span(), format!("expected {wanted}, found {t}")),
            None => SyntaxError::parse(self.span(), format!("expected {wanted}, found end of input")),
        }
    }

    fn done(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn expect_end(&self) -> PResult<()> {
        if self.done() {
            Ok(())
        } else {
            Err(self.unexpected("end of item"))
        }
    }

    fn lower(&mut self) -> PResult<String> {
        match self.peek() {
            Some(Tok::Lower(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.unexpected("an identifier")),
        }
    }

    fn upper(&mut self) -> PResult<String> {
        match self.peek() {
            Some(Tok::Upper(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.unexpected("a capitalized name")),
        }
    }

    // ---- simple types

    fn simple_type(&mut self) -> PResult<SimpleType> {
        let lhs = self.simple_app()?;
        if self.eat(&Tok::Arrow) {
            Ok(SimpleType::arrow(lhs, self.simple_type()?))
        } else {
            Ok(lhs)
        }
    }

    fn simple_app(&mut self) -> PResult<SimpleType> {
        if let Some(Tok::Upper(name)) = self.peek() {
            let name = canonical_type_name(name).to_string();
            self.pos += 1;
            let mut args = Vec::new();
            while self.starts_simple_atom() {
                args.push(self.simple_atom()?);
            }
            return Ok(SimpleType::Base { name, args });
        }
        self.simple_atom()
    }

    fn starts_simple_atom(&self) -> bool {
        matches!(self.peek(), Some(Tok::Upper(_) | Tok::Lower(_) | Tok::LParen | Tok::LBracket))
    }

    fn simple_atom(&mut self) -> PResult<SimpleType> {
        match self.bump() {
            Some(Tok::Upper(name)) => Ok(SimpleType::base(canonical_type_name(&name))),
            Some(Tok::Lower(v)) => Ok(SimpleType::Var(v)),
            Some(Tok::LBracket) => {
                let t = self.simple_type()?;
                self.expect(&Tok::RBracket)?;
                Ok(SimpleType::list(t))
            }
            Some(Tok::LParen) => {
                let t = self.simple_type()?;
                if self.eat(&Tok::Comma) {
                    let u = self.simple_type()?;
                    self.expect(&Tok::RParen)?;
                    Ok(SimpleType::product(t, u))
                } else {
                    self.expect(&Tok::RParen)?;
                    Ok(t)
                }
            }
            _ => {
                self.pos -= 1;
                Err(self.unexpected("a type"))
            }
        }
    }

    // ---- index terms

    fn index_expr(&mut self) -> PResult<IndexTerm> {
        let mut t = self.index_product()?;
        while self.eat(&Tok::Plus) {
            t = IndexTerm::add(t, self.index_product()?);
        }
        Ok(t)
    }

    fn index_product(&mut self) -> PResult<IndexTerm> {
        let mut t = self.index_factor()?;
        while self.eat(&Tok::Star) {
            t = IndexTerm::mul(t, self.index_factor()?);
        }
        Ok(t)
    }

    fn index_factor(&mut self) -> PResult<IndexTerm> {
        match self.bump() {
            Some(Tok::Num(n)) => Ok(IndexTerm::numeral(n)),
            Some(Tok::LParen) => {
                let t = self.index_expr()?;
                self.expect(&Tok::RParen)?;
                Ok(t)
            }
            Some(Tok::Lower(name)) | Some(Tok::Upper(name)) => {
                if self.at(&Tok::LParen) {
                    self.pos += 1;
                    let mut args = Vec::new();
                    if !self.at(&Tok::RParen) {
                        args.push(self.index_expr()?);
                        while self.eat(&Tok::Comma) {
                            args.push(self.index_expr()?);
                        }
                    }
                    self.expect(&Tok::RParen)?;
                    if name == "s" && args.len() == 1 {
                        return Ok(IndexTerm::succ(args.pop().unwrap()));
                    }
                    Ok(IndexTerm::sym(name, args))
                } else if name.starts_with(|c: char| c.is_ascii_uppercase()) {
                    Ok(IndexTerm::sym(name, vec![]))
                } else {
                    Ok(IndexTerm::Var(IVar(name)))
                }
            }
            _ => {
                self.pos -= 1;
                Err(self.unexpected("an index term"))
            }
        }
    }

    /// Index directly after a base type name: a variable, numeral or
    /// parenthesized expression.
    fn index_atom(&mut self) -> PResult<IndexTerm> {
        match self.peek() {
            Some(Tok::Lower(v)) => {
                let v = v.clone();
                self.pos += 1;
                Ok(IndexTerm::Var(IVar(v)))
            }
            Some(Tok::Num(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(IndexTerm::numeral(n))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let t = self.index_expr()?;
                self.expect(&Tok::RParen)?;
                Ok(t)
            }
            _ => Err(self.unexpected("an index")),
        }
    }

    fn starts_index_atom(&self) -> bool {
        matches!(self.peek(), Some(Tok::Lower(_) | Tok::Num(_) | Tok::LParen))
    }

    // ---- sized types

    fn sized_type(&mut self) -> PResult<Type> {
        if self.at(&Tok::Lower("forall".into())) {
            self.pos += 1;
            let mut bound = Vec::new();
            while let Some(Tok::Lower(v)) = self.peek() {
                bound.push(IVar(v.clone()));
                self.pos += 1;
            }
            self.expect(&Tok::Dot)?;
            let body = self.sized_mono()?;
            Ok(Type::forall(bound, body))
        } else {
            Ok(Type::mono(self.sized_mono()?))
        }
    }

    fn sized_mono(&mut self) -> PResult<Monotype> {
        let start = self.span();
        let dom = self.sized_domain()?;
        if self.eat(&Tok::Arrow) {
            let cod = self.sized_mono()?;
            Ok(Monotype::Arrow(Box::new(dom), Box::new(cod)))
        } else if dom.is_mono() {
            Ok(dom.body)
        } else {
            Err(SyntaxError::parse(start, "a quantified type may only appear left of an arrow"))
        }
    }

    fn sized_domain(&mut self) -> PResult<Type> {
        if self.at(&Tok::LParen) && self.peek_at(1) == Some(&Tok::Lower("forall".into())) {
            self.pos += 1;
            let t = self.sized_type()?;
            self.expect(&Tok::RParen)?;
            return Ok(t);
        }
        Ok(Type::mono(self.sized_atom()?))
    }

    fn sized_atom(&mut self) -> PResult<Monotype> {
        match self.peek().cloned() {
            Some(Tok::Upper(name)) => {
                self.pos += 1;
                let name = canonical_type_name(&name).to_string();
                let arity = self.arities.get(&name).copied().unwrap_or(0);
                if !self.starts_index_atom() {
                    if arity == 0 {
                        return Ok(Monotype::Unsized(SimpleType::base(name)));
                    }
                    return Err(self.unexpected("an index"));
                }
                let index = self.index_atom()?;
                let mut params = Vec::new();
                for _ in 0..arity {
                    params.push(self.simple_atom()?);
                }
                Ok(Monotype::Base { name, params, index })
            }
            Some(Tok::Lower(v)) if v != "forall" => {
                self.pos += 1;
                Ok(Monotype::Unsized(SimpleType::Var(v)))
            }
            Some(Tok::LBrace) => {
                self.pos += 1;
                let t = self.simple_type()?;
                self.expect(&Tok::RBrace)?;
                Ok(Monotype::Unsized(t))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let t = self.sized_mono()?;
                if self.eat(&Tok::Comma) {
                    let u = self.sized_mono()?;
                    self.expect(&Tok::RParen)?;
                    Ok(Monotype::product(t, u))
                } else {
                    self.expect(&Tok::RParen)?;
                    Ok(t)
                }
            }
            _ => Err(self.unexpected("a sized type")),
        }
    }

    // ---- patterns

    fn wildcard(&mut self) -> String {
        self.wildcards += 1;
        format!("_{}", self.wildcards)
    }

    fn pattern(&mut self) -> PResult<Pattern> {
        let span = self.span();
        let head = self.pattern_app()?;
        if self.eat(&Tok::Colon) {
            let tail = self.pattern()?;
            Ok(Pattern { kind: PatternKind::Con(CONS.into(), vec![head, tail]), span, ty: None })
        } else {
            Ok(head)
        }
    }

    fn pattern_app(&mut self) -> PResult<Pattern> {
        if let Some(Tok::Upper(name)) = self.peek() {
            let name = name.clone();
            let span = self.span();
            self.pos += 1;
            let mut args = Vec::new();
            while self.starts_pattern_atom() {
                args.push(self.pattern_atom()?);
            }
            return Ok(Pattern { kind: PatternKind::Con(name, args), span, ty: None });
        }
        self.pattern_atom()
    }

    fn starts_pattern_atom(&self) -> bool {
        matches!(
            self.peek(),
            Some(Tok::Upper(_) | Tok::Lower(_) | Tok::Num(_) | Tok::Underscore | Tok::LParen | Tok::LBracket)
        )
    }

    fn pattern_atom(&mut self) -> PResult<Pattern> {
        let span = self.span();
        let kind = match self.bump() {
            Some(Tok::Lower(v)) => PatternKind::Var(v),
            Some(Tok::Underscore) => PatternKind::Var(self.wildcard()),
            Some(Tok::Upper(c)) => PatternKind::Con(c, vec![]),
            Some(Tok::Num(n)) => {
                let mut p = Pattern { kind: PatternKind::Con(ZERO.into(), vec![]), span, ty: None };
                for _ in 0..n {
                    p = Pattern { kind: PatternKind::Con(SUCC.into(), vec![p]), span, ty: None };
                }
                return Ok(p);
            }
            Some(Tok::LBracket) => {
                let mut items = Vec::new();
                if !self.at(&Tok::RBracket) {
                    items.push(self.pattern()?);
                    while self.eat(&Tok::Comma) {
                        items.push(self.pattern()?);
                    }
                }
                self.expect(&Tok::RBracket)?;
                let nil = Pattern { kind: PatternKind::Con(NIL.into(), vec![]), span, ty: None };
                return Ok(items.into_iter().rev().fold(nil, |acc, p| Pattern {
                    kind: PatternKind::Con(CONS.into(), vec![p, acc]),
                    span,
                    ty: None,
                }));
            }
            Some(Tok::LParen) => {
                let p = self.pattern()?;
                if self.eat(&Tok::Comma) {
                    let q = self.pattern()?;
                    self.expect(&Tok::RParen)?;
                    PatternKind::Con(PAIR.into(), vec![p, q])
                } else {
                    self.expect(&Tok::RParen)?;
                    return Ok(p);
                }
            }
            _ => {
                self.pos -= 1;
                return Err(self.unexpected("a pattern"));
            }
        };
        Ok(Pattern { kind, span, ty: None })
    }

    // ---- terms

    fn term(&mut self) -> PResult<Term> {
        let span = self.span();
        if self.eat(&Tok::Backslash) {
            let mut params = Vec::new();
            loop {
                match self.peek() {
                    Some(Tok::Lower(_)) => params.push(self.lower()?),
                    Some(Tok::Underscore) => {
                        self.pos += 1;
                        params.push(self.wildcard());
                    }
                    _ => break,
                }
            }
            if params.is_empty() {
                return Err(self.unexpected("a lambda parameter"));
            }
            if !self.eat(&Tok::Dot) && !self.eat(&Tok::Arrow) {
                return Err(self.unexpected("`.`"));
            }
            let body = self.term()?;
            return Ok(Term::new(TermKind::Lam(params, Box::new(body)), span));
        }
        let head = self.term_app()?;
        if self.eat(&Tok::Colon) {
            let tail = self.term()?;
            let cons = Term::new(TermKind::Con(CONS.into()), span);
            Ok(Term::apps(cons, [head, tail]))
        } else {
            Ok(head)
        }
    }

    fn term_app(&mut self) -> PResult<Term> {
        let mut t = self.term_atom()?;
        while self.starts_term_atom() {
            let a = self.term_atom()?;
            t = Term::app(t, a);
        }
        Ok(t)
    }

    fn starts_term_atom(&self) -> bool {
        matches!(
            self.peek(),
            Some(Tok::Upper(_) | Tok::Lower(_) | Tok::Num(_) | Tok::LParen | Tok::LBracket)
        )
    }

    fn term_atom(&mut self) -> PResult<Term> {
        let span = self.span();
        match self.bump() {
            Some(Tok::Lower(v)) => Ok(Term::new(TermKind::Var(v), span)),
            Some(Tok::Upper(c)) => Ok(Term::new(TermKind::Con(c), span)),
            Some(Tok::Num(n)) => Ok(with_span(Term::nat(n), span)),
            Some(Tok::LBracket) => {
                let mut items = Vec::new();
                if !self.at(&Tok::RBracket) {
                    items.push(self.term()?);
                    while self.eat(&Tok::Comma) {
                        items.push(self.term()?);
                    }
                }
                self.expect(&Tok::RBracket)?;
                Ok(with_span(Term::list(items), span))
            }
            Some(Tok::LParen) => {
                if self.at(&Tok::Colon) && self.peek_at(1) == Some(&Tok::RParen) {
                    self.pos += 2;
                    return Ok(Term::new(TermKind::Con(CONS.into()), span));
                }
                if self.at(&Tok::Comma) && self.peek_at(1) == Some(&Tok::RParen) {
                    self.pos += 2;
                    return Ok(Term::new(TermKind::Con(PAIR.into()), span));
                }
                let t = self.term()?;
                if self.eat(&Tok::Comma) {
                    let u = self.term()?;
                    self.expect(&Tok::RParen)?;
                    Ok(with_span(Term::pair(t, u), span))
                } else {
                    self.expect(&Tok::RParen)?;
                    Ok(t)
                }
            }
            _ => {
                self.pos -= 1;
                Err(self.unexpected("an expression"))
            }
        }
    }
}

/// Gives every node without a location the location `span`.
fn with_span(mut t: Term, span: Span) -> Term {
    if t.span == Span::default() {
        t.span = span;
    }
    if let TermKind::App(f, a) = t.kind {
        t.kind = TermKind::App(Box::new(with_span(*f, span)), Box::new(with_span(*a, span)));
    }
    t
}

/// Groups tokens into items, each starting at column 1.
fn items(toks: Vec<Token>) -> Vec<Vec<Token>> {
    let mut out: Vec<Vec<Token>> = Vec::new();
    for t in toks {
        if t.span.col == 1 || out.is_empty() {
            out.push(Vec::new());
        }
        out.last_mut().unwrap().push(t);
    }
    out
}

fn parse_data(item: &[Token], arities: &Arities) -> PResult<DataDecl> {
    let mut c = Cursor::new(item, arities);
    c.pos = 1;
    let name = c.upper()?;
    let mut params = Vec::new();
    while let Some(Tok::Lower(_)) = c.peek() {
        params.push(c.lower()?);
    }
    c.expect(&Tok::Equals)?;
    let mut constructors = Vec::new();
    loop {
        let cname = c.upper()?;
        let mut args = Vec::new();
        while c.starts_simple_atom() {
            args.push(c.simple_atom()?);
        }
        constructors.push(ConstructorDecl { name: cname, args });
        if !c.eat(&Tok::Bar) {
            break;
        }
    }
    c.expect_end()?;
    Ok(DataDecl { name, params, constructors, builtin: false })
}

/// Parses a program. Lower-case names not bound by a left-hand side or a
/// lambda are resolved to functions.
pub fn parse_program(src: &str) -> PResult<Program> {
    let groups = items(lex(src)?);
    let mut prog = Program::with_builtins();
    let mut arities = builtin_arities();

    for item in groups.iter().filter(|it| it[0].tok == Tok::Lower("data".into())) {
        let d = parse_data(item, &arities)?;
        if prog.datatype(&d.name).is_some() {
            return Err(SyntaxError::Duplicate { name: d.name, span: item[0].span });
        }
        for k in &d.constructors {
            if prog.is_constructor(&k.name) {
                return Err(SyntaxError::Duplicate { name: k.name.clone(), span: item[0].span });
            }
        }
        arities.insert(d.name.clone(), d.params.len());
        prog.datatypes.push(d);
    }

    for item in groups.iter().filter(|it| it[0].tok != Tok::Lower("data".into())) {
        let mut c = Cursor::new(item, &arities);
        let span = c.span();
        let name = c.lower()?;
        match c.peek() {
            Some(Tok::DColon) => {
                c.pos += 1;
                let ty = c.simple_type()?;
                c.expect_end()?;
                let f = prog.functions.entry(name.clone()).or_insert_with(|| FunDef::new(name.clone(), span));
                if f.declared_ty && f.ty.is_some() && f.sized.is_none() {
                    return Err(SyntaxError::Duplicate { name, span });
                }
                f.ty = Some(ty);
                f.declared_ty = true;
            }
            Some(Tok::TColon) => {
                c.pos += 1;
                let ty = c.sized_type()?;
                c.expect_end()?;
                let f = prog.functions.entry(name.clone()).or_insert_with(|| FunDef::new(name.clone(), span));
                if f.sized.is_some() {
                    return Err(SyntaxError::Duplicate { name, span });
                }
                if f.ty.is_none() {
                    f.ty = Some(ty.skeleton());
                    f.declared_ty = true;
                }
                f.sized = Some(ty);
            }
            _ => {
                let mut lhs = Vec::new();
                while !c.at(&Tok::Equals) {
                    if c.done() {
                        return Err(c.unexpected("`=`"));
                    }
                    lhs.push(c.pattern_atom()?);
                }
                c.pos += 1;
                let rhs = c.term()?;
                c.expect_end()?;
                let f = prog.functions.entry(name.clone()).or_insert_with(|| FunDef::new(name.clone(), span));
                f.equations.push(Equation { fun: name, lhs, rhs, span });
            }
        }
    }

    for f in prog.functions.values_mut() {
        if f.equations.is_empty() {
            return Err(SyntaxError::MissingEquations { fun: f.name.clone(), span: f.span });
        }
        f.arity = f.equations[0].lhs.len();
    }
    resolve(&mut prog)?;
    Ok(prog)
}

fn resolve(prog: &mut Program) -> PResult<()> {
    let names: Vec<String> = prog.functions.keys().cloned().collect();
    let is_con: BTreeMap<String, bool> = prog
        .datatypes
        .iter()
        .flat_map(|d| d.constructors.iter().map(|c| (c.name.clone(), true)))
        .chain([(PAIR.to_string(), true)])
        .collect();
    for f in prog.functions.values_mut() {
        for eq in &mut f.equations {
            for p in &eq.lhs {
                check_pattern_cons(p, &is_con)?;
            }
            let bound = eq.lhs_vars();
            resolve_term(&mut eq.rhs, &bound, &names, &is_con)?;
        }
    }
    Ok(())
}

fn check_pattern_cons(p: &Pattern, cons: &BTreeMap<String, bool>) -> PResult<()> {
    if let PatternKind::Con(c, args) = &p.kind {
        if !cons.contains_key(c) {
            return Err(SyntaxError::UnknownConstructor { name: c.clone(), span: p.span });
        }
        for a in args {
            check_pattern_cons(a, cons)?;
        }
    }
    Ok(())
}

fn resolve_term(t: &mut Term, bound: &[String], funs: &[String], cons: &BTreeMap<String, bool>) -> PResult<()> {
    match &mut t.kind {
        TermKind::Var(v) => {
            if !bound.contains(v) {
                if funs.contains(v) {
                    t.kind = TermKind::Fun(v.clone());
                } else {
                    return Err(SyntaxError::UnboundVariable { name: v.clone(), span: t.span });
                }
            }
            Ok(())
        }
        TermKind::Con(c) => {
            if cons.contains_key(c) {
                Ok(())
            } else {
                Err(SyntaxError::UnknownConstructor { name: c.clone(), span: t.span })
            }
        }
        TermKind::Fun(_) => Ok(()),
        TermKind::App(f, a) => {
            resolve_term(f, bound, funs, cons)?;
            resolve_term(a, bound, funs, cons)
        }
        TermKind::Lam(params, body) => {
            let mut inner = bound.to_vec();
            inner.extend(params.iter().cloned());
            resolve_term(body, &inner, funs, cons)
        }
    }
}

fn whole<T>(src: &str, arities: &Arities, f: impl FnOnce(&mut Cursor) -> PResult<T>) -> PResult<T> {
    let toks = lex(src)?;
    let mut c = Cursor::new(&toks, arities);
    let out = f(&mut c)?;
    c.expect_end()?;
    Ok(out)
}

pub fn parse_simple_type(src: &str) -> PResult<SimpleType> {
    whole(src, &builtin_arities(), |c| c.simple_type())
}

pub fn parse_sized_type(src: &str) -> PResult<Type> {
    parse_sized_type_with(src, &builtin_arities())
}

pub fn parse_sized_type_with(src: &str, arities: &Arities) -> PResult<Type> {
    whole(src, arities, |c| c.sized_type())
}

pub fn parse_index_term(src: &str) -> PResult<IndexTerm> {
    whole(src, &builtin_arities(), |c| c.index_expr())
}

/// Parses a closed term (variables resolve to functions of `prog`).
pub fn parse_term(src: &str, prog: &Program) -> PResult<Term> {
    let mut t = whole(src, &builtin_arities(), |c| c.term())?;
    let funs: Vec<String> = prog.functions.keys().cloned().collect();
    let cons: BTreeMap<String, bool> = prog
        .datatypes
        .iter()
        .flat_map(|d| d.constructors.iter().map(|c| (c.name.clone(), true)))
        .chain([(PAIR.to_string(), true)])
        .collect();
    resolve_term(&mut t, &[], &funs, &cons)?;
    Ok(t)
}

/// Parses lines `F(x1, x2) = x1 + x2`; arguments may be named freely.
pub fn parse_interpretation(src: &str) -> PResult<Interpretation> {
    let mut interp = Interpretation::new();
    for (lno, line) in src.lines().enumerate() {
        let toks = lex(line)?;
        if toks.is_empty() {
            continue;
        }
        let toks: Vec<Token> = toks
            .into_iter()
            .map(|mut t| {
                t.span.line = lno as u32 + 1;
                t
            })
            .collect();
        let arities = builtin_arities();
        let mut c = Cursor::new(&toks, &arities);
        let span = c.span();
        let name = match c.bump() {
            Some(Tok::Lower(n)) | Some(Tok::Upper(n)) => n,
            _ => return Err(SyntaxError::parse(span, "expected a symbol name")),
        };
        let mut params = Vec::new();
        if c.eat(&Tok::LParen) {
            if !c.at(&Tok::RParen) {
                params.push(c.lower()?);
                while c.eat(&Tok::Comma) {
                    params.push(c.lower()?);
                }
            }
            c.expect(&Tok::RParen)?;
        }
        c.expect(&Tok::Equals)?;
        let body = c.index_expr()?;
        c.expect_end()?;
        let renamed = body.rename(&|v| params.iter().position(|p| *p == v.0).map(formal));
        interp
            .insert_term(&name, params.len(), &renamed)
            .map_err(|e| SyntaxError::parse(span, e.to_string()))?;
    }
    Ok(interp)
}

/// Parses the export format of [`ConstraintSet`].
pub fn parse_constraints(src: &str) -> PResult<ConstraintSet> {
    let mut set = ConstraintSet::new();
    let mut scc = None;
    let arities = builtin_arities();
    for (lno, line) in src.lines().enumerate() {
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix("--") {
            let words: Vec<&str> = rest.split_whitespace().collect();
            if words.len() == 2 && words[0] == "scc" {
                scc = words[1].parse().ok();
            }
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        let (body, origin) = match line.split_once(';') {
            Some((b, o)) => (b, o.trim().to_string()),
            None => (line, String::new()),
        };
        let toks: Vec<Token> = lex(body)?
            .into_iter()
            .map(|mut t| {
                t.span.line = lno as u32 + 1;
                t
            })
            .collect();
        let mut c = Cursor::new(&toks, &arities);
        let lhs = c.index_expr()?;
        c.expect(&Tok::Leq)?;
        let rhs = c.index_expr()?;
        c.expect_end()?;
        set.push(Constraint {
            lhs,
            rhs,
            origin: Provenance { rule: origin, ..Provenance::default() },
            scc,
        });
    }
    Ok(set)
}

/// Symbol arities used in a constraint set, or an error on inconsistent use.
pub fn symbol_arities(set: &ConstraintSet) -> Result<BTreeMap<String, usize>, String> {
    let mut out: BTreeMap<String, usize> = BTreeMap::new();
    fn walk(t: &IndexTerm, out: &mut BTreeMap<String, usize>) -> Result<(), String> {
        if let IndexTerm::App(h, args) = t {
            if let IndexSymbol::Unknown(n) = h {
                if let Some(&k) = out.get(n) {
                    if k != args.len() {
                        return Err(format!("symbol `{n}` used with {k} and {} arguments", args.len()));
                    }
                }
                out.insert(n.clone(), args.len());
            }
            for a in args {
                walk(a, out)?;
            }
        }
        Ok(())
    }
    for c in set.iter() {
        walk(&c.lhs, &mut out)?;
        walk(&c.rhs, &mut out)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const REVERSE: &str = "
-- reversal with an accumulator
rev :: List a -> List a -> List a
rev [] ys = ys
rev (x : xs) ys = rev xs (x : ys)

reverse xs = rev xs []
";

    #[test]
    fn parses_reverse() {
        let p = parse_program(REVERSE).unwrap();
        assert_eq!(p.functions.len(), 2);
        let rev = &p.functions["rev"];
        assert_eq!(rev.arity, 2);
        assert_eq!(rev.ty.as_ref().unwrap().to_string(), "List a -> List a -> List a");
        assert_eq!(rev.equations[1].rhs.span, Span { line: 5, col: 19 });
        let (head, args) = p.functions["reverse"].equations[0].rhs.spine();
        assert_eq!(head.kind, TermKind::Fun("rev".into()));
        assert_eq!(args.len(), 2);
    }

    #[test]
    fn continuation_lines_and_lambdas() {
        let p = parse_program("data T = A | B Nat\nf x =\n  (\\y. Succ y) x\ng = f 2").unwrap();
        let rhs = &p.functions["f"].equations[0].rhs;
        assert!(rhs.contains_lambda());
        assert_eq!(p.functions["g"].arity, 0);
        assert_eq!(p.datatype("T").unwrap().constructors[1].args, vec![SimpleType::nat()]);
    }

    #[test]
    fn unbound_names_are_reported() {
        let e = parse_program("f x = y").unwrap_err();
        assert!(matches!(e, SyntaxError::UnboundVariable { ref name, .. } if name == "y"));
        let e = parse_program("f x = Foo x").unwrap_err();
        assert!(matches!(e, SyntaxError::UnknownConstructor { .. }));
    }

    #[test]
    fn sized_types_round_trip() {
        for s in [
            "forall i j. L i a -> L j a -> L (i + j) a",
            "forall j. (forall i. Nat i -> Nat (i + 1)) -> Nat j -> Nat (j + 2)",
            "forall j k l. (forall i. a -> L i b -> L (i + j) b) -> L k b -> L l a -> L (l * j + k) b",
            "Nat 0",
            "forall i. (Nat i, L i (Nat -> Nat)) -> {List a}",
            "Nat (F(i, j))",
        ] {
            let t = parse_sized_type(s).unwrap();
            assert_eq!(t.to_string(), s);
        }
    }

    #[test]
    fn index_terms() {
        let t = parse_index_term("s(i) + 2 * F(j, 0)").unwrap();
        assert_eq!(t.symbols().get("F"), Some(&2));
        assert!(parse_index_term("i +").is_err());
    }

    #[test]
    fn interpretations_and_constraints() {
        let i = parse_interpretation("F1(i, j) = i + j\nG = 3").unwrap();
        assert_eq!(i.get("F1").unwrap().to_string(), "x1 + x2");
        assert_eq!(i.get("G").unwrap().arity, 0);
        let cs = parse_constraints("-- scc 0\ni + j <= F1(i, j) ; append\n-- scc 1\ni * i <= i\n").unwrap();
        assert_eq!(cs.len(), 2);
        assert_eq!(cs.constraints[1].scc, Some(1));
        assert_eq!(cs.constraints[0].origin.rule, "append");
        assert_eq!(parse_constraints(&cs.export()).unwrap().constraints[1].to_string(), "i * i <= i");
    }
}
