//! Static well-formedness: constant arity, linear and non-overlapping
//! left-hand sides, saturated constructor patterns and known type names.

use std::collections::BTreeSet;

use super::ast::*;
use super::SyntaxError;

fn check_type(prog: &Program, t: &SimpleType, params: Option<&[String]>, span: Span) -> Result<(), SyntaxError> {
    match t {
        SimpleType::Base { name, args } => {
            let d = prog.datatype(name).ok_or_else(|| SyntaxError::UnknownType { name: name.clone(), span })?;
            if d.params.len() != args.len() {
                return Err(SyntaxError::UnknownType { name: format!("{name} with {} arguments", args.len()), span });
            }
            args.iter().try_for_each(|a| check_type(prog, a, params, span))
        }
        SimpleType::Var(v) => match params {
            Some(ps) if !ps.contains(v) => Err(SyntaxError::UnknownType { name: v.clone(), span }),
            _ => Ok(()),
        },
        SimpleType::Product(a, b) | SimpleType::Arrow(a, b) => {
            check_type(prog, a, params, span)?;
            check_type(prog, b, params, span)
        }
    }
}

fn check_pattern(prog: &Program, p: &Pattern) -> Result<(), SyntaxError> {
    if let PatternKind::Con(c, args) = &p.kind {
        let info = prog
            .constructor(c)
            .ok_or_else(|| SyntaxError::UnknownConstructor { name: c.clone(), span: p.span })?;
        if info.arity() != args.len() {
            return Err(SyntaxError::PatternArity { name: c.clone(), expected: info.arity(), got: args.len(), span: p.span });
        }
        for a in args {
            check_pattern(prog, a)?;
        }
    }
    Ok(())
}

/// Do two linear patterns with disjoint variables have a common instance?
pub fn unifiable(p: &Pattern, q: &Pattern) -> bool {
    match (&p.kind, &q.kind) {
        (PatternKind::Var(_), _) | (_, PatternKind::Var(_)) => true,
        (PatternKind::Con(c, ps), PatternKind::Con(d, qs)) => {
            c == d && ps.len() == qs.len() && ps.iter().zip(qs).all(|(a, b)| unifiable(a, b))
        }
    }
}

pub fn check_function(prog: &Program, f: &FunDef) -> Result<(), SyntaxError> {
    let arity = f.equations.first().map_or(0, |e| e.lhs.len());
    for eq in &f.equations {
        if eq.lhs.len() != arity {
            return Err(SyntaxError::ArityMismatch { fun: f.name.clone(), expected: arity, got: eq.lhs.len(), span: eq.span });
        }
        let mut seen = BTreeSet::new();
        for v in eq.lhs_vars() {
            if !seen.insert(v.clone()) {
                return Err(SyntaxError::NonLinearLhs { fun: f.name.clone(), var: v, span: eq.span });
            }
        }
        for p in &eq.lhs {
            check_pattern(prog, p)?;
        }
        if eq.rhs.contains_lambda() && f.origin != Origin::User {
            return Err(SyntaxError::LeftoverLambda { span: eq.rhs.span });
        }
    }
    for (k, e1) in f.equations.iter().enumerate() {
        for e2 in &f.equations[k + 1..] {
            if e1.lhs.iter().zip(&e2.lhs).all(|(p, q)| unifiable(p, q)) {
                return Err(SyntaxError::OverlappingLhs { fun: f.name.clone(), first: e1.span, second: e2.span });
            }
        }
    }
    if let Some(t) = &f.ty {
        check_type(prog, t, None, f.span)?;
    }
    Ok(())
}

pub fn check_program(prog: &Program) -> Result<(), SyntaxError> {
    for d in prog.datatypes.iter().filter(|d| !d.builtin) {
        for c in &d.constructors {
            for a in &c.args {
                check_type(prog, a, Some(&d.params), Span::default())?;
            }
        }
    }
    for f in prog.functions.values() {
        check_function(prog, f)?;
    }
    Ok(())
}

/// Rejects any lambda left in right-hand sides.
pub fn check_lifted(prog: &Program) -> Result<(), SyntaxError> {
    for eq in prog.equations() {
        if eq.rhs.contains_lambda() {
            return Err(SyntaxError::LeftoverLambda { span: eq.rhs.span });
        }
    }
    Ok(())
}
