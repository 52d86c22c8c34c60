//! Printing programs back in surface syntax; the output re-parses to the
//! same program.

use std::fmt::Write;

use super::ast::*;

fn simple_atom(t: &SimpleType) -> String {
    match t {
        SimpleType::Base { args, .. } if !args.is_empty() => format!("({t})"),
        SimpleType::Arrow(..) => format!("({t})"),
        _ => t.to_string(),
    }
}

fn as_numeral(t: &Term) -> Option<u64> {
    let (head, args) = t.spine();
    match (&head.kind, args.as_slice()) {
        (TermKind::Con(c), []) if c == ZERO => Some(0),
        (TermKind::Con(c), [a]) if c == SUCC => as_numeral(a).map(|n| n + 1),
        _ => None,
    }
}

fn as_list(t: &Term) -> Option<Vec<&Term>> {
    let (head, args) = t.spine();
    match (&head.kind, args.as_slice()) {
        (TermKind::Con(c), []) if c == NIL => Some(vec![]),
        (TermKind::Con(c), [x, xs]) if c == CONS => {
            let mut rest = as_list(xs)?;
            rest.insert(0, x);
            Some(rest)
        }
        _ => None,
    }
}

/// Precedence: 0 lambda or cons, 1 application, 2 atom.
pub fn term_prec(t: &Term, prec: u8) -> String {
    if let Some(n) = as_numeral(t) {
        return n.to_string();
    }
    if let Some(items) = as_list(t) {
        let inner: Vec<String> = items.iter().map(|x| term_prec(x, 0)).collect();
        return format!("[{}]", inner.join(", "));
    }
    let (head, args) = t.spine();
    if let TermKind::Con(c) = &head.kind {
        if c == CONS && args.len() == 2 {
            let s = format!("{} : {}", term_prec(args[0], 1), term_prec(args[1], 0));
            return if prec > 0 { format!("({s})") } else { s };
        }
        if c == PAIR && args.len() == 2 {
            return format!("({}, {})", term_prec(args[0], 0), term_prec(args[1], 0));
        }
    }
    match &t.kind {
        TermKind::Var(v) | TermKind::Fun(v) => v.clone(),
        TermKind::Con(c) if c == NIL => "[]".into(),
        TermKind::Con(c) if c == CONS => "(:)".into(),
        TermKind::Con(c) if c == PAIR => "(,)".into(),
        TermKind::Con(c) => c.clone(),
        TermKind::App(..) => {
            let mut s = term_prec(head, 2);
            for a in args {
                s.push(' ');
                s.push_str(&term_prec(a, 2));
            }
            if prec > 1 {
                format!("({s})")
            } else {
                s
            }
        }
        TermKind::Lam(params, body) => {
            let s = format!("\\{}. {}", params.join(" "), term_prec(body, 0));
            if prec > 0 {
                format!("({s})")
            } else {
                s
            }
        }
    }
}

pub fn term(t: &Term) -> String {
    term_prec(t, 0)
}

pub fn pattern(p: &Pattern) -> String {
    pattern_prec(p, 2)
}

fn pattern_prec(p: &Pattern, prec: u8) -> String {
    match &p.kind {
        PatternKind::Var(v) => v.clone(),
        PatternKind::Con(..) => {
            let t = p.to_term();
            if as_numeral(&t).is_some() || as_list(&t).is_some() {
                return term_prec(&t, prec);
            }
            let PatternKind::Con(c, args) = &p.kind else { unreachable!() };
            if c == CONS && args.len() == 2 {
                let s = format!("{} : {}", pattern_prec(&args[0], 1), pattern_prec(&args[1], 0));
                return if prec > 0 { format!("({s})") } else { s };
            }
            if c == PAIR && args.len() == 2 {
                return format!("({}, {})", pattern_prec(&args[0], 0), pattern_prec(&args[1], 0));
            }
            if args.is_empty() {
                return c.clone();
            }
            let inner: Vec<String> = args.iter().map(|a| pattern_prec(a, 2)).collect();
            let s = format!("{} {}", c, inner.join(" "));
            if prec > 1 {
                format!("({s})")
            } else {
                s
            }
        }
    }
}

pub fn equation(eq: &Equation) -> String {
    let mut s = eq.fun.clone();
    for p in &eq.lhs {
        s.push(' ');
        s.push_str(&pattern(p));
    }
    s.push_str(" = ");
    s.push_str(&term(&eq.rhs));
    s
}

pub fn datatype(d: &DataDecl) -> String {
    let mut s = format!("data {}", d.name);
    for p in &d.params {
        s.push(' ');
        s.push_str(p);
    }
    s.push_str(" =");
    for (k, c) in d.constructors.iter().enumerate() {
        if k > 0 {
            s.push_str(" |");
        }
        s.push(' ');
        s.push_str(&c.name);
        for a in &c.args {
            s.push(' ');
            s.push_str(&simple_atom(a));
        }
    }
    s
}

/// The whole program; functions get their simple signature when known.
pub fn program(p: &Program) -> String {
    let mut out = String::new();
    for d in p.datatypes.iter().filter(|d| !d.builtin) {
        writeln!(out, "{}", datatype(d)).unwrap();
    }
    if p.datatypes.iter().any(|d| !d.builtin) {
        out.push('\n');
    }
    for (k, f) in p.functions.values().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        if let Some(t) = &f.ty {
            writeln!(out, "{} :: {}", f.name, t).unwrap();
        }
        if let Some(s) = &f.sized {
            writeln!(out, "{} ::: {}", f.name, s).unwrap();
        }
        for eq in &f.equations {
            writeln!(out, "{}", equation(eq)).unwrap();
        }
    }
    out
}
