//! Per-call-site copies of functions, each with its own sized type.

use crate::syntax::ast::{Program, Term, TermKind};
use crate::syntax::callgraph::CallGraph;

fn rename_calls(t: &mut Term, visit: &mut dyn FnMut(&str) -> Option<String>) {
    match &mut t.kind {
        TermKind::Fun(f) => {
            if let Some(g) = visit(f) {
                *f = g;
            }
        }
        TermKind::App(a, b) => {
            rename_calls(a, visit);
            rename_calls(b, visit);
        }
        TermKind::Lam(_, b) => rename_calls(b, visit),
        TermKind::Var(_) | TermKind::Con(_) => {}
    }
}

/// Name of the copy of `f` for its `k`-th call site.
pub fn specialized_name(f: &str, k: usize) -> String {
    format!("{f}_s{k}")
}

/// Gives every non-mutually-recursive function that is called from more
/// than one place outside itself a separate copy per call site. The
/// original stays in place for external callers.
pub fn specialize(prog: &Program) -> Program {
    let graph = CallGraph::new(prog);
    let singleton: Vec<String> = graph.sccs().into_iter().filter(|c| c.len() == 1).flatten().collect();
    let mut sites: std::collections::BTreeMap<String, usize> = Default::default();
    for f in prog.functions.values() {
        for eq in &f.equations {
            let mut calls = Vec::new();
            let mut rhs = eq.rhs.clone();
            rename_calls(&mut rhs, &mut |g| {
                calls.push(g.to_string());
                None
            });
            for g in calls.into_iter().filter(|g| *g != f.name) {
                *sites.entry(g).or_default() += 1;
            }
        }
    }
    let targets: Vec<String> = singleton.into_iter().filter(|g| sites.get(g).is_some_and(|n| *n > 1)).collect();
    let mut out = prog.clone();
    let mut copies = Vec::new();
    let mut counters: std::collections::BTreeMap<String, usize> = Default::default();
    for f in out.functions.values_mut() {
        let name = f.name.clone();
        for eq in &mut f.equations {
            rename_calls(&mut eq.rhs, &mut |g| {
                if g == name || !targets.iter().any(|t| t == g) {
                    return None;
                }
                let k = counters.entry(g.to_string()).or_default();
                *k += 1;
                let copy = specialized_name(g, *k);
                copies.push((g.to_string(), copy.clone()));
                Some(copy)
            });
        }
    }
    for (g, copy) in copies {
        let mut def = prog.functions[&g].clone();
        def.name = copy.clone();
        for eq in &mut def.equations {
            eq.fun = copy.clone();
            rename_calls(&mut eq.rhs, &mut |h| (h == g).then(|| copy.clone()));
        }
        def.sized = None;
        out.functions.insert(copy, def);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_program;

    #[test]
    fn each_call_site_gets_a_copy() {
        let p = parse_program("id x = x\nlen [] = 0\nlen (x : xs) = Succ (len xs)\nf x = id (id (len x))\n").unwrap();
        let s = specialize(&p);
        assert!(s.function("id_s1").is_some() && s.function("id_s2").is_some());
        assert!(s.function("len_s1").is_none());
        let rhs = crate::syntax::pretty::term(&s.function("f").unwrap().equations[0].rhs);
        assert_eq!(rhs, "id_s1 (id_s2 (len x))");
    }

    #[test]
    fn recursive_copies_call_themselves() {
        let p = parse_program("len [] = 0\nlen (x : xs) = Succ (len xs)\ng x y = (len x, len y)\n").unwrap();
        let s = specialize(&p);
        let rhs = crate::syntax::pretty::term(&s.function("len_s2").unwrap().equations[1].rhs);
        assert_eq!(rhs, "Succ (len_s2 xs)");
    }
}
