//! Lambda lifting: every lambda becomes a fresh top-level function whose
//! leading parameters are the variables it captures.

use super::ast::*;

struct Lifter<'a> {
    prog: &'a Program,
    parent: String,
    counter: usize,
    lifted: Vec<FunDef>,
}

impl Lifter<'_> {
    fn fresh_name(&mut self) -> String {
        loop {
            self.counter += 1;
            let name = format!("{}_lam{}", self.parent, self.counter);
            if !self.prog.functions.contains_key(&name) && !self.lifted.iter().any(|f| f.name == name) {
                return name;
            }
        }
    }

    fn lift(&mut self, t: Term) -> Term {
        let span = t.span;
        match t.kind {
            TermKind::App(f, a) => {
                let f = self.lift(*f);
                let a = self.lift(*a);
                Term::new(TermKind::App(Box::new(f), Box::new(a)), span)
            }
            TermKind::Lam(params, body) => {
                let body = self.lift(*body);
                let mut captured = Vec::new();
                body.free_vars(&mut captured);
                captured.retain(|v| !params.contains(v));
                let name = self.fresh_name();
                let lhs: Vec<Pattern> = captured
                    .iter()
                    .chain(params.iter())
                    .map(|v| Pattern { kind: PatternKind::Var(v.clone()), span, ty: None })
                    .collect();
                let mut def = FunDef::new(name.clone(), span);
                def.arity = lhs.len();
                def.origin = Origin::Lifted;
                def.equations.push(Equation { fun: name.clone(), lhs, rhs: body, span });
                self.lifted.push(def);
                let head = Term::new(TermKind::Fun(name), span);
                captured
                    .into_iter()
                    .fold(head, |acc, v| Term::new(TermKind::App(Box::new(acc), Box::new(Term::new(TermKind::Var(v), span))), span))
            }
            kind => Term { kind, span, ty: t.ty },
        }
    }
}

/// Lifts all lambdas; lifted functions follow the function they came from.
pub fn lambda_lift(prog: &Program) -> Program {
    let mut out = Program { datatypes: prog.datatypes.clone(), functions: Default::default() };
    for f in prog.functions.values() {
        let mut lifter = Lifter { prog, parent: f.name.clone(), counter: 0, lifted: vec![] };
        let mut g = f.clone();
        g.equations = f
            .equations
            .iter()
            .map(|eq| Equation { rhs: lifter.lift(eq.rhs.clone()), ..eq.clone() })
            .collect();
        out.functions.insert(g.name.clone(), g);
        for l in lifter.lifted {
            out.functions.insert(l.name.clone(), l);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_program, pretty};

    #[test]
    fn captured_variables_come_first() {
        let p = parse_program("map f [] = []\nmap f (x : xs) = f x : map f xs\nadd n ys = map (\\y. plus y n) ys\nplus 0 m = m\nplus (Succ k) m = Succ (plus k m)").unwrap();
        let l = lambda_lift(&p);
        let lam = &l.functions["add_lam1"];
        assert_eq!(lam.origin, Origin::Lifted);
        assert_eq!(pretty::equation(&lam.equations[0]), "add_lam1 n y = plus y n");
        assert_eq!(pretty::equation(&l.functions["add"].equations[0]), "add n ys = map (add_lam1 n) ys");
        assert!(!l.equations().any(|e| e.rhs.contains_lambda()));
    }

    #[test]
    fn nested_lambdas_lift_innermost_first() {
        let p = parse_program("k x = \\y. \\z. x").unwrap();
        let l = lambda_lift(&p);
        assert_eq!(pretty::equation(&l.functions["k_lam1"].equations[0]), "k_lam1 x z = x");
        assert_eq!(pretty::equation(&l.functions["k_lam2"].equations[0]), "k_lam2 x y = k_lam1 x");
        assert_eq!(pretty::equation(&l.functions["k"].equations[0]), "k x = k_lam2 x");
    }
}
