//! Canonical sized templates over simple types, and the default additive
//! declarations of constructors.

use std::collections::BTreeMap;

use super::{CheckError, Declarations};
use crate::index::{IVar, IndexTerm};
use crate::sized::{check_declaration, Monotype, Type};
use crate::syntax::ast::{ConInfo, Origin, Program, SimpleType, PAIR};

/// Index variables named `i1, i2, ...`.
struct Names {
    vars: usize,
}

impl Names {
    fn var(&mut self) -> IVar {
        self.vars += 1;
        IVar(format!("i{}", self.vars))
    }
}

/// Placeholder marking a positive position still waiting for a symbol.
const HOLE: &str = "?hole";

fn hole() -> IndexTerm {
    IndexTerm::sym(HOLE, vec![])
}

struct Builder {
    names: Names,
    rank_exceeded: bool,
}

impl Builder {
    /// Sized shape of `t` at the given polarity (relative to the enclosing
    /// quantifier, whose variables collect in `binder`).
    fn shape(&mut self, t: &SimpleType, positive: bool, binder: &mut Vec<IVar>, env: &mut Vec<IVar>, depth: usize) -> Monotype {
        match t {
            SimpleType::Base { name, args } => {
                let index = if positive {
                    hole()
                } else {
                    let v = self.names.var();
                    binder.push(v.clone());
                    IndexTerm::Var(v)
                };
                Monotype::Base { name: name.clone(), params: args.clone(), index }
            }
            SimpleType::Var(_) => Monotype::Unsized(t.clone()),
            SimpleType::Product(a, b) => {
                if !positive && (matches!(**a, SimpleType::Arrow(..)) || matches!(**b, SimpleType::Arrow(..))) {
                    return Monotype::Unsized(t.clone());
                }
                let a = self.shape(a, positive, binder, env, depth);
                let b = self.shape(b, positive, binder, env, depth);
                Monotype::product(a, b)
            }
            SimpleType::Arrow(d, c) => {
                if !positive {
                    return Monotype::Unsized(t.clone());
                }
                let dom = if matches!(**d, SimpleType::Arrow(..)) {
                    self.functional(d, binder, env, depth)
                } else {
                    Type::mono(self.shape(d, false, binder, env, depth))
                };
                let cod = self.shape(c, true, binder, env, depth);
                Monotype::Arrow(Box::new(dom), Box::new(cod))
            }
        }
    }

    /// Polytype for a functional argument; its positive positions may also
    /// depend on a fresh variable of the enclosing quantifier.
    fn functional(&mut self, t: &SimpleType, outer: &mut Vec<IVar>, env: &mut Vec<IVar>, depth: usize) -> Type {
        if depth >= 1 {
            self.rank_exceeded = true;
            return Type::mono(Monotype::Unsized(t.clone()));
        }
        let mut binder = Vec::new();
        let mut inner_env = Vec::new();
        let body = self.shape(t, true, &mut binder, &mut inner_env, depth + 1);
        let mut holes = BTreeMap::new();
        body.symbols(&mut holes);
        if holes.contains_key(HOLE) {
            let e = self.names.var();
            outer.push(e.clone());
            env.push(e.clone());
            let scope: Vec<IVar> = binder.iter().cloned().chain([e]).collect();
            let body = fill(&body, &scope);
            return Type::forall(binder, body);
        }
        Type::forall(binder, body)
    }
}

/// Replaces holes by provisional symbols over `scope`, leaving nested
/// quantified bodies (already filled) untouched.
fn fill(m: &Monotype, scope: &[IVar]) -> Monotype {
    match m {
        Monotype::Base { name, params, index } if *index == hole() => {
            let args = scope.iter().cloned().map(IndexTerm::Var).collect();
            Monotype::Base { name: name.clone(), params: params.clone(), index: IndexTerm::sym(format!("{HOLE}:"), args) }
        }
        Monotype::Product(a, b) => Monotype::product(fill(a, scope), fill(b, scope)),
        Monotype::Arrow(d, c) => {
            let d = if d.is_mono() { Type::mono(fill(&d.body, scope)) } else { (**d).clone() };
            Monotype::Arrow(Box::new(d), Box::new(fill(c, scope)))
        }
        _ => m.clone(),
    }
}

trait MapSymbols {
    fn map_symbols(&self, fresh: &mut dyn FnMut() -> String) -> Self;
}

impl MapSymbols for IndexTerm {
    fn map_symbols(&self, fresh: &mut dyn FnMut() -> String) -> Self {
        match self {
            IndexTerm::App(crate::index::IndexSymbol::Unknown(n), args) if n.starts_with(HOLE) => {
                IndexTerm::sym(fresh(), args.iter().map(|a| a.map_symbols(fresh)).collect())
            }
            IndexTerm::App(h, args) => IndexTerm::App(h.clone(), args.iter().map(|a| a.map_symbols(fresh)).collect()),
            v => v.clone(),
        }
    }
}

impl MapSymbols for Monotype {
    fn map_symbols(&self, fresh: &mut dyn FnMut() -> String) -> Self {
        match self {
            Monotype::Base { name, params, index } => {
                Monotype::Base { name: name.clone(), params: params.clone(), index: index.map_symbols(fresh) }
            }
            Monotype::Unsized(_) => self.clone(),
            Monotype::Product(a, b) => {
                let a = a.map_symbols(fresh);
                Monotype::product(a, b.map_symbols(fresh))
            }
            Monotype::Arrow(d, c) => {
                let d = Type { bound: d.bound.clone(), body: d.body.map_symbols(fresh) };
                let c = c.map_symbols(fresh);
                Monotype::Arrow(Box::new(d), Box::new(c))
            }
        }
    }
}

/// Canonical template for a function of simple type `t`. `fresh` names the
/// unknown symbols in order of appearance.
pub fn template_for(name: &str, t: &SimpleType, fresh: &mut dyn FnMut() -> String) -> Result<Type, CheckError> {
    let mut b = Builder { names: Names { vars: 0 }, rank_exceeded: false };
    let mut binder = Vec::new();
    let mut env = Vec::new();
    let body = b.shape(t, true, &mut binder, &mut env, 0);
    if b.rank_exceeded {
        return Err(CheckError::UnsupportedRank { name: name.to_string() });
    }
    let body = fill(&body, &binder).map_symbols(fresh);
    let ty = Type::forall(binder, body);
    check_declaration(&ty).map_err(|error| CheckError::NonCanonicalDeclaration { name: name.to_string(), error })?;
    Ok(ty)
}

/// Declarations for every function: user annotations where present (checked
/// for closedness, canonicity and skeleton), templates elsewhere. Template
/// symbols are named `F1, F2, ...` in program order.
pub fn generate_templates(prog: &Program, user: &BTreeMap<String, Type>) -> Result<Declarations, CheckError> {
    let mut decls = Declarations::default();
    let mut counter = 0usize;
    let taken: Vec<String> = user.values().flat_map(|t| t.symbols().into_keys()).collect();
    for f in prog.functions.values() {
        if f.origin == Origin::Continuation {
            continue;
        }
        let simple = f.ty();
        if let Some(t) = user.get(&f.name) {
            check_declaration(t).map_err(|error| CheckError::NonCanonicalDeclaration { name: f.name.clone(), error })?;
            if t.skeleton() != *simple {
                return Err(CheckError::DeclarationSkeleton {
                    name: f.name.clone(),
                    expected: simple.to_string(),
                    found: t.skeleton().to_string(),
                });
            }
            decls.insert(f.name.clone(), t.clone());
            decls.user.insert(f.name.clone());
            continue;
        }
        let mut made = Vec::new();
        let mut fresh = || loop {
            counter += 1;
            let n = format!("F{counter}");
            if !taken.contains(&n) {
                made.push(n.clone());
                return n;
            }
        };
        let t = match template_for(&f.name, simple, &mut fresh) {
            Ok(t) => t,
            Err(e) => {
                decls.failed.insert(f.name.clone(), e);
                continue;
            }
        };
        for s in made {
            decls.owners.insert(s, f.name.clone());
        }
        decls.insert(f.name.clone(), t);
    }
    for (f, t) in user {
        for s in t.symbols().into_keys() {
            decls.owners.entry(s).or_insert_with(|| f.clone());
        }
    }
    Ok(decls)
}

fn sized_field(t: &SimpleType, binder: &mut Vec<IVar>, sum: &mut Option<IndexTerm>) -> Monotype {
    match t {
        SimpleType::Base { name, args } => {
            let v = IVar(format!("i{}", binder.len() + 1));
            binder.push(v.clone());
            let x = IndexTerm::Var(v);
            *sum = Some(match sum.take() {
                None => x.clone(),
                Some(s) => IndexTerm::add(s, x.clone()),
            });
            Monotype::Base { name: name.clone(), params: args.clone(), index: x }
        }
        _ => Monotype::Unsized(t.clone()),
    }
}

/// Additive declaration of a constructor over its datatype's parameters:
/// nullary constructors have size 0, others one plus the sizes of their
/// indexed arguments.
pub fn constructor_type(info: &ConInfo) -> Type {
    if info.name == PAIR {
        return sized_identity(&info.ty());
    }
    let mut binder = Vec::new();
    let mut sum = None;
    let args: Vec<Monotype> = info.args.iter().map(|a| sized_field(a, &mut binder, &mut sum)).collect();
    let size = if info.args.is_empty() {
        IndexTerm::zero()
    } else {
        match sum {
            None => IndexTerm::numeral(1),
            Some(s) => IndexTerm::succ(s),
        }
    };
    let SimpleType::Base { name, args: params } = &info.result else { unreachable!("constructors build base types") };
    let result = Monotype::Base { name: name.clone(), params: params.clone(), index: size };
    let body = args.into_iter().rev().fold(result, |acc, a| Monotype::arrow(a, acc));
    Type::forall(binder, body)
}

/// `forall is. s1 -> ... -> sn -> r` where the result copies the argument
/// sizes position by position, as needed for pairing; functional parts are
/// not tracked.
pub fn sized_identity(t: &SimpleType) -> Type {
    fn copy(t: &SimpleType, binder: &mut Vec<IVar>) -> Monotype {
        match t {
            SimpleType::Base { name, args } => {
                let v = IVar(format!("i{}", binder.len() + 1));
                binder.push(v.clone());
                Monotype::Base { name: name.clone(), params: args.clone(), index: IndexTerm::Var(v) }
            }
            SimpleType::Product(a, b) => {
                let a = copy(a, binder);
                Monotype::product(a, copy(b, binder))
            }
            _ => Monotype::Unsized(t.clone()),
        }
    }
    let mut binder = Vec::new();
    let mut doms = Vec::new();
    let mut cur = t;
    while let SimpleType::Arrow(d, c) = cur {
        doms.push(copy(d, &mut binder));
        cur = c;
    }
    // result: rebuild from the argument shapes when it is their product
    let result = match (cur, doms.as_slice()) {
        (SimpleType::Product(..), [a, b]) => Monotype::product(a.clone(), b.clone()),
        _ => Monotype::Unsized(cur.clone()),
    };
    let body = doms.into_iter().rev().fold(result, |acc, a| Monotype::arrow(a, acc));
    Type::forall(binder, body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_simple_type;

    fn tmpl(src: &str) -> String {
        let mut n = 0;
        let t = template_for("f", &parse_simple_type(src).unwrap(), &mut || {
            n += 1;
            format!("F{n}")
        })
        .unwrap();
        t.to_string()
    }

    #[test]
    fn first_order_templates() {
        assert_eq!(tmpl("List a -> List a -> List a"), "forall i1 i2. L i1 a -> L i2 a -> L (F1(i1, i2)) a");
        assert_eq!(tmpl("Nat"), "Nat (F1())");
        assert_eq!(tmpl("List a -> (List a, Nat)"), "forall i1. L i1 a -> (L (F1(i1)) a, Nat (F2(i1)))");
    }

    #[test]
    fn rank_two_templates() {
        assert_eq!(
            tmpl("(Nat -> Nat) -> Nat -> Nat"),
            "forall i2 i3. (forall i1. Nat i1 -> Nat (F1(i1, i2))) -> Nat i3 -> Nat (F2(i2, i3))"
        );
        assert_eq!(
            tmpl("(a -> List b -> List b) -> List b -> List a -> List b"),
            "forall i2 i3 i4. (forall i1. a -> L i1 b -> L (F1(i1, i2)) b) -> L i3 b -> L i4 a -> L (F2(i2, i3, i4)) b"
        );
        assert_eq!(tmpl("(a -> b) -> List a -> List b"), "forall i1. (a -> b) -> L i1 a -> L (F1(i1)) b");
    }

    #[test]
    fn rank_three_is_refused() {
        let t = parse_simple_type("((Nat -> Nat) -> Nat) -> Nat").unwrap();
        let r = template_for("g", &t, &mut || "F".into());
        assert_eq!(r, Err(CheckError::UnsupportedRank { name: "g".into() }));
    }

    #[test]
    fn constructor_declarations() {
        let p = Program::with_builtins();
        assert_eq!(constructor_type(&p.constructor("Cons").unwrap()).to_string(), "forall i1. a -> L i1 a -> L (i1 + 1) a");
        assert_eq!(constructor_type(&p.constructor("Nil").unwrap()).to_string(), "L 0 a");
        assert_eq!(constructor_type(&p.constructor("Succ").unwrap()).to_string(), "forall i1. Nat i1 -> Nat (i1 + 1)");
        assert_eq!(constructor_type(&p.constructor("Zero").unwrap()).to_string(), "Nat 0");
        let pair = sized_identity(&parse_simple_type("Nat -> List a -> (Nat, List a)").unwrap());
        assert_eq!(pair.to_string(), "forall i1 i2. Nat i1 -> L i2 a -> (Nat i1, L i2 a)");
    }
}
