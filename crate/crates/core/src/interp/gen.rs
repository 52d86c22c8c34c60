//! Seeded generation of argument values within a size budget.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::size::{size, SizeMeasure};
use super::Value;
use crate::syntax::ast::{Origin, Program, SimpleType, NAT, PAIR};

#[derive(Clone, Debug, PartialEq)]
pub struct InputGen {
    /// Largest size of any single argument.
    pub budget: u64,
    pub seed: u64,
    /// Number of random tuples when there are more than two arguments.
    pub samples: usize,
    /// Largest size of untracked components such as list elements.
    pub element_budget: u64,
    pub measure: SizeMeasure,
}

impl Default for InputGen {
    fn default() -> Self {
        InputGen { budget: 15, seed: 0, samples: 200, element_budget: 3, measure: SizeMeasure::Natural }
    }
}

/// First-order user functions: no argument or result type contains an arrow.
pub fn entry_points(prog: &Program) -> Vec<String> {
    prog.functions
        .values()
        .filter(|f| f.origin == Origin::User && f.arity > 0 && f.ty.is_some())
        .filter(|f| match f.ty().uncurry(f.arity) {
            Some((args, res)) => args.iter().all(|a| first_order(a)) && first_order(res),
            None => false,
        })
        .map(|f| f.name.clone())
        .collect()
}

fn first_order(t: &SimpleType) -> bool {
    match t {
        SimpleType::Arrow(..) => false,
        SimpleType::Base { args, .. } => args.iter().all(first_order),
        SimpleType::Product(a, b) => first_order(a) && first_order(b),
        SimpleType::Var(_) => true,
    }
}

/// Type variables become `Nat`.
fn ground(t: &SimpleType) -> SimpleType {
    let mut vs = BTreeSet::new();
    t.type_vars(&mut vs);
    let s: BTreeMap<String, SimpleType> = vs.into_iter().map(|v| (v, SimpleType::nat())).collect();
    t.subst(&s)
}

struct Gen<'a> {
    prog: &'a Program,
    rng: ChaCha8Rng,
    element_budget: u64,
}

impl Gen<'_> {
    /// A value of `t` with size `s`, if the type admits one.
    fn value(&mut self, t: &SimpleType, s: u64, depth: usize) -> Option<Value> {
        if depth > 4096 {
            return None;
        }
        match t {
            SimpleType::Base { name, .. } if name == NAT => Some(Value::nat(s)),
            SimpleType::Base { name, args } => {
                let d = self.prog.datatype(name)?;
                let inst: BTreeMap<String, SimpleType> = d.params.iter().cloned().zip(args.iter().cloned()).collect();
                let mut cands: Vec<&crate::syntax::ast::ConstructorDecl> = d
                    .constructors
                    .iter()
                    .filter(|c| {
                        let counted = c.args.iter().filter(|a| matches!(a, SimpleType::Base { .. })).count();
                        match s {
                            0 => c.args.is_empty(),
                            1 => !c.args.is_empty(),
                            _ => counted > 0,
                        }
                    })
                    .collect();
                cands.shuffle(&mut self.rng);
                'cands: for c in cands {
                    let counted: Vec<usize> =
                        (0..c.args.len()).filter(|k| matches!(c.args[*k], SimpleType::Base { .. })).collect();
                    let mut shares = vec![0u64; c.args.len()];
                    let rest = s.saturating_sub(1);
                    for _ in 0..rest {
                        let k = counted[self.rng.gen_range(0..counted.len())];
                        shares[k] += 1;
                    }
                    let mut vals = Vec::new();
                    for (k, a) in c.args.iter().enumerate() {
                        let at = a.subst(&inst);
                        let v = if counted.contains(&k) {
                            self.value(&at, shares[k], depth + 1)
                        } else {
                            let e = self.rng.gen_range(0..=self.element_budget);
                            self.value(&at, e, depth + 1)
                        };
                        match v {
                            Some(v) => vals.push(v),
                            None => continue 'cands,
                        }
                    }
                    return Some(Value::con(c.name.clone(), vals));
                }
                None
            }
            SimpleType::Product(a, b) => {
                let x = self.rng.gen_range(0..=s);
                let y = self.rng.gen_range(0..=s);
                Some(Value::con(PAIR, vec![self.value(a, x, depth + 1)?, self.value(b, y, depth + 1)?]))
            }
            SimpleType::Var(_) => Some(Value::nat(s)),
            SimpleType::Arrow(..) => None,
        }
    }
}

/// Argument tuples for a function with the given argument types: one tuple
/// per combination of argument sizes in `0..=budget` for at most two
/// arguments, `samples` random tuples otherwise.
pub fn generate_inputs(prog: &Program, arg_types: &[SimpleType], cfg: &InputGen) -> Vec<Vec<Value>> {
    let types: Vec<SimpleType> = arg_types.iter().map(ground).collect();
    let mut g = Gen { prog, rng: ChaCha8Rng::seed_from_u64(cfg.seed), element_budget: cfg.element_budget };
    let size_tuples: Vec<Vec<u64>> = if types.len() <= 2 {
        let mut out = vec![vec![]];
        for _ in &types {
            out = out.into_iter().flat_map(|t| (0..=cfg.budget).map(move |s| [t.clone(), vec![s]].concat())).collect();
        }
        out
    } else {
        (0..cfg.samples).map(|_| types.iter().map(|_| g.rng.gen_range(0..=cfg.budget)).collect()).collect()
    };
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for sizes in size_tuples {
        let vals: Option<Vec<Value>> = types.iter().zip(&sizes).map(|(t, s)| g.value(t, *s, 0)).collect();
        let Some(vals) = vals else { continue };
        let fits = vals.iter().all(|v| size(prog, v, cfg.measure).is_none_or(|n| n <= cfg.budget));
        if fits && seen.insert(vals.clone()) {
            out.push(vals);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_program;

    #[test]
    fn pairs_of_lists_cover_all_sizes() {
        let p = Program::with_builtins();
        let l = SimpleType::list(SimpleType::Var("a".into()));
        let cfg = InputGen { budget: 4, ..Default::default() };
        let ins = generate_inputs(&p, &[l.clone(), l], &cfg);
        assert_eq!(ins.len(), 25);
        let sizes: BTreeSet<(u64, u64)> = ins
            .iter()
            .map(|v| (size(&p, &v[0], cfg.measure).unwrap(), size(&p, &v[1], cfg.measure).unwrap()))
            .collect();
        assert_eq!(sizes.len(), 25);
    }

    #[test]
    fn generation_is_seeded() {
        let p = Program::with_builtins();
        let l = SimpleType::list(SimpleType::nat());
        let cfg = InputGen { budget: 6, seed: 3, ..Default::default() };
        assert_eq!(generate_inputs(&p, std::slice::from_ref(&l), &cfg), generate_inputs(&p, &[l], &cfg));
    }

    #[test]
    fn user_datatypes_reach_exact_sizes() {
        let p = parse_program("data Tree a = Leaf | Node (Tree a) a (Tree a)\nf t = t\n").unwrap();
        let t = SimpleType::Base { name: "Tree".into(), args: vec![SimpleType::nat()] };
        let ins = generate_inputs(&p, &[t], &InputGen { budget: 7, ..Default::default() });
        let sizes: Vec<u64> = ins.iter().map(|v| size(&p, &v[0], SizeMeasure::Natural).unwrap()).collect();
        assert_eq!(sizes, (0..=7).collect::<Vec<_>>());
    }

    #[test]
    fn entry_points_are_first_order() {
        let p = crate::syntax::simple::typecheck(
            &parse_program("map f [] = []\nmap f (x : xs) = f x : map f xs\nid x = x\n").unwrap(),
        )
        .unwrap();
        assert_eq!(entry_points(&p), ["id"]);
    }
}
