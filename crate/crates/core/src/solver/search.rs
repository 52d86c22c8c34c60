//! Coefficient search for one group of symbols.
//!
//! Every symbol of the group gets a template polynomial whose coefficients
//! are unknowns. Expanding `rhs - lhs` of each constraint yields, per
//! monomial over index variables, a polynomial in the unknowns that must be
//! non-negative. The search enumerates natural coefficient vectors by
//! depth-first search, pruning a branch as soon as some requirement cannot
//! become non-negative whatever the unassigned unknowns are.

use std::collections::BTreeMap;
use std::time::Instant;

use super::{SearchStrategy, SolverConfig};
use crate::constraint::Constraint;
use crate::index::{IVar, IndexError, IndexSymbol, IndexTerm, Interpretation, SymbolInterp};
use crate::poly::{Monomial, Poly};

/// Polynomial over coefficient unknowns.
type Coef = Poly<u32, i64>;
/// Polynomial over index variables with symbolic coefficients.
type SPoly = Poly<IVar, Coef>;

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Found(Interpretation),
    Unsat,
    Timeout,
}

/// Monomials over `arity` formals of degree at most `degree`, by degree and
/// then lexicographically.
pub fn monomials(arity: usize, degree: u32) -> Vec<Monomial<usize>> {
    fn rec(next: usize, arity: usize, left: u32, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        out.push(cur.clone());
        if left == 0 {
            return;
        }
        for v in next..arity {
            cur.push(v);
            rec(v, arity, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut all = Vec::new();
    rec(0, arity, degree, &mut Vec::new(), &mut all);
    all.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    all.into_iter().map(|vs| Monomial::from_powers(vs.into_iter().map(|v| (v, 1)))).collect()
}

struct Templates {
    /// Per symbol: arity and (monomial, unknown) pairs.
    shapes: BTreeMap<String, (usize, Vec<(Monomial<usize>, u32)>)>,
    unknowns: u32,
}

impl Templates {
    fn new(symbols: &[(String, usize)], degree: u32) -> Self {
        let mut shapes = BTreeMap::new();
        let mut next = 0;
        for (s, arity) in symbols {
            let ms = monomials(*arity, degree)
                .into_iter()
                .map(|m| {
                    next += 1;
                    (m, next - 1)
                })
                .collect();
            shapes.insert(s.clone(), (*arity, ms));
        }
        Templates { shapes, unknowns: next }
    }

    fn poly(&self, s: &str) -> Option<Poly<usize, Coef>> {
        let (_, ms) = self.shapes.get(s)?;
        Some(Poly::from_terms(ms.iter().map(|(m, u)| (m.clone(), Coef::var(*u)))))
    }

    fn interpretation(&self, values: &[i64]) -> Interpretation {
        let mut out = Interpretation::new();
        for (s, (arity, ms)) in &self.shapes {
            let p = Poly::from_terms(ms.iter().map(|(m, u)| (m.clone(), values[*u as usize])));
            out.insert(s.clone(), SymbolInterp::new(*arity, p).expect("natural coefficients over formals"));
        }
        out
    }
}

fn expand(t: &IndexTerm, tpl: &Templates, solved: &Interpretation) -> Result<SPoly, IndexError> {
    match t {
        IndexTerm::Var(v) => Ok(SPoly::var(v.clone())),
        IndexTerm::App(h, args) => {
            let ps = args.iter().map(|a| expand(a, tpl, solved)).collect::<Result<Vec<_>, _>>()?;
            Ok(match h {
                IndexSymbol::Zero => SPoly::zero(),
                IndexSymbol::Succ => &ps[0] + &SPoly::one(),
                IndexSymbol::Plus => &ps[0] + &ps[1],
                IndexSymbol::Mul => &ps[0] * &ps[1],
                IndexSymbol::Unknown(name) => {
                    let body: Poly<usize, Coef> = match (tpl.poly(name), solved.get(name)) {
                        (Some(p), _) => p,
                        (None, Some(s)) => s.poly.map_coeffs(|c| Coef::constant(*c)),
                        (None, None) => return Err(IndexError::UnboundSymbol(name.clone())),
                    };
                    body.compose(&|k: &usize| ps[*k].clone())
                }
            })
        }
    }
}

/// A requirement `sum c * prod u^e >= 0` over the unknowns.
#[derive(Debug)]
struct Req {
    terms: Vec<(i64, Vec<(usize, u32)>)>,
}

impl Req {
    /// Upper bound of the value when unassigned unknowns range over `0..=ub`.
    fn upper(&self, values: &[Option<i64>], ub: i64) -> i128 {
        let mut total: i128 = 0;
        for (c, vs) in &self.terms {
            let mut prod: i128 = *c as i128;
            for (u, e) in vs {
                let x = match values[*u] {
                    Some(x) => x,
                    None if *c > 0 => ub,
                    None => 0,
                } as i128;
                for _ in 0..*e {
                    prod = prod.saturating_mul(x);
                }
            }
            total = total.saturating_add(prod);
        }
        total
    }
}

struct Search<'a> {
    reqs: &'a [Req],
    /// Unknowns in search order; the others stay 0.
    order: Vec<usize>,
    bound: i64,
    deadline: Option<Instant>,
    nodes: u64,
    timed_out: bool,
}

impl Search<'_> {
    fn feasible(&self, values: &[Option<i64>], ub: i64) -> bool {
        self.reqs.iter().all(|r| r.upper(values, ub) >= 0)
    }

    fn tick(&mut self) -> bool {
        self.nodes += 1;
        if self.nodes.is_multiple_of(4096) {
            if let Some(d) = self.deadline {
                if Instant::now() >= d {
                    self.timed_out = true;
                }
            }
        }
        !self.timed_out
    }

    /// Depth-first search; with `budget`, the coefficients must sum to
    /// exactly that value.
    fn dfs(&mut self, k: usize, values: &mut Vec<Option<i64>>, budget: Option<i64>) -> bool {
        if !self.tick() {
            return false;
        }
        let ub = match budget {
            Some(b) => b.min(self.bound),
            None => self.bound,
        };
        if !self.feasible(values, ub) {
            return false;
        }
        if k == self.order.len() {
            return budget.is_none_or(|b| b == 0);
        }
        let u = self.order[k];
        let left = (self.order.len() - k - 1) as i64;
        let (lo, hi) = match budget {
            Some(b) => ((b - left * self.bound).max(0), b.min(self.bound)),
            None => (0, self.bound),
        };
        for x in lo..=hi {
            values[u] = Some(x);
            if self.dfs(k + 1, values, budget.map(|b| b - x)) {
                return true;
            }
            if self.timed_out {
                break;
            }
        }
        values[u] = None;
        false
    }
}

/// Searches interpretations of degree `degree` with coefficients in
/// `0..=bound` for `symbols`, given the already solved ones.
pub fn solve_group(
    constraints: &[&Constraint],
    symbols: &[(String, usize)],
    solved: &Interpretation,
    degree: u32,
    bound: i64,
    cfg: &SolverConfig,
    deadline: Option<Instant>,
) -> Result<Outcome, IndexError> {
    let tpl = Templates::new(symbols, degree);
    let mut reqs = Vec::new();
    for c in constraints {
        let diff = &expand(&c.rhs, &tpl, solved)? - &expand(&c.lhs, &tpl, solved)?;
        for (_, coef) in diff.terms() {
            let terms: Vec<(i64, Vec<(usize, u32)>)> =
                coef.terms().map(|(m, c)| (*c, m.powers().map(|(u, e)| (*u as usize, e)).collect())).collect();
            if terms.iter().all(|(c, vs)| vs.is_empty() && *c < 0) {
                return Ok(Outcome::Unsat);
            }
            if terms.iter().all(|(c, _)| *c >= 0) {
                continue;
            }
            reqs.push(Req { terms });
        }
    }
    let n = tpl.unknowns as usize;
    let mut used = vec![false; n];
    for r in &reqs {
        for (_, vs) in &r.terms {
            for (u, _) in vs {
                used[*u] = true;
            }
        }
    }
    let order: Vec<usize> = (0..n).filter(|u| used[*u]).collect();
    let mut s = Search { reqs: &reqs, order, bound, deadline, nodes: 0, timed_out: false };
    let mut values: Vec<Option<i64>> = (0..n).map(|u| if used[u] { None } else { Some(0) }).collect();
    if !s.dfs(0, &mut values, None) {
        return Ok(if s.timed_out { Outcome::Timeout } else { Outcome::Unsat });
    }
    if cfg.strategy == SearchStrategy::Restart {
        let first: i64 = values.iter().map(|v| v.unwrap_or(0)).sum();
        for budget in 0..first {
            let mut trial: Vec<Option<i64>> = (0..n).map(|u| if used[u] { None } else { Some(0) }).collect();
            if s.dfs(0, &mut trial, Some(budget)) {
                values = trial;
                break;
            }
            if s.timed_out {
                return Ok(Outcome::Timeout);
            }
        }
    }
    let values: Vec<i64> = values.into_iter().map(|v| v.unwrap_or(0)).collect();
    Ok(Outcome::Found(tpl.interpretation(&values)))
}
