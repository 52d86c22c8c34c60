//! Size indices: terms over index variables and index symbols, their
//! interpretation as weakly monotone functions over the naturals, and the
//! inequality check used throughout the type system.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::{Monomial, Poly};

/// Index variable.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct IVar(pub String);

impl IVar {
    pub fn new(name: impl Into<String>) -> Self {
        IVar(name.into())
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    /// Inference placeholders are spelled `?n` and never leak into results.
    pub fn is_meta(&self) -> bool {
        self.0.starts_with('?')
    }
}

impl fmt::Display for IVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for IVar {
    fn from(s: &str) -> Self {
        IVar(s.to_string())
    }
}

/// Head symbol of a compound index term.
///
/// `Zero`, `Succ` and `Plus` are the fixed builtins; `Mul` is an additional
/// builtin read as multiplication. `Unknown` symbols get their meaning from
/// an [`Interpretation`].
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IndexSymbol {
    Zero,
    Succ,
    Plus,
    Mul,
    Unknown(String),
}

impl IndexSymbol {
    pub fn builtin_arity(&self) -> Option<usize> {
        match self {
            IndexSymbol::Zero => Some(0),
            IndexSymbol::Succ => Some(1),
            IndexSymbol::Plus | IndexSymbol::Mul => Some(2),
            IndexSymbol::Unknown(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IndexTerm {
    Var(IVar),
    App(IndexSymbol, Vec<IndexTerm>),
}

impl IndexTerm {
    pub fn var(name: impl Into<String>) -> Self {
        IndexTerm::Var(IVar::new(name))
    }

    pub fn zero() -> Self {
        IndexTerm::App(IndexSymbol::Zero, vec![])
    }

    pub fn succ(t: IndexTerm) -> Self {
        IndexTerm::App(IndexSymbol::Succ, vec![t])
    }

    pub fn add(a: IndexTerm, b: IndexTerm) -> Self {
        IndexTerm::App(IndexSymbol::Plus, vec![a, b])
    }

    pub fn mul(a: IndexTerm, b: IndexTerm) -> Self {
        IndexTerm::App(IndexSymbol::Mul, vec![a, b])
    }

    pub fn sym(name: impl Into<String>, args: Vec<IndexTerm>) -> Self {
        IndexTerm::App(IndexSymbol::Unknown(name.into()), args)
    }

    /// `s(s(...s(t)))` with `n` successors.
    pub fn plus_const(t: IndexTerm, n: u64) -> Self {
        (0..n).fold(t, |acc, _| IndexTerm::succ(acc))
    }

    /// Unary up to 64, by doubling above.
    pub fn numeral(n: u64) -> Self {
        if n <= 64 {
            Self::plus_const(Self::zero(), n)
        } else {
            Self::plus_const(Self::mul(Self::numeral(2), Self::numeral(n / 2)), n % 2)
        }
    }

    pub fn as_var(&self) -> Option<&IVar> {
        match self {
            IndexTerm::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn vars(&self) -> BTreeSet<IVar> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<IVar>) {
        match self {
            IndexTerm::Var(v) => {
                out.insert(v.clone());
            }
            IndexTerm::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    /// Unknown symbols with their arities.
    pub fn symbols(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        self.collect_symbols(&mut out);
        out
    }

    pub fn collect_symbols(&self, out: &mut BTreeMap<String, usize>) {
        if let IndexTerm::App(head, args) = self {
            if let IndexSymbol::Unknown(name) = head {
                out.insert(name.clone(), args.len());
            }
            args.iter().for_each(|a| a.collect_symbols(out));
        }
    }

    pub fn substitute(&self, theta: &IndexSubst) -> IndexTerm {
        match self {
            IndexTerm::Var(v) => theta.get(v).cloned().unwrap_or_else(|| self.clone()),
            IndexTerm::App(h, args) => {
                IndexTerm::App(h.clone(), args.iter().map(|a| a.substitute(theta)).collect())
            }
        }
    }

    pub fn rename(&self, f: &dyn Fn(&IVar) -> Option<IVar>) -> IndexTerm {
        match self {
            IndexTerm::Var(v) => IndexTerm::Var(f(v).unwrap_or_else(|| v.clone())),
            IndexTerm::App(h, args) => IndexTerm::App(h.clone(), args.iter().map(|a| a.rename(f)).collect()),
        }
    }

    /// Replaces every unknown symbol application `F(a..)` for which `f`
    /// returns a term over the formal variables `x0..` by that term with the
    /// (already rewritten) arguments plugged in.
    pub fn expand_symbols(&self, f: &dyn Fn(&str) -> Option<IndexTerm>) -> IndexTerm {
        match self {
            IndexTerm::Var(_) => self.clone(),
            IndexTerm::App(h, args) => {
                let args: Vec<IndexTerm> = args.iter().map(|a| a.expand_symbols(f)).collect();
                if let IndexSymbol::Unknown(name) = h {
                    if let Some(body) = f(name) {
                        let theta: IndexSubst =
                            args.into_iter().enumerate().map(|(k, a)| (formal(k), a)).collect();
                        return body.substitute(&theta);
                    }
                }
                IndexTerm::App(h.clone(), args)
            }
        }
    }

    /// Ground polynomial meaning of the term under `interp`.
    pub fn to_poly(&self, interp: &Interpretation) -> Result<Poly<IVar, i64>, IndexError> {
        match self {
            IndexTerm::Var(v) => Ok(Poly::var(v.clone())),
            IndexTerm::App(h, args) => {
                let ps = args.iter().map(|a| a.to_poly(interp)).collect::<Result<Vec<_>, _>>()?;
                Ok(match h {
                    IndexSymbol::Zero => Poly::zero(),
                    IndexSymbol::Succ => &ps[0] + &Poly::one(),
                    IndexSymbol::Plus => &ps[0] + &ps[1],
                    IndexSymbol::Mul => &ps[0] * &ps[1],
                    IndexSymbol::Unknown(name) => {
                        let body = interp
                            .get(name)
                            .ok_or_else(|| IndexError::UnboundSymbol(name.clone()))?;
                        if body.arity != ps.len() {
                            return Err(IndexError::ArityMismatch(name.clone(), body.arity, ps.len()));
                        }
                        body.poly.compose(&|k: &usize| ps[*k].clone())
                    }
                })
            }
        }
    }

    /// Structural size, used to prefer simpler terms when rendering.
    pub fn weight(&self) -> usize {
        match self {
            IndexTerm::Var(_) => 1,
            IndexTerm::App(_, args) => 1 + args.iter().map(IndexTerm::weight).sum::<usize>(),
        }
    }

    /// Rebuilds a readable term from a ground polynomial.
    pub fn from_poly(p: &Poly<IVar, i64>) -> IndexTerm {
        let mut ts: Vec<(&Monomial<IVar>, &i64)> = p.terms().collect();
        ts.sort_by(|(a, _), (b, _)| {
            b.degree().cmp(&a.degree()).then_with(|| a.cmp(b))
        });
        let mut acc: Option<IndexTerm> = None;
        let mut constant = 0u64;
        for (m, c) in ts {
            let c = (*c).max(0) as u64;
            if m.is_unit() {
                constant += c;
                continue;
            }
            let mut mono: Option<IndexTerm> = None;
            for (v, e) in m.powers() {
                for _ in 0..e {
                    let x = IndexTerm::Var(v.clone());
                    mono = Some(match mono {
                        None => x,
                        Some(prev) => IndexTerm::mul(prev, x),
                    });
                }
            }
            let mut mono = mono.expect("non-unit monomial");
            if c > 1 {
                mono = IndexTerm::mul(IndexTerm::numeral_literal(c), mono);
            }
            acc = Some(match acc {
                None => mono,
                Some(prev) => IndexTerm::add(prev, mono),
            });
        }
        match acc {
            None => IndexTerm::numeral(constant),
            Some(t) if constant <= 64 => IndexTerm::plus_const(t, constant),
            Some(t) => IndexTerm::add(t, IndexTerm::numeral(constant)),
        }
    }

    fn numeral_literal(n: u64) -> IndexTerm {
        IndexTerm::numeral(n)
    }

    /// Recognizes `s^n(t)`.
    fn peel_succ(&self) -> (&IndexTerm, u64) {
        let mut t = self;
        let mut n = 0;
        while let IndexTerm::App(IndexSymbol::Succ, args) = t {
            t = &args[0];
            n += 1;
        }
        (t, n)
    }
}

/// Formal argument `k` of an interpreted symbol, as an index variable.
pub fn formal(k: usize) -> IVar {
    IVar(format!("x{}", k + 1))
}

fn precedence(t: &IndexTerm) -> u8 {
    match t {
        IndexTerm::App(IndexSymbol::Plus, _) => 1,
        IndexTerm::App(IndexSymbol::Succ, _) => {
            let (base, _) = t.peel_succ();
            if matches!(base, IndexTerm::App(IndexSymbol::Zero, _)) {
                3
            } else {
                1
            }
        }
        IndexTerm::App(IndexSymbol::Mul, _) => 2,
        _ => 3,
    }
}

fn fmt_prec(t: &IndexTerm, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let p = precedence(t);
    if p < min {
        write!(f, "(")?;
        fmt_prec(t, 0, f)?;
        return write!(f, ")");
    }
    match t {
        IndexTerm::Var(v) => write!(f, "{v}"),
        IndexTerm::App(IndexSymbol::Zero, _) => write!(f, "0"),
        IndexTerm::App(IndexSymbol::Succ, _) => {
            let (base, n) = t.peel_succ();
            if matches!(base, IndexTerm::App(IndexSymbol::Zero, _)) {
                write!(f, "{n}")
            } else {
                fmt_prec(base, 1, f)?;
                write!(f, " + {n}")
            }
        }
        IndexTerm::App(IndexSymbol::Plus, args) => {
            fmt_prec(&args[0], 1, f)?;
            write!(f, " + ")?;
            fmt_prec(&args[1], 2, f)
        }
        IndexTerm::App(IndexSymbol::Mul, args) => {
            fmt_prec(&args[0], 2, f)?;
            write!(f, " * ")?;
            fmt_prec(&args[1], 3, f)
        }
        IndexTerm::App(IndexSymbol::Unknown(name), args) => {
            write!(f, "{name}(")?;
            for (k, a) in args.iter().enumerate() {
                if k > 0 {
                    write!(f, ", ")?;
                }
                fmt_prec(a, 0, f)?;
            }
            write!(f, ")")
        }
    }
}

impl fmt::Display for IndexTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_prec(self, 0, f)
    }
}

pub type IndexSubst = BTreeMap<IVar, IndexTerm>;

/// Total assignment of naturals to index variables: explicit entries plus a
/// default for every other variable.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Assignment {
    pub values: BTreeMap<IVar, u64>,
    pub default: u64,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, v: impl Into<String>, n: u64) -> Self {
        self.values.insert(IVar::new(v), n);
        self
    }

    pub fn get(&self, v: &IVar) -> u64 {
        self.values.get(v).copied().unwrap_or(self.default)
    }

    pub fn set(&mut self, v: IVar, n: u64) {
        self.values.insert(v, n);
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, (v, n)) in self.values.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}={n}")?;
        }
        write!(f, "}}")
    }
}

/// Meaning of one unknown symbol: a polynomial over its formal arguments
/// `0..arity` with natural coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolInterp {
    pub arity: usize,
    pub poly: Poly<usize, i64>,
}

impl SymbolInterp {
    pub fn new(arity: usize, poly: Poly<usize, i64>) -> Result<Self, IndexError> {
        if poly.terms().any(|(_, c)| *c < 0) {
            return Err(IndexError::NegativeCoefficient);
        }
        if poly.vars().any(|v| *v >= arity) {
            return Err(IndexError::FormalOutOfRange);
        }
        Ok(SymbolInterp { arity, poly })
    }

    /// The body as an index term over `x1..xn`.
    pub fn as_term(&self) -> IndexTerm {
        let p: Poly<IVar, i64> = self.poly.compose(&|k| Poly::var(formal(*k)));
        IndexTerm::from_poly(&p)
    }
}

impl fmt::Display for SymbolInterp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p: Poly<IVar, i64> = self.poly.compose(&|k| Poly::var(formal(*k)));
        write!(f, "{p}")
    }
}

/// Maps unknown index symbols to polynomials with natural coefficients.
/// Non-negative coefficients make every entry weakly monotone.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Interpretation {
    entries: BTreeMap<String, SymbolInterp>,
}

impl Interpretation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Option<&SymbolInterp> {
        self.entries.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn insert(&mut self, name: impl Into<String>, interp: SymbolInterp) {
        self.entries.insert(name.into(), interp);
    }

    pub fn extend(&mut self, other: &Interpretation) {
        for (k, v) in &other.entries {
            self.entries.insert(k.clone(), v.clone());
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &SymbolInterp)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Builds an entry from an index term over `x1..xn`.
    pub fn insert_term(&mut self, name: &str, arity: usize, body: &IndexTerm) -> Result<(), IndexError> {
        let p = body.to_poly(self)?;
        let mut formals = BTreeMap::new();
        for k in 0..arity {
            formals.insert(formal(k), k);
        }
        for v in p.vars() {
            if !formals.contains_key(v) {
                return Err(IndexError::FormalOutOfRange);
            }
        }
        let q: Poly<usize, i64> = p.compose(&|v| Poly::var(formals[v]));
        self.insert(name, SymbolInterp::new(arity, q)?);
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IndexError {
    #[error("index symbol `{0}` has no interpretation")]
    UnboundSymbol(String),
    #[error("index symbol `{0}` expects {1} arguments, got {2}")]
    ArityMismatch(String, usize, usize),
    #[error("interpretations must have non-negative coefficients")]
    NegativeCoefficient,
    #[error("interpretation mentions a variable outside its formal arguments")]
    FormalOutOfRange,
}

/// Value of `t` under `interp` and `alpha`.
pub fn evaluate(t: &IndexTerm, interp: &Interpretation, alpha: &Assignment) -> Result<u128, IndexError> {
    Ok(match t {
        IndexTerm::Var(v) => alpha.get(v) as u128,
        IndexTerm::App(h, args) => {
            let vs = args
                .iter()
                .map(|a| evaluate(a, interp, alpha))
                .collect::<Result<Vec<_>, _>>()?;
            match h {
                IndexSymbol::Zero => 0,
                IndexSymbol::Succ => vs[0].saturating_add(1),
                IndexSymbol::Plus => vs[0].saturating_add(vs[1]),
                IndexSymbol::Mul => vs[0].saturating_mul(vs[1]),
                IndexSymbol::Unknown(name) => {
                    let body = interp.get(name).ok_or_else(|| IndexError::UnboundSymbol(name.clone()))?;
                    if body.arity != vs.len() {
                        return Err(IndexError::ArityMismatch(name.clone(), body.arity, vs.len()));
                    }
                    body.poly.eval_nat(&|k| vs[*k]).max(0) as u128
                }
            }
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Yes,
    Unknown,
}

/// Sound check of `s <= t` for all assignments: the difference of the two
/// composed polynomials must have no negative coefficient.
pub fn leq_semantic(interp: &Interpretation, s: &IndexTerm, t: &IndexTerm) -> Result<Verdict, IndexError> {
    let diff = difference(interp, s, t)?;
    Ok(if diff.is_absolutely_positive() { Verdict::Yes } else { Verdict::Unknown })
}

/// `t - s` as a polynomial under `interp`.
pub fn difference(interp: &Interpretation, s: &IndexTerm, t: &IndexTerm) -> Result<Poly<IVar, i64>, IndexError> {
    Ok(&t.to_poly(interp)? - &s.to_poly(interp)?)
}

/// Searches for an assignment with `s > t`: first all corners of
/// `{0, 1, 2}^vars`, then `samples` uniform draws from `0..=max`.
pub fn refute<R: Rng>(
    interp: &Interpretation,
    s: &IndexTerm,
    t: &IndexTerm,
    max: u64,
    samples: usize,
    rng: &mut R,
) -> Result<Option<Assignment>, IndexError> {
    let mut vars = s.vars();
    vars.extend(t.vars());
    let vars: Vec<IVar> = vars.into_iter().collect();
    let violates = |a: &Assignment| -> Result<bool, IndexError> {
        Ok(evaluate(s, interp, a)? > evaluate(t, interp, a)?)
    };
    if vars.len() <= 8 {
        let corners = 3usize.pow(vars.len() as u32);
        for code in 0..corners {
            let mut a = Assignment::new();
            let mut c = code;
            for v in &vars {
                a.set(v.clone(), (c % 3) as u64);
                c /= 3;
            }
            if violates(&a)? {
                return Ok(Some(a));
            }
        }
    }
    for _ in 0..samples {
        let mut a = Assignment::new();
        for v in &vars {
            a.set(v.clone(), rng.gen_range(0..=max));
        }
        if violates(&a)? {
            return Ok(Some(a));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(n: &str) -> IndexTerm {
        IndexTerm::var(n)
    }

    fn mul_interp() -> Interpretation {
        let mut i = Interpretation::new();
        i.insert("g", SymbolInterp::new(2, &Poly::var(0) * &Poly::var(1)).unwrap());
        i
    }

    #[test]
    fn substitute_examples() {
        let mut theta = IndexSubst::new();
        theta.insert(IVar::from("i"), IndexTerm::succ(v("k")));
        let t = IndexTerm::add(v("i"), v("j"));
        assert_eq!(t.substitute(&theta), IndexTerm::add(IndexTerm::succ(v("k")), v("j")));
        assert_eq!(IndexTerm::zero().substitute(&theta), IndexTerm::zero());

        let mut theta = IndexSubst::new();
        let j1 = IndexTerm::succ(v("j"));
        theta.insert(IVar::from("i"), j1.clone());
        let g = IndexTerm::sym("g", vec![v("i"), v("i")]);
        assert_eq!(g.substitute(&theta), IndexTerm::sym("g", vec![j1.clone(), j1]));
    }

    #[test]
    fn evaluate_examples() {
        let a = Assignment::new().with("i", 3);
        let t = IndexTerm::add(v("i"), IndexTerm::succ(IndexTerm::zero()));
        assert_eq!(evaluate(&t, &Interpretation::new(), &a).unwrap(), 4);

        let a = Assignment::new().with("i", 2).with("j", 5);
        let g = IndexTerm::sym("g", vec![v("i"), v("j")]);
        assert_eq!(evaluate(&g, &mul_interp(), &a).unwrap(), 10);
        assert_eq!(evaluate(&IndexTerm::zero(), &Interpretation::new(), &a).unwrap(), 0);
    }

    #[test]
    fn unbound_symbol_is_reported() {
        let g = IndexTerm::sym("h", vec![v("i")]);
        assert_eq!(
            evaluate(&g, &Interpretation::new(), &Assignment::new()),
            Err(IndexError::UnboundSymbol("h".into()))
        );
    }

    #[test]
    fn leq_examples() {
        let empty = Interpretation::new();
        let i_plus_j = IndexTerm::add(v("i"), v("j"));
        assert_eq!(leq_semantic(&empty, &v("i"), &i_plus_j).unwrap(), Verdict::Yes);

        let sq = IndexTerm::mul(v("i"), v("i"));
        assert_eq!(leq_semantic(&empty, &sq, &v("i")).unwrap(), Verdict::Unknown);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cex = refute(&empty, &sq, &v("i"), 20, 100, &mut rng).unwrap().unwrap();
        let n = cex.get(&IVar::from("i"));
        assert!(n * n > n);
        assert_eq!(n, 2, "corner search finds the smallest violation first");

        let mut plus = Interpretation::new();
        plus.insert("g", SymbolInterp::new(2, &Poly::var(0) + &Poly::var(1)).unwrap());
        let g = IndexTerm::sym("g", vec![v("i"), v("j")]);
        let rhs = IndexTerm::succ(i_plus_j);
        assert_eq!(leq_semantic(&plus, &g, &rhs).unwrap(), Verdict::Yes);
        assert_eq!(difference(&plus, &g, &rhs).unwrap().to_string(), "1");
    }

    #[test]
    fn poly_round_trip_rendering() {
        let t = IndexTerm::add(IndexTerm::mul(v("l"), v("j")), v("k"));
        let p = t.to_poly(&Interpretation::new()).unwrap();
        let back = IndexTerm::from_poly(&p);
        assert_eq!(back.to_string(), "j * l + k");
        assert_eq!(IndexTerm::plus_const(v("i"), 2).to_string(), "i + 2");
        assert_eq!(IndexTerm::numeral(3).to_string(), "3");
    }

    #[test]
    fn large_numerals_stay_shallow() {
        let n = IndexTerm::numeral(1_000_001);
        assert_eq!(evaluate(&n, &Interpretation::new(), &Assignment::new()).unwrap(), 1_000_001);
        assert!(n.weight() < 200);
        let p = IndexTerm::plus_const(v("i"), 0).to_poly(&Interpretation::new()).unwrap();
        let big = IndexTerm::from_poly(&(&p + &Poly::constant(5_000)));
        assert_eq!(evaluate(&big, &Interpretation::new(), &Assignment::new().with("i", 2)).unwrap(), 5_002);
    }

    #[test]
    fn insert_term_builds_polynomial() {
        let mut i = Interpretation::new();
        let body = IndexTerm::add(IndexTerm::var("x1"), IndexTerm::var("x2"));
        i.insert_term("F", 2, &body).unwrap();
        assert_eq!(i.get("F").unwrap().to_string(), "x1 + x2");
        assert!(i.insert_term("G", 1, &IndexTerm::var("x2")).is_err());
    }
}
