//! Multivariate polynomials over a commutative ring of coefficients.
//!
//! Two instantiations matter in practice: `Poly<IVar, i64>` for ground
//! polynomials over index variables, and `Poly<IVar, Poly<u32, i64>>` in the
//! solver, where each coefficient is itself a polynomial over coefficient
//! unknowns.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Coefficient ring.
pub trait Coeff:
    Clone + PartialEq + fmt::Debug + Add<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_int(n: i64) -> Self;
    fn is_zero(&self) -> bool;
}

impl Coeff for i64 {
    fn zero() -> Self {
        0
    }
    fn one() -> Self {
        1
    }
    fn from_int(n: i64) -> Self {
        n
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
}

/// A product of variables with positive exponents, kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial<V: Ord>(BTreeMap<V, u32>);

impl<V: Ord + Clone> Monomial<V> {
    pub fn unit() -> Self {
        Monomial(BTreeMap::new())
    }

    pub fn var(v: V) -> Self {
        let mut m = BTreeMap::new();
        m.insert(v, 1);
        Monomial(m)
    }

    pub fn from_powers(powers: impl IntoIterator<Item = (V, u32)>) -> Self {
        let mut m = BTreeMap::new();
        for (v, e) in powers {
            if e > 0 {
                *m.entry(v).or_insert(0) += e;
            }
        }
        Monomial(m)
    }

    pub fn degree(&self) -> u32 {
        self.0.values().sum()
    }

    pub fn is_unit(&self) -> bool {
        self.0.is_empty()
    }

    pub fn powers(&self) -> impl Iterator<Item = (&V, u32)> {
        self.0.iter().map(|(v, e)| (v, *e))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut m = self.0.clone();
        for (v, e) in &other.0 {
            *m.entry(v.clone()).or_insert(0) += e;
        }
        Monomial(m)
    }
}

impl<V: Ord + fmt::Display> fmt::Display for Monomial<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let mut first = true;
        for (v, e) in &self.0 {
            for _ in 0..*e {
                if !first {
                    write!(f, "*")?;
                }
                write!(f, "{v}")?;
                first = false;
            }
        }
        Ok(())
    }
}

/// Sparse polynomial; zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly<V: Ord, C> {
    terms: BTreeMap<Monomial<V>, C>,
}

impl<V: Ord + Clone, C: Coeff> Default for Poly<V, C> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<V: Ord + Clone, C: Coeff> Poly<V, C> {
    pub fn zero() -> Self {
        Poly { terms: BTreeMap::new() }
    }

    pub fn constant(c: C) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::unit(), c);
        p
    }

    pub fn one() -> Self {
        Self::constant(C::one())
    }

    pub fn var(v: V) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::var(v), C::one());
        p
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial<V>, C)>) -> Self {
        let mut p = Self::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn add_term(&mut self, m: Monomial<V>, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.remove(&m) {
            Some(old) => {
                let sum = old + c;
                if !sum.is_zero() {
                    self.terms.insert(m, sum);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial<V>, &C)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial<V>) -> C {
        self.terms.get(m).cloned().unwrap_or_else(C::zero)
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn vars(&self) -> impl Iterator<Item = &V> {
        let mut vs: Vec<&V> = self.terms.keys().flat_map(|m| m.0.keys()).collect();
        vs.sort();
        vs.dedup();
        vs.into_iter()
    }

    pub fn scale(&self, c: &C) -> Self {
        Self::from_terms(self.terms.iter().map(|(m, k)| (m.clone(), k.clone() * c.clone())))
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Substitutes every variable by a polynomial over (possibly) other
    /// variables. Variables missing from `f` are an error of the caller.
    pub fn compose<W: Ord + Clone>(&self, f: &dyn Fn(&V) -> Poly<W, C>) -> Poly<W, C> {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut prod = Poly::constant(c.clone());
            for (v, e) in m.powers() {
                prod = &prod * &f(v).pow(e);
            }
            out = &out + &prod;
        }
        out
    }

    /// Maps coefficients, dropping those that become zero.
    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D) -> Poly<V, D> {
        Poly::from_terms(self.terms.iter().map(|(m, c)| (m.clone(), f(c))))
    }
}

impl<V: Ord + Clone> Poly<V, i64> {
    /// Evaluates at naturals, saturating instead of overflowing.
    pub fn eval_nat(&self, assign: &dyn Fn(&V) -> u128) -> i128 {
        let mut total: i128 = 0;
        for (m, c) in &self.terms {
            let mut prod: i128 = *c as i128;
            for (v, e) in m.powers() {
                let x = assign(v).min(i64::MAX as u128) as i128;
                for _ in 0..e {
                    prod = prod.saturating_mul(x);
                }
            }
            total = total.saturating_add(prod);
        }
        total
    }

    pub fn is_absolutely_positive(&self) -> bool {
        self.terms.values().all(|c| *c >= 0)
    }
}

impl<V: Ord + Clone, C: Coeff> Add for &Poly<V, C> {
    type Output = Poly<V, C>;
    fn add(self, rhs: Self) -> Poly<V, C> {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl<V: Ord + Clone, C: Coeff> Sub for &Poly<V, C> {
    type Output = Poly<V, C>;
    fn sub(self, rhs: Self) -> Poly<V, C> {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl<V: Ord + Clone, C: Coeff> Mul for &Poly<V, C> {
    type Output = Poly<V, C>;
    fn mul(self, rhs: Self) -> Poly<V, C> {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                out.add_term(m1.mul(m2), c1.clone() * c2.clone());
            }
        }
        out
    }
}

// Owned-operand forms, for `Poly<_, Poly<_, _>>` as a `Coeff`.
impl<V: Ord + Clone, C: Coeff> Add for Poly<V, C> {
    type Output = Poly<V, C>;
    fn add(self, rhs: Self) -> Self {
        &self + &rhs
    }
}

impl<V: Ord + Clone, C: Coeff> Mul for Poly<V, C> {
    type Output = Poly<V, C>;
    fn mul(self, rhs: Self) -> Self {
        &self * &rhs
    }
}

impl<V: Ord + Clone, C: Coeff> Neg for Poly<V, C> {
    type Output = Poly<V, C>;
    fn neg(self) -> Self {
        self.map_coeffs(|c| -c.clone())
    }
}

impl<V: Ord + Clone + fmt::Debug, C: Coeff> Coeff for Poly<V, C> {
    fn zero() -> Self {
        Poly::zero()
    }
    fn one() -> Self {
        Poly::one()
    }
    fn from_int(n: i64) -> Self {
        Poly::constant(C::from_int(n))
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl<V: Ord + Clone + fmt::Display> fmt::Display for Poly<V, i64> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // constant last, higher degree first
        let mut ts: Vec<_> = self.terms.iter().collect();
        ts.sort_by(|(a, _), (b, _)| b.degree().cmp(&a.degree()).then(a.cmp(b)));
        for (k, (m, c)) in ts.into_iter().enumerate() {
            let neg = *c < 0;
            let a = c.unsigned_abs();
            if k == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            if m.is_unit() {
                write!(f, "{a}")?;
            } else if a == 1 {
                write!(f, "{m}")?;
            } else {
                write!(f, "{a}*{m}")?;
            }
        }
        Ok(())
    }
}
