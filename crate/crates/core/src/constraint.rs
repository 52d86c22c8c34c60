//! Index inequalities produced by type checking, and their text format.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::index::IndexTerm;
use crate::syntax::ast::Span;

/// Where a constraint came from.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub function: String,
    /// Equation index within the function.
    pub equation: usize,
    pub span: Span,
    pub rule: String,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.function.is_empty() {
            write!(f, "{}", self.rule)
        } else {
            write!(f, "{}/{} @{} {}", self.function, self.equation, self.span, self.rule)
        }
    }
}

/// `lhs <= rhs`, universally quantified over its variables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Constraint {
    pub lhs: IndexTerm,
    pub rhs: IndexTerm,
    pub origin: Provenance,
    /// Call-graph SCC of the defining function, when known.
    pub scc: Option<usize>,
}

impl Constraint {
    pub fn new(lhs: IndexTerm, rhs: IndexTerm) -> Self {
        Constraint { lhs, rhs, origin: Provenance::default(), scc: None }
    }

    pub fn symbols(&self) -> BTreeMap<String, usize> {
        let mut out = self.lhs.symbols();
        out.extend(self.rhs.symbols());
        out
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <= {}", self.lhs, self.rhs)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ConstraintSet {
    pub constraints: Vec<Constraint>,
    /// Function owning each unknown symbol (the declaration it annotates, or
    /// the equation that introduced it).
    pub owners: BTreeMap<String, String>,
}

impl ConstraintSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, c: Constraint) {
        self.constraints.push(c);
    }

    pub fn merge(&mut self, other: ConstraintSet) {
        self.constraints.extend(other.constraints);
        self.owners.extend(other.owners);
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Constraint> {
        self.constraints.iter()
    }

    pub fn symbols(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for c in &self.constraints {
            out.extend(c.symbols());
        }
        out
    }

    /// Dependency edges `(a, b)`: solving `a` needs `b` fixed. Symbols on a
    /// right-hand side depend on those on the left-hand side and on each other.
    pub fn symbol_deps(&self) -> BTreeSet<(String, String)> {
        let mut deps = BTreeSet::new();
        for c in &self.constraints {
            let lhs: Vec<String> = c.lhs.symbols().into_keys().collect();
            let rhs: Vec<String> = c.rhs.symbols().into_keys().collect();
            for r in &rhs {
                for l in &lhs {
                    deps.insert((r.clone(), l.clone()));
                }
                for r2 in &rhs {
                    deps.insert((r.clone(), r2.clone()));
                }
            }
        }
        deps
    }

    /// One constraint per line, `lhs <= rhs ; origin`, with `-- scc N`
    /// headers whenever the SCC tag changes.
    pub fn export(&self) -> String {
        let mut out = String::new();
        let mut current: Option<Option<usize>> = None;
        for c in &self.constraints {
            if current != Some(c.scc) {
                if let Some(n) = c.scc {
                    out.push_str(&format!("-- scc {n}\n"));
                }
                current = Some(c.scc);
            }
            out.push_str(&format!("{} ; {}\n", c, c.origin));
        }
        out
    }
}

impl fmt::Display for ConstraintSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.export())
    }
}
