//! Sized type checking: footprints of left-hand sides, syntax-directed typing
//! of right-hand sides, and template generation for inference.

mod infer;
mod specialize;
mod templates;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

pub use infer::{check_equation, check_program, footprint, infer_closed, infer_term, normalize_index, Footprint, ProgramCheck};
pub use specialize::{specialize, specialized_name};
pub use templates::{constructor_type, generate_templates, sized_identity, template_for};

use crate::constraint::Provenance;
use crate::index::{IndexError, IndexTerm, Interpretation};
use crate::sized::{CanonicalError, SizedError, Type};
use crate::syntax::ast::Span;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CheckError {
    #[error("declaration of `{name}` is not canonical: {error}")]
    NonCanonicalDeclaration { name: String, error: CanonicalError },
    #[error("declaration of `{name}` has skeleton `{found}` but its simple type is `{expected}`")]
    DeclarationSkeleton { name: String, expected: String, found: String },
    #[error("{span}: constructor pattern matched against non-base type `{ty}`")]
    PatternNotBase { span: Span, ty: String },
    #[error("{span}: {error}")]
    Sized { span: Span, error: SizedError },
    #[error("{origin}: cannot show `{lhs} <= {rhs}`")]
    SubtypeFailure { lhs: IndexTerm, rhs: IndexTerm, origin: Provenance },
    #[error("`{name}` needs a template of rank above 2; annotate it")]
    UnsupportedRank { name: String },
    #[error("no sized declaration for `{name}`")]
    MissingDeclaration { name: String },
    #[error(transparent)]
    Index(#[from] IndexError),
}

/// How right-hand sides are checked.
#[derive(Clone, Copy, Debug)]
pub enum Mode<'a> {
    /// Decide every emitted inequality under the interpretation.
    Semantic(&'a Interpretation),
    /// Collect inequalities for the solver.
    Generate,
}

/// Sized declarations of functions.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Declarations {
    pub funs: BTreeMap<String, Type>,
    /// Functions whose declaration came from the user.
    pub user: BTreeSet<String>,
    /// Owning function of each template symbol.
    pub owners: BTreeMap<String, String>,
    /// Functions for which no template could be built.
    pub failed: BTreeMap<String, CheckError>,
}

impl Declarations {
    pub fn get(&self, f: &str) -> Option<&Type> {
        self.funs.get(f)
    }

    pub fn insert(&mut self, f: impl Into<String>, t: Type) {
        self.funs.insert(f.into(), t);
    }

    /// Template symbols with their arities.
    pub fn symbols(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for t in self.funs.values() {
            out.extend(t.symbols());
        }
        out
    }

    /// Declarations with every symbol replaced by its interpretation.
    pub fn instantiate(&self, interp: &Interpretation) -> Declarations {
        let mut out = self.clone();
        for t in out.funs.values_mut() {
            *t = Type {
                bound: t.bound.clone(),
                body: t.body.map_index(&|ix| {
                    ix.expand_symbols(&|name| interp.get(name).map(|s| s.as_term()))
                }),
            };
        }
        out
    }
}

/// Sized declarations written by the user (`f ::: type`).
pub fn user_declarations(prog: &crate::syntax::ast::Program) -> BTreeMap<String, Type> {
    prog.functions.values().filter_map(|f| f.sized.clone().map(|t| (f.name.clone(), t))).collect()
}
