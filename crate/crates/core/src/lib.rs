//! Size analysis for first-order functional programs with higher-order
//! arguments: sized types, constraint generation, a polynomial constraint
//! solver, time analysis by clock threading, and a reference interpreter.

pub mod constraint;
pub mod index;
pub mod interp;
pub mod poly;
pub mod sized;
pub mod solver;
pub mod pipeline;
pub mod syntax;
pub mod ticking;
pub mod typecheck;

pub use constraint::{Constraint, ConstraintSet, Provenance};
pub use index::{Assignment, IVar, IndexError, IndexSymbol, IndexTerm, Interpretation, SymbolInterp, Verdict};
pub use poly::{Monomial, Poly};
pub use sized::{CanonicalError, MetaContext, Monotype, SizedError, Type};
pub use syntax::ast::{Equation, FunDef, Pattern, Program, SimpleType, Term};
