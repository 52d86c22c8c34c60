//! Surface language: abstract syntax, parsing, printing and static checks.

pub mod ast;
pub mod callgraph;
pub mod lexer;
pub mod lift;
pub mod parser;
pub mod pretty;
pub mod simple;
pub mod wellformed;

use thiserror::Error;

use ast::Span;

pub use parser::{parse_index_term, parse_program, parse_simple_type, parse_sized_type};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SyntaxError {
    #[error("{span}: {message}")]
    Parse { span: Span, message: String },
    #[error("{span}: variable `{var}` occurs more than once in a left-hand side of `{fun}`")]
    NonLinearLhs { fun: String, var: String, span: Span },
    #[error("{span}: unbound variable `{name}`")]
    UnboundVariable { name: String, span: Span },
    #[error("{span}: unknown constructor `{name}`")]
    UnknownConstructor { name: String, span: Span },
    #[error("{span}: unknown type `{name}`")]
    UnknownType { name: String, span: Span },
    #[error("{span}: constructor `{name}` expects {expected} arguments in a pattern, got {got}")]
    PatternArity { name: String, expected: usize, got: usize, span: Span },
    #[error("{second}: left-hand side overlaps the equation at {first} of `{fun}`")]
    OverlappingLhs { fun: String, first: Span, second: Span },
    #[error("{span}: equations of `{fun}` have {got} patterns, expected {expected}")]
    ArityMismatch { fun: String, expected: usize, got: usize, span: Span },
    #[error("{span}: `{name}` is defined more than once")]
    Duplicate { name: String, span: Span },
    #[error("{span}: `{fun}` has a signature but no equations")]
    MissingEquations { fun: String, span: Span },
    #[error("{span}: lambda remains after lifting")]
    LeftoverLambda { span: Span },
}

impl SyntaxError {
    pub fn parse(span: Span, message: impl Into<String>) -> Self {
        SyntaxError::Parse { span, message: message.into() }
    }
}
