//! Problem documents: parsing, printing and compilation to universes.

pub mod ast;
mod compile;
mod parser;
mod print;

pub use ast::{Pos, ProblemSpec};
pub use compile::{compile, CompileOptions, EstimandPlan, Problem, Recognized};
pub use parser::parse;
pub use print::print;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("{pos}: syntax error: {message}")]
    Syntax { pos: Pos, message: String },
    #[error("{pos}: unknown identifier `{name}`")]
    UnknownIdentifier { pos: Pos, name: String },
    #[error("{pos}: duplicate declaration of `{name}`")]
    DuplicateDeclaration { pos: Pos, name: String },
}
