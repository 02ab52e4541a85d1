//! Problem files, the expression grammar and report emission.

mod expr;
mod problem;
mod render;
mod report;

pub use expr::{parse_expression, parse_expression_at, parse_subscript, Scope};
pub use problem::{
    parse_base_point, parse_deps, parse_problem, parse_problem_json, parse_weights, Problem,
    RawAnsatz, RawFunction, RawLaw, RawPair, RawProblem,
};
pub use render::{latex, render};
pub use report::{
    assumption_text, symmetry_label, Agreement, Diagnostic, LawEntry, MultiplierEntry, Report,
    WeightEntry,
};

use thiserror::Error;

use crate::error::{KernelError, ProblemError};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("line {line}, column {col}: undeclared identifier `{name}`")]
    Undeclared {
        name: String,
        line: usize,
        col: usize,
    },
    #[error("line {line}: {msg}")]
    Schema { line: usize, msg: String },
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}
