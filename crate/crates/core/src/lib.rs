//! Conservation laws of PDE systems: multipliers by the direct method and
//! flux reconstruction by direct matching, two homotopy formulas and scaling
//! symmetries, with exact verification.

pub mod error;
pub mod expr;

pub use error::{FluxError, KernelError, ProblemError, SolveError};
pub use expr::{DiffExpr, MultiIndex, Q};
pub mod flux;
pub mod linalg;
pub mod parse;
pub mod problem;
pub mod solver;
pub mod verify;
