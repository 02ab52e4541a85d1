//! Differential polynomial kernel: jets, function atoms, canonical sums and
//! the operators of the variational calculus.

pub mod atom;
pub mod calculus;
pub mod multi_index;
pub mod poly;
pub mod subst;

use num::{BigInt, BigRational};

pub type Q = BigRational;

pub fn q_int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_frac(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub use atom::{Atom, FuncAtom, FunctionDef, FunctionKind, Jet, PowerRule};
pub use calculus::{
    apply_prolonged_symmetry, derive, divergence, euler, evaluate, frechet, frechet_adjoint,
    higher_euler, partial, signed_total_derivative, slot_derivative, total_derivative,
    total_derivative_multi,
};
pub use multi_index::MultiIndex;
pub use poly::{DiffExpr, Monomial};
pub use subst::{
    apply_function, apply_function_checked, assign_coefficients, map_atoms, substitute,
    Substitution,
};
