//! Determining equations of the direct method and their exact solution
//! within a finite ansatz.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::error::SolveError;
use crate::expr::{euler, Atom, DiffExpr, FuncAtom, Monomial, Q};
use crate::linalg::{Echelon, LinearSystem};
use crate::problem::{MultiplierAnsatz, PdeSystem};

/// One multiplier tuple `(Lambda_1, ..., Lambda_N)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiplierSet {
    pub components: Vec<DiffExpr>,
    /// Nullspace vector over the ansatz columns, when produced by the solver.
    pub vector: Option<Vec<Q>>,
}

impl MultiplierSet {
    pub fn new(components: Vec<DiffExpr>) -> Self {
        Self {
            components,
            vector: None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(DiffExpr::is_zero)
    }

    pub fn scale(&self, c: &Q) -> Self {
        Self {
            components: self.components.iter().map(|e| e.scale(c)).collect(),
            vector: self
                .vector
                .as_ref()
                .map(|v| v.iter().map(|x| x * c).collect()),
        }
    }
}

/// `sum_sigma Lambda_sigma R^sigma`.
pub fn characteristic_form(sys: &PdeSystem, multipliers: &[DiffExpr]) -> DiffExpr {
    sys.residuals()
        .iter()
        .zip(multipliers)
        .map(|(r, l)| l * r)
        .sum()
}

/// Splitting of a family of expressions into linear rows over the monomials
/// in non-coefficient atoms.
#[derive(Clone, Debug, Default)]
pub struct Split {
    pub system: LinearSystem,
    /// Cleared denominators, each assumed nonvanishing.
    pub assumptions: Vec<Monomial>,
    /// Function atoms treated as algebraically independent of the jets.
    pub independent_functions: BTreeSet<FuncAtom>,
}

/// Splits `sum_k c_k columns[k][j] (+ constant[j]) = 0` for every `j` into
/// rows; the constant part, if any, lands in column `columns.len()`.
pub fn split_columns(columns: &[Vec<DiffExpr>], constant: Option<&[DiffExpr]>) -> Split {
    let ncols = columns.len();
    let n_eq = columns
        .first()
        .map(Vec::len)
        .or(constant.map(<[DiffExpr]>::len))
        .unwrap_or(0);
    let mut split = Split {
        system: LinearSystem::new(ncols),
        ..Default::default()
    };
    for j in 0..n_eq {
        let mut exprs: Vec<(usize, &DiffExpr)> = columns
            .iter()
            .enumerate()
            .map(|(k, c)| (k, &c[j]))
            .collect();
        if let Some(b) = constant {
            exprs.push((ncols, &b[j]));
        }
        let denominator = exprs
            .iter()
            .fold(Monomial::one(), |acc, (_, e)| acc.lcm(&e.denominator()));
        if !denominator.is_one() {
            split.assumptions.push(denominator.clone());
        }
        let mut rows: BTreeMap<Monomial, Vec<(usize, Q)>> = BTreeMap::new();
        for (k, e) in exprs {
            for f in e.func_atoms() {
                split.independent_functions.insert(f);
            }
            let cleared = if denominator.is_one() {
                e.clone()
            } else {
                e.mul_monomial(&denominator)
            };
            for (m, c) in cleared.terms() {
                rows.entry(m.clone()).or_default().push((k, c.clone()));
            }
        }
        for (m, row) in rows {
            split.system.push(row, format!("{j}:{m:?}"));
        }
    }
    split
}

/// `E_{U^j}(Lambda_sigma R^sigma)` for each ansatz column separately; the
/// determining equations are the `c`-weighted sums of these.
pub fn determining_columns(sys: &PdeSystem, ansatz: &MultiplierAnsatz) -> Vec<Vec<DiffExpr>> {
    let residuals = sys.residuals();
    ansatz
        .columns
        .par_iter()
        .map(|(sigma, m)| {
            let f = DiffExpr::term(crate::expr::q_int(1), m.clone());
            let f = &f * &residuals[*sigma];
            (0..sys.m()).map(|j| euler(&f, j)).collect()
        })
        .collect()
}

/// Determining expressions with the unknown coefficients as atoms.
pub fn determining_equations(sys: &PdeSystem, ansatz: &MultiplierAnsatz) -> Vec<DiffExpr> {
    let f = characteristic_form(sys, &ansatz.symbolic());
    (0..sys.m()).map(|j| euler(&f, j)).collect()
}

/// Splits determining expressions that are linear in the coefficient atoms.
pub fn split_linear_system(eqs: &[DiffExpr], n_unknowns: usize) -> Result<Split, SolveError> {
    let mut columns = vec![vec![DiffExpr::zero(); eqs.len()]; n_unknowns];
    let mut constant = vec![DiffExpr::zero(); eqs.len()];
    for (j, e) in eqs.iter().enumerate() {
        for (m, c) in e.terms() {
            let coeffs: Vec<(usize, i32)> = m
                .factors()
                .filter_map(|(a, p)| match a {
                    Atom::Coeff(k) => Some((*k, *p)),
                    _ => None,
                })
                .collect();
            let term = DiffExpr::term(c.clone(), m.without_coefficients());
            match coeffs.as_slice() {
                [] => constant[j] = &constant[j] + &term,
                [(k, 1)] if *k < n_unknowns => columns[*k][j] = &columns[*k][j] + &term,
                _ => return Err(SolveError::NonlinearInUnknowns),
            }
        }
    }
    let has_constant = constant.iter().any(|c| !c.is_empty());
    Ok(split_columns(
        &columns,
        has_constant.then_some(constant.as_slice()),
    ))
}

#[derive(Clone, Debug)]
pub struct MultiplierSolution {
    pub multipliers: Vec<MultiplierSet>,
    pub rank: usize,
    pub rows: usize,
    pub split: Split,
    pub warnings: Vec<String>,
}

/// Basis of the multiplier sets inside the ansatz, each re-verified.
pub fn solve_multipliers(
    sys: &PdeSystem,
    ansatz: &MultiplierAnsatz,
) -> Result<MultiplierSolution, SolveError> {
    let columns = determining_columns(sys, ansatz);
    let split = split_columns(&columns, None);
    let echelon = Echelon::compute(split.system.ncols, &split.system.rows);
    let mut multipliers = Vec::new();
    for v in echelon.nullspace() {
        let components = ansatz.evaluate(&v);
        let f = characteristic_form(sys, &components);
        for j in 0..sys.m() {
            let r = euler(&f, j);
            if !r.is_zero() {
                return Err(SolveError::VerificationFailed(format!("{r:?}")));
            }
        }
        multipliers.push(MultiplierSet {
            components,
            vector: Some(v),
        });
    }
    Ok(MultiplierSolution {
        multipliers,
        rank: echelon.rank(),
        rows: split.system.nrows(),
        split,
        warnings: ansatz.warnings.clone(),
    })
}
