use std::collections::BTreeSet;

use rayon::prelude::*;

use super::{Assumption, ConservationLaw, Method, Status};
use crate::error::FluxError;
use crate::expr::{
    apply_function, divergence, q_int, subst::instantiate, total_derivative, Atom, DiffExpr,
    FunctionKind, Jet, Monomial, MultiIndex, Q,
};
use crate::linalg::solve_affine;
use crate::problem::{enumerate_monomials, PdeSystem};
use crate::solver::{characteristic_form, split_columns, MultiplierSet};

/// Overrides for the flux ansatz of the direct method.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FluxAnsatzSpec {
    pub atoms: Option<Vec<Atom>>,
    pub degree: Option<u32>,
    pub order: Option<u32>,
}

/// Scalar grading preserved by every total derivative up to a shift:
/// `D_i` adds `shift[i]`.
struct Grading {
    indep: Vec<Q>,
    jet: fn(&Jet, usize) -> Q,
    var: usize,
    direction: bool,
    arbitrary: Q,
}

impl Grading {
    fn direction(n: usize, var: usize) -> Self {
        let mut indep = vec![q_int(0); n];
        indep[var] = q_int(-1);
        Self {
            indep,
            jet: |j, v| q_int(j.index.count(v) as i64),
            var,
            direction: true,
            arbitrary: q_int(0),
        }
    }

    fn jets(n: usize) -> Self {
        Self {
            indep: vec![q_int(0); n],
            jet: |_, _| q_int(1),
            var: 0,
            direction: false,
            arbitrary: q_int(0),
        }
    }

    fn functions(n: usize) -> Self {
        Self {
            indep: vec![q_int(0); n],
            jet: |_, _| q_int(0),
            var: 0,
            direction: false,
            arbitrary: q_int(1),
        }
    }

    fn atom(&self, a: &Atom) -> Option<Q> {
        match a {
            Atom::Indep(i) => Some(self.indep[*i].clone()),
            Atom::Jet(j) => Some((self.jet)(j, self.var)),
            Atom::Func(f) => {
                let args: Vec<Q> = f.args.iter().map(|x| self.expr(x)).collect::<Option<_>>()?;
                match &f.def.kind {
                    FunctionKind::Arbitrary => {
                        let mut g = self.arbitrary.clone();
                        for (d, ga) in f.deriv.iter().zip(&args) {
                            g -= ga * q_int(*d as i64);
                        }
                        Some(g)
                    }
                    FunctionKind::Antiderivative { integrand } => {
                        Some(self.expr(&instantiate(integrand, f))? + &args[0])
                    }
                    FunctionKind::Defined { .. } => match f.def.root_degree() {
                        Some(k) => Some(&args[0] / q_int(k as i64)),
                        None if args.iter().all(num::Zero::is_zero) => Some(q_int(0)),
                        None => None,
                    },
                }
            }
            _ => Some(q_int(0)),
        }
    }

    fn monomial(&self, m: &Monomial) -> Option<Q> {
        let mut g = q_int(0);
        for (a, e) in m.factors() {
            g += self.atom(a)? * q_int(*e as i64);
        }
        Some(g)
    }

    /// Grade of a homogeneous expression.
    fn expr(&self, e: &DiffExpr) -> Option<Q> {
        let mut out: Option<Q> = None;
        for (m, _) in e.terms() {
            let g = self.monomial(m)?;
            match &out {
                None => out = Some(g),
                Some(h) if *h != g => return None,
                _ => {}
            }
        }
        Some(out.unwrap_or_else(|| q_int(0)))
    }
}

fn flux_atoms(sys: &PdeSystem, f: &DiffExpr, order: u32) -> Vec<Atom> {
    let mut atoms: Vec<Atom> = (0..sys.n()).map(Atom::Indep).collect();
    for dep in 0..sys.m() {
        for idx in MultiIndex::all_up_to(sys.n(), order) {
            atoms.push(Atom::jet(dep, idx));
        }
    }
    let mut funcs: BTreeSet<Atom> = BTreeSet::new();
    let mut unary_args: BTreeSet<DiffExpr> = BTreeSet::new();
    for fa in f.func_atoms() {
        if fa.args.len() == 1 {
            unary_args.insert(fa.args[0].clone());
        }
        if fa.def.is_arbitrary() {
            let lower = MultiIndex::from_counts(fa.deriv.iter().enumerate().map(|(k, d)| (k, *d)));
            for s in lower.sub_indices() {
                let deriv = (0..fa.args.len()).map(|k| s.count(k)).collect();
                let mut g = fa.clone();
                g.deriv = deriv;
                funcs.insert(Atom::Func(g));
            }
        } else {
            funcs.insert(Atom::Func(fa));
        }
    }
    for def in &sys.functions {
        if matches!(def.kind, FunctionKind::Antiderivative { .. }) {
            for arg in &unary_args {
                let applied = apply_function(def, vec![arg.clone()], vec![0]);
                if let Some((m, _)) = applied.as_single_term() {
                    if let Some((a, 1)) = m.factors().next() {
                        funcs.insert(a.clone());
                    }
                }
            }
        }
    }
    atoms.extend(funcs);
    atoms
}

/// Fluxes by matching `sum Lambda R = D_i Phi^i` over a polynomial flux
/// ansatz; free coefficients of the solution are set to zero.
pub fn flux_direct(
    sys: &PdeSystem,
    multipliers: &MultiplierSet,
    spec: &FluxAnsatzSpec,
) -> Result<ConservationLaw, FluxError> {
    let n = sys.n();
    let f = characteristic_form(sys, &multipliers.components);
    let l = multipliers
        .components
        .iter()
        .map(DiffExpr::jet_order)
        .max()
        .unwrap_or(0);
    let order = spec.order.unwrap_or(l.max(sys.order()));
    let atoms = spec
        .atoms
        .clone()
        .unwrap_or_else(|| flux_atoms(sys, &f, order));
    let degree = spec.degree.unwrap_or_else(|| {
        f.terms()
            .map(|(m, _)| m.degree().max(0) as u32)
            .max()
            .unwrap_or(0)
            + 1
    });

    let mut gradings: Vec<Grading> = (0..n).map(|v| Grading::direction(n, v)).collect();
    gradings.push(Grading::jets(n));
    gradings.push(Grading::functions(n));
    let probe: Vec<Monomial> = atoms.iter().map(|a| Monomial::atom(a.clone())).collect();
    gradings.retain(|g| {
        probe.iter().all(|m| g.monomial(m).is_some())
            && f.terms().all(|(m, _)| g.monomial(m).is_some())
    });
    let key = |m: &Monomial| -> Vec<Q> {
        gradings
            .iter()
            .map(|g| g.monomial(m).expect("checked"))
            .collect()
    };
    let targets: BTreeSet<Vec<Q>> = f.terms().map(|(m, _)| key(m)).collect();
    let shift = |i: usize| -> Vec<Q> {
        gradings
            .iter()
            .map(|g| {
                if g.direction && g.var == i {
                    q_int(1)
                } else {
                    q_int(0)
                }
            })
            .collect()
    };

    let monomials = enumerate_monomials(&atoms, Some(degree), None);
    let mut columns: Vec<(usize, Monomial)> = Vec::new();
    for i in 0..n {
        let s = shift(i);
        let wanted: BTreeSet<Vec<Q>> = targets
            .iter()
            .map(|t| t.iter().zip(&s).map(|(a, b)| a - b).collect())
            .collect();
        for m in &monomials {
            if wanted.contains(&key(m)) {
                columns.push((i, m.clone()));
            }
        }
    }
    let eliminable = |m: &Monomial| {
        m.factors()
            .any(|(a, _)| a.as_jet().is_some_and(|j| sys.is_eliminable(j)))
    };
    columns.sort_by(|(i, a), (j, b)| {
        eliminable(a)
            .cmp(&eliminable(b))
            .then(a.degree().cmp(&b.degree()))
            .then(a.cmp(b))
            .then(i.cmp(j))
    });

    let derived: Vec<Vec<DiffExpr>> = columns
        .par_iter()
        .map(|(i, m)| vec![total_derivative(&DiffExpr::term(q_int(1), m.clone()), *i)])
        .collect();
    let constant = vec![-f.clone()];
    let split = split_columns(&derived, Some(&constant));
    let Some(solution) = solve_affine(&split.system) else {
        return Err(FluxError::NoSolutionInAnsatz {
            residual: format!("{f:?}"),
        });
    };
    let mut fluxes = vec![DiffExpr::zero(); n];
    for ((i, m), c) in columns.iter().zip(&solution) {
        fluxes[*i] = &fluxes[*i] + &DiffExpr::term(c.clone(), m.clone());
    }
    let residual = &f - &divergence(&fluxes);
    if !residual.is_zero() {
        return Err(FluxError::VerificationFailed(format!("{residual:?}")));
    }
    let mut assumptions: Vec<Assumption> = split
        .assumptions
        .iter()
        .cloned()
        .map(Assumption::NonzeroDenominator)
        .collect();
    if !split.independent_functions.is_empty() {
        assumptions.push(Assumption::IndependentFunctions);
    }
    Ok(ConservationLaw {
        multipliers: Some(multipliers.clone()),
        fluxes,
        method: Method::Direct,
        status: Status::CharacteristicIdentity,
        assumptions,
    })
}
