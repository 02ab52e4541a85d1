use std::collections::BTreeMap;

use num::Zero;

use super::atom::{Atom, FuncAtom, FunctionKind, Jet};
use super::multi_index::MultiIndex;
use super::poly::{DiffExpr, Monomial};
use super::subst::instantiate;
use super::{q_int, Q};

/// Derivative of the function application `f` with respect to its slot `k`.
pub fn slot_derivative(f: &FuncAtom, k: usize) -> DiffExpr {
    match &f.def.kind {
        FunctionKind::Arbitrary => {
            let mut deriv = f.deriv.clone();
            deriv[k] += 1;
            DiffExpr::atom(Atom::Func(FuncAtom {
                def: f.def.clone(),
                args: f.args.clone(),
                deriv,
            }))
        }
        FunctionKind::Antiderivative { integrand } => instantiate(integrand, f),
        FunctionKind::Defined { derivatives, .. } => instantiate(&derivatives[k], f),
    }
}

/// Applies the derivation determined by its values on non-function atoms;
/// function atoms follow the chain rule.
pub fn derive<F>(e: &DiffExpr, on_atom: &mut F) -> DiffExpr
where
    F: FnMut(&Atom) -> DiffExpr,
{
    let mut memo = BTreeMap::new();
    derive_memo(e, on_atom, &mut memo)
}

fn derive_memo<F>(e: &DiffExpr, on_atom: &mut F, memo: &mut BTreeMap<Atom, DiffExpr>) -> DiffExpr
where
    F: FnMut(&Atom) -> DiffExpr,
{
    let mut out = DiffExpr::zero();
    for (mono, c) in e.terms() {
        for (atom, exp) in mono.factors() {
            let d = match memo.get(atom) {
                Some(d) => d.clone(),
                None => {
                    let d = match atom {
                        Atom::Func(f) => {
                            let mut acc = DiffExpr::zero();
                            for (k, arg) in f.args.iter().enumerate() {
                                let da = derive_memo(arg, on_atom, memo);
                                if !da.is_empty() {
                                    acc = acc + &slot_derivative(f, k) * &da;
                                }
                            }
                            acc
                        }
                        _ => on_atom(atom),
                    };
                    memo.insert(atom.clone(), d.clone());
                    d
                }
            };
            if d.is_empty() {
                continue;
            }
            let rest = mono.mul(&Monomial::atom(atom.clone()).pow(-1));
            out = out + d.mul_monomial(&rest).scale(&(c * q_int(*exp as i64)));
        }
    }
    out
}

/// Partial derivative with respect to a single coordinate.
pub fn partial(e: &DiffExpr, wrt: &Atom) -> DiffExpr {
    derive(e, &mut |a: &Atom| {
        if a == wrt {
            DiffExpr::one()
        } else {
            DiffExpr::zero()
        }
    })
}

/// Total derivative `D_i`.
pub fn total_derivative(e: &DiffExpr, i: usize) -> DiffExpr {
    derive(e, &mut |a: &Atom| match a {
        Atom::Indep(j) if *j == i => DiffExpr::one(),
        Atom::Jet(jet) => DiffExpr::jet(Jet::new(jet.dep, jet.index.with_var(i))),
        _ => DiffExpr::zero(),
    })
}

/// `D_J e`.
pub fn total_derivative_multi(e: &DiffExpr, index: &MultiIndex) -> DiffExpr {
    let mut out = e.clone();
    for v in index.sorted_vars() {
        if out.is_empty() {
            break;
        }
        out = total_derivative(&out, v);
    }
    out
}

/// `(-D)_J e`.
pub fn signed_total_derivative(e: &DiffExpr, index: &MultiIndex) -> DiffExpr {
    let d = total_derivative_multi(e, index);
    if index.order() % 2 == 1 {
        -d
    } else {
        d
    }
}

/// Euler operator `E_{U^dep}`.
pub fn euler(e: &DiffExpr, dep: usize) -> DiffExpr {
    e.jets_of(dep)
        .into_iter()
        .map(|j| {
            let p = partial(e, &Atom::Jet(j.clone()));
            signed_total_derivative(&p, &j.index)
        })
        .sum()
}

/// Higher Euler operator `E^{(s)}_{U^dep} = sum_{K >= s} C(K, s) (-D)_{K-s} d/dU_K`.
pub fn higher_euler(e: &DiffExpr, dep: usize, s: &MultiIndex) -> DiffExpr {
    let mut out = DiffExpr::zero();
    for j in e.jets_of(dep) {
        let Some(rest) = j.index.checked_sub(s) else {
            continue;
        };
        let p = partial(e, &Atom::Jet(j.clone()));
        let coefficient = q_int(j.index.binomial(s) as i64);
        out = out + signed_total_derivative(&p, &rest).scale(&coefficient);
    }
    out
}

/// Prolonged evolutionary vector field with characteristic `q` applied to `e`:
/// `sum_{rho, J} D_J(q^rho) dE/dU^rho_J`.
pub fn apply_prolonged_symmetry(e: &DiffExpr, q: &[DiffExpr]) -> DiffExpr {
    let mut cache: BTreeMap<Jet, DiffExpr> = BTreeMap::new();
    derive(e, &mut |a: &Atom| match a {
        Atom::Jet(j) => {
            let Some(qd) = q.get(j.dep) else {
                return DiffExpr::zero();
            };
            cache
                .entry(j.clone())
                .or_insert_with(|| total_derivative_multi(qd, &j.index))
                .clone()
        }
        _ => DiffExpr::zero(),
    })
}

/// Fréchet derivative `L_F V = sum_J dF/dU^rho_J D_J V^rho`.
pub fn frechet(f: &DiffExpr, v: &[DiffExpr]) -> DiffExpr {
    apply_prolonged_symmetry(f, v)
}

/// Formal adjoint of the Fréchet derivative, component `rho`:
/// `sum_{sigma, J} (-D)_J (dF^sigma/dU^rho_J W_sigma)`.
pub fn frechet_adjoint(f: &[DiffExpr], w: &[DiffExpr], rho: usize) -> DiffExpr {
    let mut out = DiffExpr::zero();
    for (fs, ws) in f.iter().zip(w) {
        for j in fs.jets_of(rho) {
            let p = partial(fs, &Atom::Jet(j.clone()));
            out = out + signed_total_derivative(&(&p * ws), &j.index);
        }
    }
    out
}

/// Total divergence `sum_i D_i phi^i`.
pub fn divergence(phi: &[DiffExpr]) -> DiffExpr {
    phi.iter()
        .enumerate()
        .map(|(i, p)| total_derivative(p, i))
        .sum()
}

/// Evaluates `e` with every atom assigned by `value`; `None` when an atom has
/// no value or a zero lands in a denominator.
pub fn evaluate<F>(e: &DiffExpr, value: &mut F) -> Option<Q>
where
    F: FnMut(&Atom) -> Option<Q>,
{
    let mut acc = Q::zero();
    for (mono, c) in e.terms() {
        let mut t = c.clone();
        for (atom, exp) in mono.factors() {
            let v = value(atom)?;
            if *exp < 0 && v.is_zero() {
                return None;
            }
            t *= num::pow::Pow::pow(&v, *exp);
        }
        acc += t;
    }
    Some(acc)
}
