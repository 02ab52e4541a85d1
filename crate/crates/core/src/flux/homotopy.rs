use std::collections::BTreeSet;

use super::bilinear::bilinear_s;
use super::{Assumption, ConservationLaw, Method, Status};
use crate::error::{FluxError, KernelError};
use crate::expr::{
    divergence, higher_euler, q_int, substitute, total_derivative_multi, Atom, DiffExpr, Jet,
    Monomial, MultiIndex, Substitution,
};
use crate::problem::PdeSystem;
use crate::solver::{characteristic_form, MultiplierSet};

fn arbitrary_name(exprs: &[&DiffExpr]) -> Option<String> {
    exprs
        .iter()
        .flat_map(|e| e.func_atoms())
        .find(|f| f.def.involves_arbitrary())
        .map(|f| f.def.name.clone())
}

/// `sum_j sum_s (1 + s_i)/(1 + |s|) D_s(U^j E^{(s + e_i)}_{U^j}(f))`, before
/// the lambda substitution.
pub fn homotopy1_integrand(f: &DiffExpr, i: usize, m: usize) -> DiffExpr {
    let mut out = DiffExpr::zero();
    for j in 0..m {
        let mut indices: BTreeSet<MultiIndex> = BTreeSet::new();
        for jet in f.jets_of(j) {
            if jet.index.count(i) == 0 {
                continue;
            }
            let top = jet
                .index
                .checked_sub(&MultiIndex::single(i))
                .expect("count checked");
            indices.extend(top.sub_indices());
        }
        let u = DiffExpr::jet(Jet::base(j));
        for s in indices {
            let shifted = s.with_var(i);
            let e = higher_euler(f, j, &shifted);
            if e.is_empty() {
                continue;
            }
            let weight = crate::expr::q_frac(1 + s.count(i) as i64, 1 + s.order() as i64);
            out = out + total_derivative_multi(&(&u * &e), &s).scale(&weight);
        }
    }
    out
}

/// Term-by-term `int_0^1 e dlambda` for `e` a Laurent polynomial in lambda.
pub fn integrate_lambda(e: &DiffExpr) -> Result<DiffExpr, FluxError> {
    let mut out = DiffExpr::zero();
    for (m, c) in e.terms() {
        for (a, _) in m.factors() {
            if let Atom::Func(f) = a {
                if f.args.iter().any(|arg| arg.contains_atom(&Atom::Lambda)) {
                    return Err(FluxError::NonPolynomialLambda(format!("{m:?}")));
                }
            }
        }
        let k = m.exponent(&Atom::Lambda);
        if k < 0 {
            return Err(FluxError::DivergentIntegral(format!("{m:?}")));
        }
        let rest = m.without(&Atom::Lambda);
        out = out + DiffExpr::term(c / q_int(k as i64 + 1), rest);
    }
    Ok(out)
}

/// Fluxes by the first homotopy formula.
pub fn flux_homotopy1(f: &DiffExpr, n: usize, m: usize) -> Result<Vec<DiffExpr>, FluxError> {
    if let Some(name) = arbitrary_name(&[f]) {
        return Err(FluxError::ArbitraryFunctionPresent(name));
    }
    for (mono, _) in f.terms() {
        let has_jet = mono.factors().any(|(a, _)| a.as_jet().is_some())
            || mono
                .factors()
                .any(|(a, _)| matches!(a, Atom::Func(fa) if fa.args.iter().any(|x| !x.jets().is_empty())));
        if !has_jet {
            return Err(FluxError::NonvanishingAtZero(format!("{mono:?}")));
        }
    }
    let scaling = Substitution::scaling(m);
    let inv_lambda = Monomial::from_factors([(Atom::Lambda, -1)]);
    let mut fluxes = Vec::with_capacity(n);
    for i in 0..n {
        let integrand = homotopy1_integrand(f, i, m);
        let scaled = substitute(&integrand, &scaling)?.mul_monomial(&inv_lambda);
        fluxes.push(integrate_lambda(&scaled)?);
    }
    let residual = f - &divergence(&fluxes);
    if !residual.is_zero() {
        return Err(FluxError::VerificationFailed(format!("{residual:?}")));
    }
    Ok(fluxes)
}

/// Conservation law from the first homotopy formula applied to
/// `sum Lambda_sigma R^sigma`.
pub fn law_homotopy1(
    sys: &PdeSystem,
    multipliers: &MultiplierSet,
) -> Result<ConservationLaw, FluxError> {
    let f = characteristic_form(sys, &multipliers.components);
    let fluxes = flux_homotopy1(&f, sys.n(), sys.m())?;
    Ok(ConservationLaw {
        multipliers: Some(multipliers.clone()),
        fluxes,
        method: Method::Homotopy1,
        status: Status::CharacteristicIdentity,
        assumptions: Vec::new(),
    })
}

/// Fluxes at the base point: the first component integrates
/// `F = Lambda[base] R[base]` in the first independent variable, the others
/// vanish.
pub fn base_point_fluxes(
    sys: &PdeSystem,
    multipliers: &[DiffExpr],
    base: &[DiffExpr],
) -> Result<Vec<DiffExpr>, FluxError> {
    let n = sys.n();
    for b in base {
        if !b.jets().is_empty() || b.contains_atom(&Atom::Lambda) {
            return Err(FluxError::UnsupportedBasePoint(format!(
                "{b:?} must depend on the independent variables only"
            )));
        }
    }
    let sub = Substitution::new(base.iter().cloned().enumerate().collect(), n, sys.m())?;
    let f = substitute(&characteristic_form(sys, multipliers), &sub)?;
    let mut first = DiffExpr::zero();
    for (mono, c) in f.terms() {
        let mut power = 0;
        for (a, e) in mono.factors() {
            match a {
                Atom::Indep(0) => power = *e,
                Atom::Indep(_) if *e > 0 => {}
                _ => {
                    return Err(FluxError::UnsupportedBasePoint(format!(
                        "F = {f:?} is not polynomial in the independent variables"
                    )))
                }
            }
        }
        if power < 0 {
            return Err(FluxError::UnsupportedBasePoint(format!(
                "F = {f:?} is not polynomial in the independent variables"
            )));
        }
        let shift = Monomial::from_factors([(Atom::Indep(0), 1)]);
        first = first + DiffExpr::term(c / q_int(power as i64 + 1), mono.mul(&shift));
    }
    let mut out = vec![DiffExpr::zero(); n];
    if n > 0 {
        out[0] = first;
    }
    Ok(out)
}

/// Fluxes by the second homotopy formula along
/// `U(lambda) = lambda U + (1 - lambda) base`.
pub fn flux_homotopy2(
    sys: &PdeSystem,
    multipliers: &MultiplierSet,
    base: &[DiffExpr],
) -> Result<ConservationLaw, FluxError> {
    let lam = &multipliers.components;
    let residuals = sys.residuals();
    let mut all: Vec<&DiffExpr> = lam.iter().collect();
    all.extend(residuals.iter());
    if let Some(name) = arbitrary_name(&all) {
        return Err(FluxError::ArbitraryFunctionPresent(name));
    }
    let path = Substitution::homotopy_path(base);
    let v: Vec<DiffExpr> = base
        .iter()
        .enumerate()
        .map(|(j, b)| &DiffExpr::jet(Jet::base(j)) - b)
        .collect();
    let lam_path = lam
        .iter()
        .map(|l| substitute(l, &path))
        .collect::<Result<Vec<_>, _>>()?;
    let r_path = residuals
        .iter()
        .map(|r| substitute(r, &path))
        .collect::<Result<Vec<_>, _>>()?;
    let mut fluxes = Vec::with_capacity(sys.n());
    for i in 0..sys.n() {
        let s = bilinear_s(&v, &lam_path, &residuals, i, Some(&path))?;
        let s_tilde = bilinear_s(&v, &r_path, lam, i, Some(&path))?;
        fluxes.push(integrate_lambda(&(s + s_tilde))?);
    }
    let start = base_point_fluxes(sys, lam, base).map_err(|e| match e {
        FluxError::Kernel(KernelError::DivisionByZero) => FluxError::DivergentIntegral(
            "the multipliers or the system are singular at the base point".into(),
        ),
        e => e,
    })?;
    for (phi, s) in fluxes.iter_mut().zip(&start) {
        *phi = &*phi + s;
    }
    let residual = &characteristic_form(sys, lam) - &divergence(&fluxes);
    if !residual.is_zero() {
        return Err(FluxError::VerificationFailed(format!("{residual:?}")));
    }
    let mut assumptions = Vec::new();
    if base.iter().any(|b| !b.is_empty()) {
        assumptions.push(Assumption::BasePoint(base.to_vec()));
    }
    Ok(ConservationLaw {
        multipliers: Some(multipliers.clone()),
        fluxes,
        method: Method::Homotopy2,
        status: Status::CharacteristicIdentity,
        assumptions,
    })
}
