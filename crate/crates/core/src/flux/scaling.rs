use num::{Signed, Zero};

use super::bilinear::bilinear_s;
use super::{Assumption, ConservationLaw, Method, Status};
use crate::error::FluxError;
use crate::expr::{
    divergence, q_int, subst::instantiate, Atom, DiffExpr, FunctionKind, Jet, MultiIndex, Q,
};
use crate::problem::PdeSystem;
use crate::solver::MultiplierSet;

/// Scaling `x^i -> e^(p_i eps) x^i`, `U^rho -> e^(q_rho eps) U^rho`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScalingSymmetry {
    pub p: Vec<Q>,
    pub q: Vec<Q>,
}

impl ScalingSymmetry {
    pub fn new(p: Vec<Q>, q: Vec<Q>) -> Self {
        Self { p, q }
    }

    /// Evolutionary characteristic `q^rho U^rho - p^i x^i U^rho_i`.
    pub fn characteristic(&self) -> Vec<DiffExpr> {
        (0..self.q.len())
            .map(|rho| {
                let mut eta = DiffExpr::jet(Jet::base(rho)).scale(&self.q[rho]);
                for (i, p) in self.p.iter().enumerate() {
                    let term =
                        &DiffExpr::indep(i) * &DiffExpr::jet(Jet::new(rho, MultiIndex::single(i)));
                    eta = eta - term.scale(p);
                }
                eta
            })
            .collect()
    }

    pub fn sum_p(&self) -> Q {
        self.p.iter().sum()
    }

    fn atom_weight(&self, atom: &Atom) -> Result<Q, FluxError> {
        match atom {
            Atom::Indep(i) => Ok(self.p[*i].clone()),
            Atom::Jet(j) => {
                let mut w = self.q[j.dep].clone();
                for (v, c) in j.index.iter() {
                    w -= &self.p[v] * q_int(c as i64);
                }
                Ok(w)
            }
            Atom::Func(f) => {
                let mut arg_weights = Vec::with_capacity(f.args.len());
                for a in &f.args {
                    arg_weights.push(weight_of(self, a)?);
                }
                if arg_weights
                    .iter()
                    .all(|w| w.as_ref().is_none_or(Zero::is_zero))
                {
                    return Ok(Q::zero());
                }
                if let Some(k) = f.def.root_degree() {
                    let w = arg_weights[0].clone().unwrap_or_else(Q::zero);
                    return Ok(w / q_int(k as i64));
                }
                if let FunctionKind::Antiderivative { integrand } = &f.def.kind {
                    if !f.def.involves_arbitrary() {
                        let inner = instantiate(integrand, f);
                        let wi = weight_of(self, &inner)?.unwrap_or_else(Q::zero);
                        return Ok(wi + arg_weights[0].clone().unwrap_or_else(Q::zero));
                    }
                }
                Err(FluxError::NonHomogeneous(format!(
                    "arbitrary function `{}` has arguments of nonzero weight",
                    f.def.name
                )))
            }
            Atom::Coeff(_) | Atom::Lambda | Atom::Slot(_) | Atom::SelfCall => Ok(Q::zero()),
        }
    }
}

/// Common weight of every term of `e`; `None` for the zero expression.
pub fn weight_of(sym: &ScalingSymmetry, e: &DiffExpr) -> Result<Option<Q>, FluxError> {
    let mut found: Option<(Q, String)> = None;
    for (m, _) in e.terms() {
        let mut w = Q::zero();
        for (a, k) in m.factors() {
            w += sym.atom_weight(a)? * q_int(*k as i64);
        }
        match &found {
            None => found = Some((w, format!("{m:?}"))),
            Some((w0, m0)) if *w0 != w => {
                return Err(FluxError::NonHomogeneous(format!(
                    "terms {m0} and {m:?} have different weights"
                )))
            }
            _ => {}
        }
    }
    Ok(found.map(|(w, _)| w))
}

/// Per-equation weights `r`, `s` and `chi = s + r + sum p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightReport {
    pub r: Vec<Q>,
    /// `None` where the multiplier component vanishes.
    pub s: Vec<Option<Q>>,
    pub chi: Vec<Option<Q>>,
}

impl WeightReport {
    /// The common `chi` over the nonzero multiplier components.
    pub fn chi_value(&self) -> Option<Q> {
        self.chi.iter().flatten().next().cloned()
    }

    pub fn is_critical(&self) -> bool {
        self.chi.iter().flatten().any(Zero::is_zero)
    }
}

pub fn scaling_weights(
    sys: &PdeSystem,
    multipliers: &MultiplierSet,
    sym: &ScalingSymmetry,
) -> Result<WeightReport, FluxError> {
    let mut r = Vec::new();
    let mut s = Vec::new();
    let mut chi = Vec::new();
    for (eq, lam) in sys.residuals().iter().zip(&multipliers.components) {
        let rw = weight_of(sym, eq)?.unwrap_or_else(Q::zero);
        let sw = weight_of(sym, lam)?;
        chi.push(sw.as_ref().map(|sw| sw + &rw + sym.sum_p()));
        r.push(rw);
        s.push(sw);
    }
    Ok(WeightReport { r, s, chi })
}

/// Fluxes `S^i[eta, Lambda; R]` from the scaling characteristic, oriented
/// by the sign of `chi`, and checked to be conserved on solutions.
pub fn flux_scaling(
    sys: &PdeSystem,
    multipliers: &MultiplierSet,
    sym: &ScalingSymmetry,
) -> Result<(ConservationLaw, WeightReport), FluxError> {
    let report = scaling_weights(sys, multipliers, sym)?;
    let chis: Vec<&Q> = report.chi.iter().flatten().collect();
    if let Some(w) = chis.windows(2).find(|w| w[0] != w[1]) {
        return Err(FluxError::NonHomogeneous(format!(
            "chi = {} and chi = {} differ",
            w[0], w[1]
        )));
    }
    let eta = sym.characteristic();
    let residuals = sys.residuals();
    let negative = report.chi_value().is_some_and(|c| c.is_negative());
    let mut fluxes = Vec::with_capacity(sys.n());
    for i in 0..sys.n() {
        let s = bilinear_s(&eta, &multipliers.components, &residuals, i, None)?;
        fluxes.push(if negative { -s } else { s });
    }
    check_on_solutions(sys, &fluxes)?;
    let mut assumptions = Vec::new();
    if report.is_critical() {
        assumptions.push(Assumption::Critical);
    }
    Ok((
        ConservationLaw {
            multipliers: Some(multipliers.clone()),
            fluxes,
            method: Method::Scaling,
            status: Status::OnSolutions,
            assumptions,
        },
        report,
    ))
}

fn check_on_solutions(sys: &PdeSystem, fluxes: &[DiffExpr]) -> Result<(), FluxError> {
    let reduced = sys.reduce_on_solutions(&divergence(fluxes))?;
    if reduced.is_zero() {
        Ok(())
    } else {
        Err(FluxError::VerificationFailed(format!("{reduced:?}")))
    }
}

/// Fluxes `S^i[eta, omega; R]` from a symmetry characteristic and an adjoint
/// symmetry; rejected unless conserved on solutions.
pub fn flux_symmetry_pair(
    sys: &PdeSystem,
    eta: &[DiffExpr],
    omega: &[DiffExpr],
) -> Result<ConservationLaw, FluxError> {
    let residuals = sys.residuals();
    let fluxes = (0..sys.n())
        .map(|i| bilinear_s(eta, omega, &residuals, i, None))
        .collect::<Result<Vec<_>, _>>()?;
    check_on_solutions(sys, &fluxes)?;
    Ok(ConservationLaw {
        multipliers: None,
        fluxes,
        method: Method::Pair,
        status: Status::OnSolutions,
        assumptions: Vec::new(),
    })
}
