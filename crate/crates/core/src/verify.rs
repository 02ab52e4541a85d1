//! Exact checks on conservation laws.

use crate::error::KernelError;
use crate::expr::{divergence, euler, DiffExpr};
use crate::flux::{Assumption, ConservationLaw};
use crate::problem::PdeSystem;
use crate::solver::characteristic_form;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Nonzero residual of a failed check.
    pub residual: Option<DiffExpr>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
    pub assumptions: Vec<Assumption>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn check(name: &'static str, residual: DiffExpr) -> Check {
    let passed = residual.is_zero();
    Check {
        name,
        passed,
        residual: (!passed).then_some(residual),
    }
}

/// `sum Lambda_sigma R^sigma - D_i Phi^i` vanishes identically.
pub fn verify_characteristic(sys: &PdeSystem, cl: &ConservationLaw) -> VerificationReport {
    let lam = cl
        .multipliers
        .as_ref()
        .map(|m| m.components.clone())
        .unwrap_or_else(|| vec![DiffExpr::zero(); sys.equations.len()]);
    let residual = &characteristic_form(sys, &lam) - &divergence(&cl.fluxes);
    VerificationReport {
        checks: vec![check("characteristic-identity", residual)],
        assumptions: cl.assumptions.clone(),
    }
}

/// `D_i Phi^i` reduces to zero modulo the system.
pub fn verify_on_solutions(
    sys: &PdeSystem,
    cl: &ConservationLaw,
) -> Result<VerificationReport, KernelError> {
    let reduced = sys.reduce_on_solutions(&divergence(&cl.fluxes))?;
    Ok(VerificationReport {
        checks: vec![check("on-solutions", reduced)],
        assumptions: cl.assumptions.clone(),
    })
}

/// True iff every Euler operator annihilates `f`, i.e. `f` is a total divergence.
pub fn euler_annihilation(f: &DiffExpr, m: usize) -> bool {
    (0..m).all(|j| euler(f, j).is_zero())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Triviality {
    /// Every flux vanishes on solutions.
    TrivialFirstKind,
    /// The divergence vanishes identically.
    IdenticallyDivergenceFree,
    Unknown,
}

impl Triviality {
    pub fn name(self) -> &'static str {
        match self {
            Triviality::TrivialFirstKind => "trivial-first-kind",
            Triviality::IdenticallyDivergenceFree => "identically-divergence-free",
            Triviality::Unknown => "unknown",
        }
    }
}

pub fn triviality_heuristic(
    sys: &PdeSystem,
    fluxes: &[DiffExpr],
) -> Result<Triviality, KernelError> {
    let mut all_vanish = true;
    for phi in fluxes {
        if !sys.reduce_on_solutions(phi)?.is_zero() {
            all_vanish = false;
            break;
        }
    }
    if all_vanish {
        return Ok(Triviality::TrivialFirstKind);
    }
    if divergence(fluxes).is_zero() {
        return Ok(Triviality::IdenticallyDivergenceFree);
    }
    Ok(Triviality::Unknown)
}
