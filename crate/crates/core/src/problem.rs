//! PDE systems in solved form, leading-derivative bookkeeping and ansatz
//! generation.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{KernelError, ProblemError};
use crate::expr::{
    map_atoms, total_derivative_multi, Atom, DiffExpr, FunctionDef, Jet, Monomial, MultiIndex,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variables {
    pub independents: Vec<String>,
    pub dependents: Vec<String>,
}

impl Variables {
    pub fn new<S: AsRef<str>>(independents: &[S], dependents: &[S]) -> Self {
        Self {
            independents: independents
                .iter()
                .map(|s| s.as_ref().to_string())
                .collect(),
            dependents: dependents.iter().map(|s| s.as_ref().to_string()).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.independents.len()
    }

    pub fn m(&self) -> usize {
        self.dependents.len()
    }
}

/// One equation `leading = rhs` of a solved-form system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Equation {
    pub leading: Jet,
    pub rhs: DiffExpr,
}

impl Equation {
    pub fn new(leading: Jet, rhs: DiffExpr) -> Self {
        Self { leading, rhs }
    }

    /// `R = leading - rhs`.
    pub fn residual(&self) -> DiffExpr {
        &DiffExpr::jet(self.leading.clone()) - &self.rhs
    }
}

#[derive(Clone, Debug)]
pub struct PdeSystem {
    pub vars: Variables,
    pub functions: Vec<Arc<FunctionDef>>,
    pub equations: Vec<Equation>,
    /// Overrides the default sweep bound of [`PdeSystem::reduce_on_solutions`].
    pub max_sweeps: Option<usize>,
}

/// Outcome of [`PdeSystem::validate_solved_form`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    /// `(equation, offending jet)` pairs.
    pub violations: Vec<(usize, Jet)>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CkReport {
    pub holds: bool,
    pub notes: Vec<String>,
}

impl PdeSystem {
    /// Builds a system, checking that leading jets are distinct and that
    /// every equation only mentions declared variables.
    pub fn new(
        vars: Variables,
        functions: Vec<Arc<FunctionDef>>,
        equations: Vec<Equation>,
    ) -> Result<Self, ProblemError> {
        for (k, eq) in equations.iter().enumerate() {
            if equations[..k].iter().any(|e| e.leading == eq.leading) {
                return Err(ProblemError::DuplicateLeading(jet_label(
                    &vars,
                    &eq.leading,
                )));
            }
            check_declared(&vars, &eq.residual())?;
        }
        Ok(Self {
            vars,
            functions,
            equations,
            max_sweeps: None,
        })
    }

    pub fn n(&self) -> usize {
        self.vars.n()
    }

    pub fn m(&self) -> usize {
        self.vars.m()
    }

    pub fn residuals(&self) -> Vec<DiffExpr> {
        self.equations.iter().map(Equation::residual).collect()
    }

    /// Maximal jet order `k` of the system.
    pub fn order(&self) -> u32 {
        self.equations
            .iter()
            .map(|e| e.leading.order().max(e.rhs.jet_order()))
            .max()
            .unwrap_or(0)
    }

    /// The first equation whose leading derivative `jet` is, or is a
    /// differential consequence of.
    pub fn eliminating_equation(&self, jet: &Jet) -> Option<usize> {
        self.equations
            .iter()
            .position(|e| e.leading.dep == jet.dep && e.leading.index.le(&jet.index))
    }

    pub fn is_eliminable(&self, jet: &Jet) -> bool {
        self.eliminating_equation(jet).is_some()
    }

    /// Checks that no leading derivative or consequence appears on any
    /// right-hand side, and that no leading derivative is a consequence of
    /// another.
    pub fn validate_solved_form(&self) -> ValidationReport {
        let mut violations = Vec::new();
        for (k, eq) in self.equations.iter().enumerate() {
            for jet in eq.rhs.jets() {
                if self.is_eliminable(&jet) {
                    violations.push((k, jet));
                }
            }
            let shadowed = self.equations.iter().enumerate().any(|(l, other)| {
                l != k
                    && other.leading.dep == eq.leading.dep
                    && other.leading.index.le(&eq.leading.index)
            });
            if shadowed {
                violations.push((k, eq.leading.clone()));
            }
        }
        ValidationReport { violations }
    }

    pub fn require_solved_form(&self) -> Result<(), ProblemError> {
        match self.validate_solved_form().violations.first() {
            None => Ok(()),
            Some((k, jet)) => Err(ProblemError::NotSolvedForm {
                equation: k + 1,
                jet: jet_label(&self.vars, jet),
            }),
        }
    }

    /// Whether the system is in Cauchy-Kovalevskaya form with respect to
    /// independent variable `j`.
    pub fn check_ck_form(&self, j: usize) -> CkReport {
        let mut notes = Vec::new();
        if self.equations.len() != self.m() {
            notes.push(format!(
                "{} equations for {} dependent variables",
                self.equations.len(),
                self.m()
            ));
            return CkReport {
                holds: false,
                notes,
            };
        }
        let mut orders: BTreeMap<usize, u32> = BTreeMap::new();
        for eq in &self.equations {
            let s = eq.leading.index.count(j);
            if s == 0 || s != eq.leading.order() {
                notes.push(format!(
                    "{} is not a pure derivative in {}",
                    jet_label(&self.vars, &eq.leading),
                    self.vars.independents[j]
                ));
            }
            orders.insert(eq.leading.dep, s);
        }
        if orders.len() != self.m() {
            notes.push("some dependent variable has no leading derivative".into());
        }
        for eq in &self.equations {
            for jet in eq.rhs.jets() {
                let bound = orders.get(&jet.dep).copied().unwrap_or(0);
                if jet.index.count(j) >= bound {
                    notes.push(format!(
                        "right-hand side contains {} of order {} in {}",
                        jet_label(&self.vars, &jet),
                        jet.index.count(j),
                        self.vars.independents[j]
                    ));
                }
            }
        }
        CkReport {
            holds: notes.is_empty(),
            notes,
        }
    }

    fn sweep_bound(&self, e: &DiffExpr) -> usize {
        self.max_sweeps
            .unwrap_or_else(|| (10 * e.jet_order() as usize).max(10))
    }

    /// Normal form of `e` modulo the system: every leading derivative and
    /// consequence is replaced by the matching derivative of its right-hand
    /// side until none remain.
    pub fn reduce_on_solutions(&self, e: &DiffExpr) -> Result<DiffExpr, KernelError> {
        let bound = self.sweep_bound(e);
        let mut cache: BTreeMap<Jet, DiffExpr> = BTreeMap::new();
        let mut current = e.clone();
        let mut chain: Vec<String> = Vec::new();
        for _ in 0..bound {
            let targets: Vec<Jet> = current
                .jets()
                .into_iter()
                .filter(|j| self.is_eliminable(j))
                .collect();
            if targets.is_empty() {
                return Ok(current);
            }
            chain.extend(targets.iter().map(|j| jet_label(&self.vars, j)));
            let mut replace = |a: &Atom| {
                let jet = a.as_jet()?;
                let k = self.eliminating_equation(jet)?;
                Some(
                    cache
                        .entry(jet.clone())
                        .or_insert_with(|| {
                            let eq = &self.equations[k];
                            let rest = jet
                                .index
                                .checked_sub(&eq.leading.index)
                                .expect("eliminable");
                            total_derivative_multi(&eq.rhs, &rest)
                        })
                        .clone(),
                )
            };
            current = map_atoms(&current, &mut replace)?;
        }
        if current.jets().iter().any(|j| self.is_eliminable(j)) {
            let tail = chain.len().saturating_sub(8);
            return Err(KernelError::ReductionDiverged {
                sweeps: bound,
                chain: chain[tail..].join(" -> "),
            });
        }
        Ok(current)
    }

    pub fn function(&self, name: &str) -> Option<&Arc<FunctionDef>> {
        self.functions.iter().find(|f| f.name == name)
    }
}

fn check_declared(vars: &Variables, e: &DiffExpr) -> Result<(), KernelError> {
    for atom in e.atoms_deep() {
        match atom {
            Atom::Indep(i) if i >= vars.n() => {
                return Err(KernelError::UndeclaredVariable(format!(
                    "independent #{}",
                    i + 1
                )))
            }
            Atom::Jet(j) if j.dep >= vars.m() || j.index.iter().any(|(v, _)| v >= vars.n()) => {
                return Err(KernelError::UndeclaredVariable(format!("{j:?}")))
            }
            Atom::Coeff(_) | Atom::Lambda | Atom::Slot(_) | Atom::SelfCall => {
                return Err(KernelError::UndeclaredVariable(format!("{atom:?}")))
            }
            _ => {}
        }
    }
    Ok(())
}

/// Plain-text jet label such as `u_{tx}`.
pub fn jet_label(vars: &Variables, jet: &Jet) -> String {
    let name = vars
        .dependents
        .get(jet.dep)
        .cloned()
        .unwrap_or_else(|| format!("u{}", jet.dep + 1));
    if jet.index.is_zero() {
        return name;
    }
    let sub: String = jet
        .index
        .sorted_vars()
        .iter()
        .map(|&v| {
            vars.independents
                .get(v)
                .cloned()
                .unwrap_or_else(|| format!("x{}", v + 1))
        })
        .collect();
    format!("{name}_{{{sub}}}")
}

/// Requested dependence and degree caps of an ansatz.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnsatzSpec {
    pub atoms: Vec<Atom>,
    pub total_degree: Option<u32>,
    pub atom_degree: Option<u32>,
}

impl AnsatzSpec {
    pub const DEFAULT_DEGREE: u32 = 3;

    pub fn new(atoms: Vec<Atom>, total_degree: Option<u32>, atom_degree: Option<u32>) -> Self {
        let total_degree = match (total_degree, atom_degree) {
            (None, None) => Some(Self::DEFAULT_DEGREE),
            (t, _) => t,
        };
        Self {
            atoms,
            total_degree,
            atom_degree,
        }
    }

    /// Dependence on all independent variables and all jets up to order `l`.
    pub fn up_to_order(sys: &PdeSystem, l: u32, total_degree: Option<u32>) -> Self {
        let mut atoms: Vec<Atom> = (0..sys.n()).map(Atom::Indep).collect();
        for dep in 0..sys.m() {
            for idx in MultiIndex::all_up_to(sys.n(), l) {
                atoms.push(Atom::jet(dep, idx));
            }
        }
        Self::new(atoms, total_degree, None)
    }
}

/// Multiplier ansatz: `Lambda_sigma = sum c_k m_k` over the columns assigned
/// to equation `sigma`.
#[derive(Clone, Debug)]
pub struct MultiplierAnsatz {
    /// `(equation, monomial)` per unknown coefficient, in column order.
    pub columns: Vec<(usize, Monomial)>,
    pub n_equations: usize,
    pub warnings: Vec<String>,
}

impl MultiplierAnsatz {
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Multiplier components with unknown coefficient atoms.
    pub fn symbolic(&self) -> Vec<DiffExpr> {
        let mut out = vec![DiffExpr::zero(); self.n_equations];
        for (k, (sigma, m)) in self.columns.iter().enumerate() {
            out[*sigma] = &out[*sigma]
                + &DiffExpr::term(
                    crate::expr::q_int(1),
                    m.mul(&Monomial::atom(Atom::Coeff(k))),
                );
        }
        out
    }

    /// Multiplier components for a coefficient vector.
    pub fn evaluate(&self, values: &[crate::Q]) -> Vec<DiffExpr> {
        let mut out = vec![DiffExpr::zero(); self.n_equations];
        for ((sigma, m), c) in self.columns.iter().zip(values) {
            out[*sigma] = &out[*sigma] + &DiffExpr::term(c.clone(), m.clone());
        }
        out
    }
}

/// Enumerates the ansatz monomials, the same basis for each equation.
/// Columns run from the highest total degree down so that nullspace bases
/// come out with the simplest monomials as free parameters.
pub fn generate_ansatz(
    sys: &PdeSystem,
    spec: &AnsatzSpec,
) -> Result<MultiplierAnsatz, ProblemError> {
    let mut warnings = Vec::new();
    let mut atoms: Vec<Atom> = Vec::new();
    for a in &spec.atoms {
        if let Atom::Jet(j) = a {
            if sys.is_eliminable(j) {
                warnings.push(format!(
                    "{} is a leading derivative or a consequence of one; removed from the ansatz",
                    jet_label(&sys.vars, j)
                ));
                continue;
            }
        }
        if !atoms.contains(a) {
            atoms.push(a.clone());
        }
    }
    let monomials = enumerate_monomials(&atoms, spec.total_degree, spec.atom_degree);
    if monomials.is_empty() {
        return Err(ProblemError::EmptyAnsatz);
    }
    let n_equations = sys.equations.len();
    let columns = (0..n_equations)
        .flat_map(|sigma| monomials.iter().map(move |m| (sigma, m.clone())))
        .collect();
    Ok(MultiplierAnsatz {
        columns,
        n_equations,
        warnings,
    })
}

/// All monomials over `atoms` within the caps, highest total degree first.
pub fn enumerate_monomials(
    atoms: &[Atom],
    total: Option<u32>,
    per_atom: Option<u32>,
) -> Vec<Monomial> {
    fn rec(
        atoms: &[Atom],
        k: usize,
        budget: Option<u32>,
        per_atom: Option<u32>,
        current: &mut Vec<(Atom, i32)>,
        out: &mut Vec<Monomial>,
    ) {
        if k == atoms.len() {
            out.push(Monomial::from_factors(current.iter().cloned()));
            return;
        }
        let cap = match (budget, per_atom) {
            (Some(b), Some(p)) => b.min(p),
            (Some(b), None) => b,
            (None, Some(p)) => p,
            (None, None) => unreachable!("at least one cap is set"),
        };
        for e in 0..=cap {
            if e > 0 {
                current.push((atoms[k].clone(), e as i32));
            }
            rec(atoms, k + 1, budget.map(|b| b - e), per_atom, current, out);
            if e > 0 {
                current.pop();
            }
        }
    }
    let total = if total.is_none() && per_atom.is_none() {
        Some(AnsatzSpec::DEFAULT_DEGREE)
    } else {
        total
    };
    let mut out = Vec::new();
    rec(atoms, 0, total, per_atom, &mut Vec::new(), &mut out);
    out.sort_by(|a, b| b.degree().cmp(&a.degree()).then_with(|| a.cmp(b)));
    out
}
