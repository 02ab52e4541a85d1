use std::collections::BTreeMap;
use std::sync::Arc;

use num::{One, Zero};

use super::atom::{Atom, FuncAtom, FunctionDef, Jet};
use super::calculus::total_derivative_multi;
use super::poly::{DiffExpr, Monomial};
use super::Q;
use crate::error::KernelError;

/// Rebuilds `e` with atoms replaced where `f` returns a replacement.
/// Function arguments are rewritten recursively.
pub fn map_atoms<F>(e: &DiffExpr, f: &mut F) -> Result<DiffExpr, KernelError>
where
    F: FnMut(&Atom) -> Option<DiffExpr>,
{
    let mut cache: BTreeMap<Atom, Option<DiffExpr>> = BTreeMap::new();
    map_atoms_cached(e, f, &mut cache)
}

fn map_atoms_cached<F>(
    e: &DiffExpr,
    f: &mut F,
    cache: &mut BTreeMap<Atom, Option<DiffExpr>>,
) -> Result<DiffExpr, KernelError>
where
    F: FnMut(&Atom) -> Option<DiffExpr>,
{
    let mut out = DiffExpr::zero();
    for (mono, c) in e.terms() {
        let mut kept: Vec<(Atom, i32)> = Vec::new();
        let mut replaced: Vec<(DiffExpr, i32)> = Vec::new();
        for (atom, exp) in mono.factors() {
            let rep = match cache.get(atom) {
                Some(r) => r.clone(),
                None => {
                    let r = match f(atom) {
                        Some(r) => Some(r),
                        None => match atom {
                            Atom::Func(fa) => {
                                let mut changed = false;
                                let mut args = Vec::with_capacity(fa.args.len());
                                for a in &fa.args {
                                    let na = map_atoms_cached(a, f, cache)?;
                                    changed |= &na != a;
                                    args.push(na);
                                }
                                changed.then(|| apply_function(&fa.def, args, fa.deriv.clone()))
                            }
                            _ => None,
                        },
                    };
                    cache.insert(atom.clone(), r.clone());
                    r
                }
            };
            match rep {
                Some(r) => replaced.push((r, *exp)),
                None => kept.push((atom.clone(), *exp)),
            }
        }
        let mut term = DiffExpr::term(c.clone(), Monomial::from_factors(kept));
        for (r, exp) in replaced {
            if term.is_empty() {
                break;
            }
            term = &term * &r.pow(exp)?;
        }
        out = out + term;
    }
    Ok(out)
}

/// Instantiates a rule template for the application `f`: slots become the
/// arguments and `SelfCall` becomes `f` itself with no derivative marks.
pub(crate) fn instantiate(template: &DiffExpr, f: &FuncAtom) -> DiffExpr {
    let mut replace = |a: &Atom| match a {
        Atom::Slot(k) => Some(f.args[*k].clone()),
        Atom::SelfCall => Some(DiffExpr::atom(Atom::Func(FuncAtom {
            def: f.def.clone(),
            args: f.args.clone(),
            deriv: vec![0; f.args.len()],
        }))),
        _ => None,
    };
    map_atoms(template, &mut replace)
        .expect("validated templates never place arguments in denominators")
}

/// Applies `def` to `args`. For root functions a common factor `lambda^(k*a)`
/// of the argument is pulled out as `lambda^a`; the homotopy parameter ranges
/// over `[0, 1]` so the extraction is exact.
pub fn apply_function(
    def: &Arc<FunctionDef>,
    mut args: Vec<DiffExpr>,
    deriv: Vec<u32>,
) -> DiffExpr {
    let untouched = deriv.iter().all(|&d| d == 0);
    let mut prefactor = DiffExpr::one();
    if let (Some(k), true) = (def.root_degree(), untouched) {
        let min_lambda = args[0]
            .terms()
            .map(|(m, _)| m.exponent(&Atom::Lambda))
            .min()
            .unwrap_or(0);
        let a = min_lambda.div_euclid(k as i32);
        if a != 0 && !args[0].is_empty() {
            let shift = Monomial::from_factors([(Atom::Lambda, -(k as i32) * a)]);
            args[0] = args[0].mul_monomial(&shift);
            prefactor = DiffExpr::term(Q::one(), Monomial::from_factors([(Atom::Lambda, a)]));
        }
    }
    let atom = DiffExpr::atom(Atom::Func(FuncAtom {
        def: def.clone(),
        args,
        deriv,
    }));
    &prefactor * &atom
}

/// Checked application used for user input: arity must match and arbitrary
/// functions may not be nested.
pub fn apply_function_checked(
    def: &Arc<FunctionDef>,
    args: Vec<DiffExpr>,
) -> Result<DiffExpr, KernelError> {
    if args.len() != def.arity() {
        return Err(KernelError::ArityMismatch {
            name: def.name.clone(),
            expected: def.arity(),
            found: args.len(),
        });
    }
    if def.involves_arbitrary() {
        for a in &args {
            if let Some(inner) = a.func_atoms().iter().find(|f| f.def.involves_arbitrary()) {
                return Err(KernelError::NestedArbitraryFunction {
                    outer: def.name.clone(),
                    inner: inner.def.name.clone(),
                });
            }
        }
    }
    let n = args.len();
    Ok(apply_function(def, args, vec![0; n]))
}

/// Assignment of replacement expressions to dependent variables. Jets of a
/// replaced variable become total derivatives of the replacement.
#[derive(Clone, Debug, Default)]
pub struct Substitution {
    map: BTreeMap<usize, DiffExpr>,
}

impl Substitution {
    /// Builds an assignment, rejecting replacements that mention variables
    /// beyond the declared `n_indep` independents and `n_dep` dependents.
    pub fn new(
        map: BTreeMap<usize, DiffExpr>,
        n_indep: usize,
        n_dep: usize,
    ) -> Result<Self, KernelError> {
        for (dep, rep) in &map {
            if *dep >= n_dep {
                return Err(KernelError::UndeclaredVariable(format!(
                    "dependent #{}",
                    dep + 1
                )));
            }
            for atom in rep.atoms_deep() {
                match atom {
                    Atom::Indep(i) if i >= n_indep => {
                        return Err(KernelError::UndeclaredVariable(format!(
                            "independent #{}",
                            i + 1
                        )))
                    }
                    Atom::Jet(j) if j.dep >= n_dep => {
                        return Err(KernelError::UndeclaredVariable(format!(
                            "dependent #{}",
                            j.dep + 1
                        )))
                    }
                    Atom::Slot(_) | Atom::SelfCall | Atom::Coeff(_) => {
                        return Err(KernelError::UndeclaredVariable(format!("{atom:?}")))
                    }
                    _ => {}
                }
            }
        }
        Ok(Self { map })
    }

    /// Unvalidated constructor for internally generated assignments.
    pub(crate) fn from_map(map: BTreeMap<usize, DiffExpr>) -> Self {
        Self { map }
    }

    /// `U^dep -> lambda * U^dep` for every dependent.
    pub fn scaling(n_dep: usize) -> Self {
        Self::from_map(
            (0..n_dep)
                .map(|d| (d, &DiffExpr::lambda() * &DiffExpr::jet(Jet::base(d))))
                .collect(),
        )
    }

    /// `U -> lambda*U + (1 - lambda)*base`.
    pub fn homotopy_path(base: &[DiffExpr]) -> Self {
        let lambda = DiffExpr::lambda();
        let one_minus = &DiffExpr::one() - &lambda;
        Self::from_map(
            base.iter()
                .enumerate()
                .map(|(d, b)| {
                    (
                        d,
                        &(&lambda * &DiffExpr::jet(Jet::base(d))) + &(&one_minus * b),
                    )
                })
                .collect(),
        )
    }

    pub fn get(&self, dep: usize) -> Option<&DiffExpr> {
        self.map.get(&dep)
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&usize, &DiffExpr)> {
        self.map.iter()
    }
}

/// Consistent substitution through all jet coordinates.
pub fn substitute(e: &DiffExpr, sub: &Substitution) -> Result<DiffExpr, KernelError> {
    let mut replace = |a: &Atom| match a {
        Atom::Jet(j) => sub
            .get(j.dep)
            .map(|rep| total_derivative_multi(rep, &j.index)),
        _ => None,
    };
    map_atoms(e, &mut replace)
}

/// Replaces unknown coefficients by rational values.
pub fn assign_coefficients(e: &DiffExpr, values: &[Q]) -> DiffExpr {
    let mut replace = |a: &Atom| match a {
        Atom::Coeff(k) => Some(DiffExpr::constant(
            values.get(*k).cloned().unwrap_or_else(Q::zero),
        )),
        _ => None,
    };
    map_atoms(e, &mut replace).expect("constants substitute into any power")
}
