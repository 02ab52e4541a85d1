use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use super::multi_index::MultiIndex;
use super::poly::DiffExpr;
use crate::error::KernelError;

/// A jet coordinate `U^dep_index`; the empty index is `U^dep` itself.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Jet {
    pub dep: usize,
    pub index: MultiIndex,
}

impl Jet {
    pub fn new(dep: usize, index: MultiIndex) -> Self {
        Self { dep, index }
    }

    pub fn base(dep: usize) -> Self {
        Self::new(dep, MultiIndex::zero())
    }

    pub fn order(&self) -> u32 {
        self.index.order()
    }
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "U{}{:?}", self.dep, self.index)
    }
}

/// Algebraic rewrite `f(args)^power -> value(args)`.
#[derive(Clone, Debug)]
pub struct PowerRule {
    pub power: u32,
    /// Template in terms of [`Atom::Slot`] placeholders.
    pub value: DiffExpr,
}

#[derive(Clone, Debug)]
pub enum FunctionKind {
    /// Algebraically independent symbol; derivatives are generated on demand.
    Arbitrary,
    /// Unary antiderivative: `d/da F(a) = integrand(a)`.
    Antiderivative { integrand: DiffExpr },
    /// Function with a derivative rule per slot and an optional power rule.
    /// Derivative templates may refer to the function itself via
    /// [`Atom::SelfCall`].
    Defined {
        derivatives: Vec<DiffExpr>,
        power_rule: Option<PowerRule>,
    },
}

#[derive(Clone, Debug)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<String>,
    pub kind: FunctionKind,
}

impl FunctionDef {
    pub fn arbitrary(name: &str, params: &[&str]) -> Arc<Self> {
        Arc::new(Self {
            name: name.to_string(),
            params: params.iter().map(|p| p.to_string()).collect(),
            kind: FunctionKind::Arbitrary,
        })
    }

    /// `name(param)` with derivative `integrand`, a template in `Slot(0)`.
    pub fn antiderivative(
        name: &str,
        param: &str,
        integrand: DiffExpr,
    ) -> Result<Arc<Self>, KernelError> {
        check_template(name, 1, &integrand, false)?;
        Ok(Arc::new(Self {
            name: name.to_string(),
            params: vec![param.to_string()],
            kind: FunctionKind::Antiderivative { integrand },
        }))
    }

    /// Positive `power`-th root: `f(a)^power = a`, `f'(a) = f(a)^(1-power)/power`.
    pub fn root(name: &str, param: &str, power: u32) -> Arc<Self> {
        assert!(power >= 2, "root degree must be at least 2");
        let derivative = DiffExpr::atom(Atom::SelfCall)
            .pow(1 - power as i32)
            .expect("atom powers are always defined")
            .scale(&crate::expr::q_frac(1, power as i64));
        Arc::new(Self {
            name: name.to_string(),
            params: vec![param.to_string()],
            kind: FunctionKind::Defined {
                derivatives: vec![derivative],
                power_rule: Some(PowerRule {
                    power,
                    value: DiffExpr::atom(Atom::Slot(0)),
                }),
            },
        })
    }

    pub fn defined(
        name: &str,
        params: &[&str],
        derivatives: Vec<DiffExpr>,
        power_rule: Option<PowerRule>,
    ) -> Result<Arc<Self>, KernelError> {
        if derivatives.len() != params.len() {
            return Err(KernelError::InvalidTemplate(
                name.to_string(),
                format!(
                    "{} derivative rules given for {} parameters",
                    derivatives.len(),
                    params.len()
                ),
            ));
        }
        for d in &derivatives {
            check_template(name, params.len(), d, true)?;
        }
        if let Some(rule) = &power_rule {
            if rule.power < 2 {
                return Err(KernelError::InvalidTemplate(
                    name.to_string(),
                    "power rule exponent must be at least 2".into(),
                ));
            }
            check_template(name, params.len(), &rule.value, false)?;
        }
        Ok(Arc::new(Self {
            name: name.to_string(),
            params: params.iter().map(|p| p.to_string()).collect(),
            kind: FunctionKind::Defined {
                derivatives,
                power_rule,
            },
        }))
    }

    pub fn arity(&self) -> usize {
        self.params.len()
    }

    pub fn is_arbitrary(&self) -> bool {
        matches!(self.kind, FunctionKind::Arbitrary)
    }

    /// True when the function is, or is built from, an arbitrary function.
    pub fn involves_arbitrary(&self) -> bool {
        match &self.kind {
            FunctionKind::Arbitrary => true,
            FunctionKind::Antiderivative { integrand } => integrand.involves_arbitrary(),
            FunctionKind::Defined {
                derivatives,
                power_rule,
            } => {
                derivatives.iter().any(|d| d.involves_arbitrary())
                    || power_rule
                        .as_ref()
                        .is_some_and(|r| r.value.involves_arbitrary())
            }
        }
    }

    /// The root degree `k` when the power rule is `f(a)^k = a`.
    pub fn root_degree(&self) -> Option<u32> {
        match &self.kind {
            FunctionKind::Defined {
                power_rule: Some(rule),
                ..
            } if self.arity() == 1 && rule.value == DiffExpr::atom(Atom::Slot(0)) => {
                Some(rule.power)
            }
            _ => None,
        }
    }

    pub fn power_rule(&self) -> Option<&PowerRule> {
        match &self.kind {
            FunctionKind::Defined { power_rule, .. } => power_rule.as_ref(),
            _ => None,
        }
    }
}

/// Templates may only use slots below the arity, with nonnegative exponents,
/// so instantiating them never divides by an argument.
fn check_template(
    name: &str,
    arity: usize,
    template: &DiffExpr,
    allow_self: bool,
) -> Result<(), KernelError> {
    let bad = |msg: String| Err(KernelError::InvalidTemplate(name.to_string(), msg));
    for (mono, _) in template.terms() {
        for (atom, exp) in mono.factors() {
            match atom {
                Atom::Slot(k) if *k >= arity => {
                    return bad(format!("unknown parameter #{}", k + 1))
                }
                Atom::Slot(_) if *exp < 0 => {
                    return bad("parameters may not appear in denominators".into())
                }
                Atom::SelfCall if !allow_self => {
                    return bad("self reference is only allowed in derivative rules".into())
                }
                Atom::Jet(_) | Atom::Indep(_) | Atom::Coeff(_) | Atom::Lambda => {
                    return bad("templates may only depend on the function parameters".into())
                }
                Atom::Func(f) => {
                    for a in &f.args {
                        check_template(name, arity, a, false)?;
                    }
                }
                _ => {}
            }
        }
    }
    Ok(())
}

/// Application of a declared function, possibly differentiated with respect
/// to its argument slots (only arbitrary functions carry derivative marks).
#[derive(Clone)]
pub struct FuncAtom {
    pub def: Arc<FunctionDef>,
    pub args: Vec<DiffExpr>,
    pub deriv: Vec<u32>,
}

impl FuncAtom {
    pub fn name(&self) -> &str {
        &self.def.name
    }

    pub fn deriv_order(&self) -> u32 {
        self.deriv.iter().sum()
    }

    fn key(&self) -> (&str, &[u32], &[DiffExpr]) {
        (&self.def.name, &self.deriv, &self.args)
    }
}

impl PartialEq for FuncAtom {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for FuncAtom {}

impl Ord for FuncAtom {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl PartialOrd for FuncAtom {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for FuncAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.def.name)?;
        if self.deriv.iter().any(|&d| d > 0) {
            write!(f, "{:?}", self.deriv)?;
        }
        write!(f, "{:?}", self.args)
    }
}

/// Building block of monomials.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Atom {
    /// Independent variable `x^i`.
    Indep(usize),
    Jet(Jet),
    Func(FuncAtom),
    /// Unknown ansatz coefficient; constant under every derivative.
    Coeff(usize),
    /// Homotopy parameter; constant under total derivatives.
    Lambda,
    /// Parameter placeholder inside function rule templates.
    Slot(usize),
    /// The function being defined, inside its own derivative templates.
    SelfCall,
}

impl Atom {
    pub fn jet(dep: usize, index: MultiIndex) -> Self {
        Atom::Jet(Jet::new(dep, index))
    }

    pub fn as_jet(&self) -> Option<&Jet> {
        match self {
            Atom::Jet(j) => Some(j),
            _ => None,
        }
    }

    pub fn as_func(&self) -> Option<&FuncAtom> {
        match self {
            Atom::Func(f) => Some(f),
            _ => None,
        }
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Indep(i) => write!(f, "x{i}"),
            Atom::Jet(j) => write!(f, "{j:?}"),
            Atom::Func(fa) => write!(f, "{fa:?}"),
            Atom::Coeff(k) => write!(f, "c{k}"),
            Atom::Lambda => write!(f, "lambda"),
            Atom::Slot(k) => write!(f, "#{}", k + 1),
            Atom::SelfCall => write!(f, "#self"),
        }
    }
}
