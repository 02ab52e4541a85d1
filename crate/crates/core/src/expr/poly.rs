use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num::{One, Zero};

use super::atom::{Atom, FuncAtom, Jet};
use super::{q_int, Q};
use crate::error::KernelError;

/// Product of atom powers with nonzero integer exponents, sorted by atom.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Monomial(Vec<(Atom, i32)>);

impl Monomial {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn atom(atom: Atom) -> Self {
        Self(vec![(atom, 1)])
    }

    pub fn from_factors<I: IntoIterator<Item = (Atom, i32)>>(factors: I) -> Self {
        let mut map: BTreeMap<Atom, i32> = BTreeMap::new();
        for (a, e) in factors {
            *map.entry(a).or_insert(0) += e;
        }
        Self(map.into_iter().filter(|(_, e)| *e != 0).collect())
    }

    pub fn factors(&self) -> impl Iterator<Item = &(Atom, i32)> {
        self.0.iter()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exponent(&self, atom: &Atom) -> i32 {
        self.0
            .binary_search_by(|(a, _)| a.cmp(atom))
            .map(|pos| self.0[pos].1)
            .unwrap_or(0)
    }

    /// Sum of exponents.
    pub fn degree(&self) -> i32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(self.0[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(other.0[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let e = self.0[i].1 + other.0[j].1;
                    if e != 0 {
                        out.push((self.0[i].0.clone(), e));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Self(out)
    }

    pub fn pow(&self, n: i32) -> Self {
        if n == 0 {
            return Self::one();
        }
        Self(self.0.iter().map(|(a, e)| (a.clone(), e * n)).collect())
    }

    /// Removes every power of `atom`.
    pub fn without(&self, atom: &Atom) -> Self {
        Self(self.0.iter().filter(|(a, _)| a != atom).cloned().collect())
    }

    /// Removes every unknown-coefficient factor.
    pub fn without_coefficients(&self) -> Self {
        Self(
            self.0
                .iter()
                .filter(|(a, _)| !matches!(a, Atom::Coeff(_)))
                .cloned()
                .collect(),
        )
    }

    /// The monomial `prod a^max(0, -e)` that clears its negative exponents.
    pub fn denominator(&self) -> Self {
        Self(
            self.0
                .iter()
                .filter(|(_, e)| *e < 0)
                .map(|(a, e)| (a.clone(), -e))
                .collect(),
        )
    }

    /// Componentwise maximum of the exponents (least common multiple).
    pub fn lcm(&self, other: &Self) -> Self {
        let mut map: BTreeMap<Atom, i32> = self.0.iter().cloned().collect();
        for (a, e) in &other.0 {
            let slot = map.entry(a.clone()).or_insert(0);
            *slot = (*slot).max(*e);
        }
        Self(map.into_iter().filter(|(_, e)| *e != 0).collect())
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(a, e)| {
                if *e == 1 {
                    format!("{a:?}")
                } else {
                    format!("{a:?}^{e}")
                }
            })
            .collect();
        write!(f, "{}", parts.join("*"))
    }
}

/// Canonical sum of rational multiples of monomials.
///
/// Every constructor keeps the representation normalized: no zero
/// coefficients, no zero exponents, and power rules of defined functions
/// applied to positive exponents.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct DiffExpr {
    terms: BTreeMap<Monomial, Q>,
}

impl DiffExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Q::one())
    }

    pub fn constant(c: Q) -> Self {
        Self::term(c, Monomial::one())
    }

    pub fn integer(n: i64) -> Self {
        Self::constant(q_int(n))
    }

    pub fn atom(atom: Atom) -> Self {
        Self::term(Q::one(), Monomial::atom(atom))
    }

    pub fn indep(i: usize) -> Self {
        Self::atom(Atom::Indep(i))
    }

    pub fn jet(jet: Jet) -> Self {
        Self::atom(Atom::Jet(jet))
    }

    pub fn coeff(k: usize) -> Self {
        Self::atom(Atom::Coeff(k))
    }

    pub fn lambda() -> Self {
        Self::atom(Atom::Lambda)
    }

    /// `c * m`, with power rules applied.
    pub fn term(c: Q, m: Monomial) -> Self {
        let mut out = Self::zero();
        out.add_term(m, c);
        out
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Q)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Structural emptiness. See [`DiffExpr::is_zero`] for the semantic test.
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<Q> {
        match self.terms.len() {
            0 => Some(Q::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn as_single_term(&self) -> Option<(&Monomial, &Q)> {
        if self.terms.len() == 1 {
            self.terms.iter().next()
        } else {
            None
        }
    }

    /// Adds `c * m`, rewriting through power rules when an exponent reaches
    /// the rule's power.
    pub fn add_term(&mut self, m: Monomial, c: Q) {
        if c.is_zero() {
            return;
        }
        if let Some((pos, rewritten)) = rule_rewrite(&m) {
            let (atom, _) = &m.0[pos];
            let rest = Monomial(
                m.0.iter()
                    .enumerate()
                    .map(|(i, f)| {
                        if i == pos {
                            (atom.clone(), rewritten.1)
                        } else {
                            f.clone()
                        }
                    })
                    .filter(|(_, e)| *e != 0)
                    .collect(),
            );
            let expanded = Self::term(c, rest).mul_expr(&rewritten.0);
            for (mm, cc) in expanded.terms {
                self.add_plain(mm, cc);
            }
            return;
        }
        self.add_plain(m, c);
    }

    fn add_plain(&mut self, m: Monomial, c: Q) {
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    pub fn mul_monomial(&self, m: &Monomial) -> Self {
        let mut out = Self::zero();
        for (mm, c) in &self.terms {
            out.add_term(mm.mul(m), c.clone());
        }
        out
    }

    fn mul_expr(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    /// Integer power; negative powers need a single-term base.
    pub fn pow(&self, n: i32) -> Result<Self, KernelError> {
        if n < 0 {
            return self.inverse()?.pow(-n);
        }
        let mut result = Self::one();
        let mut base = self.clone();
        let mut k = n as u32;
        while k > 0 {
            if k & 1 == 1 {
                result = &result * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        Ok(result)
    }

    pub fn inverse(&self) -> Result<Self, KernelError> {
        match self.terms.len() {
            0 => Err(KernelError::DivisionByZero),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                Ok(Self::term(c.recip(), m.pow(-1)))
            }
            _ => {
                if self.is_zero() {
                    Err(KernelError::DivisionByZero)
                } else {
                    Err(KernelError::NonMonomialDenominator(format!("{self:?}")))
                }
            }
        }
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self, KernelError> {
        Ok(self * &other.inverse()?)
    }

    /// Rebuilds the canonical form; idempotent.
    pub fn normalize(&self) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    /// Monomial that clears every negative exponent.
    pub fn denominator(&self) -> Monomial {
        self.terms
            .keys()
            .fold(Monomial::one(), |acc, m| acc.lcm(&m.denominator()))
    }

    /// `(d, self * d)` with `d` the clearing monomial; the product has no
    /// negative exponents.
    pub fn clear_denominators(&self) -> (Monomial, Self) {
        let d = self.denominator();
        if d.is_one() {
            return (d, self.clone());
        }
        let cleared = self.mul_monomial(&d);
        (d, cleared)
    }

    /// Semantic zero test: compares canonical forms after clearing
    /// denominators, so root atoms in denominators are handled.
    pub fn is_zero(&self) -> bool {
        if self.terms.is_empty() {
            return true;
        }
        let d = self.denominator();
        if d.is_one() {
            return false;
        }
        self.mul_monomial(&d).terms.is_empty()
    }

    /// Semantic equality.
    pub fn equals(&self, other: &Self) -> bool {
        (self - other).is_zero()
    }

    /// Every atom occurring at top level.
    pub fn atoms(&self) -> BTreeSet<Atom> {
        let mut out = BTreeSet::new();
        for m in self.terms.keys() {
            for (a, _) in m.factors() {
                out.insert(a.clone());
            }
        }
        out
    }

    /// Every atom, including those inside function arguments.
    pub fn atoms_deep(&self) -> BTreeSet<Atom> {
        let mut out = BTreeSet::new();
        self.collect_atoms_deep(&mut out);
        out
    }

    fn collect_atoms_deep(&self, out: &mut BTreeSet<Atom>) {
        for m in self.terms.keys() {
            for (a, _) in m.factors() {
                if let Atom::Func(f) = a {
                    for arg in &f.args {
                        arg.collect_atoms_deep(out);
                    }
                }
                out.insert(a.clone());
            }
        }
    }

    /// Jet coordinates present anywhere in the expression.
    pub fn jets(&self) -> BTreeSet<Jet> {
        self.atoms_deep()
            .into_iter()
            .filter_map(|a| match a {
                Atom::Jet(j) => Some(j),
                _ => None,
            })
            .collect()
    }

    pub fn jets_of(&self, dep: usize) -> BTreeSet<Jet> {
        self.jets().into_iter().filter(|j| j.dep == dep).collect()
    }

    /// Highest derivative order of any jet present (0 when none).
    pub fn jet_order(&self) -> u32 {
        self.jets().iter().map(|j| j.order()).max().unwrap_or(0)
    }

    pub fn func_atoms(&self) -> Vec<FuncAtom> {
        self.atoms_deep()
            .into_iter()
            .filter_map(|a| match a {
                Atom::Func(f) => Some(f),
                _ => None,
            })
            .collect()
    }

    pub fn involves_arbitrary(&self) -> bool {
        self.func_atoms().iter().any(|f| f.def.involves_arbitrary())
    }

    pub fn contains_atom(&self, atom: &Atom) -> bool {
        self.atoms_deep().contains(atom)
    }
}

/// Finds the first factor whose exponent triggers a power rule and returns
/// its position together with `(expansion, remaining exponent)`.
fn rule_rewrite(m: &Monomial) -> Option<(usize, (DiffExpr, i32))> {
    for (pos, (atom, e)) in m.0.iter().enumerate() {
        let Atom::Func(f) = atom else { continue };
        let Some(rule) = f.def.power_rule() else {
            continue;
        };
        let k = rule.power as i32;
        if *e >= k {
            let value = super::subst::instantiate(&rule.value, f);
            let q = e / k;
            let r = e % k;
            let expansion = value.pow(q).expect("nonnegative power");
            return Some((pos, (expansion, r)));
        }
        if *e <= -k {
            let value = super::subst::instantiate(&rule.value, f);
            if value.num_terms() == 1 {
                let q = (-e) / k;
                let r = -((-e) % k);
                let expansion = value.pow(-q).expect("single-term inverse");
                return Some((pos, (expansion, r)));
            }
        }
    }
    None
}

impl fmt::Debug for DiffExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| {
                if m.is_one() {
                    format!("{c}")
                } else if c.is_one() {
                    format!("{m:?}")
                } else {
                    format!("({c})*{m:?}")
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl Add for &DiffExpr {
    type Output = DiffExpr;
    fn add(self, rhs: &DiffExpr) -> DiffExpr {
        let (big, small) = if self.terms.len() >= rhs.terms.len() {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let mut out = big.clone();
        for (m, c) in &small.terms {
            out.add_plain(m.clone(), c.clone());
        }
        out
    }
}

impl Add for DiffExpr {
    type Output = DiffExpr;
    fn add(mut self, rhs: DiffExpr) -> DiffExpr {
        for (m, c) in rhs.terms {
            self.add_plain(m, c);
        }
        self
    }
}

impl Sub for &DiffExpr {
    type Output = DiffExpr;
    fn sub(self, rhs: &DiffExpr) -> DiffExpr {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_plain(m.clone(), -c);
        }
        out
    }
}

impl Sub for DiffExpr {
    type Output = DiffExpr;
    fn sub(mut self, rhs: DiffExpr) -> DiffExpr {
        for (m, c) in rhs.terms {
            self.add_plain(m, -c);
        }
        self
    }
}

impl Neg for &DiffExpr {
    type Output = DiffExpr;
    fn neg(self) -> DiffExpr {
        DiffExpr {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Neg for DiffExpr {
    type Output = DiffExpr;
    fn neg(mut self) -> DiffExpr {
        for c in self.terms.values_mut() {
            *c = -c.clone();
        }
        self
    }
}

impl Mul for &DiffExpr {
    type Output = DiffExpr;
    fn mul(self, rhs: &DiffExpr) -> DiffExpr {
        self.mul_expr(rhs)
    }
}

impl Mul for DiffExpr {
    type Output = DiffExpr;
    fn mul(self, rhs: DiffExpr) -> DiffExpr {
        self.mul_expr(&rhs)
    }
}

impl std::iter::Sum for DiffExpr {
    fn sum<I: Iterator<Item = DiffExpr>>(iter: I) -> Self {
        let mut acc = DiffExpr::zero();
        for e in iter {
            for (m, c) in e.terms {
                acc.add_plain(m, c);
            }
        }
        acc
    }
}

impl From<i64> for DiffExpr {
    fn from(n: i64) -> Self {
        DiffExpr::integer(n)
    }
}

impl From<Q> for DiffExpr {
    fn from(c: Q) -> Self {
        DiffExpr::constant(c)
    }
}
