use std::cmp::Ordering;
use std::fmt;

/// Unordered multi-index over the independent variables.
///
/// Stored as sorted `(variable, count)` pairs with no zero counts, so mixed
/// partials such as `u_{xt}` and `u_{tx}` share one representation.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct MultiIndex {
    counts: Vec<(usize, u32)>,
}

impl MultiIndex {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn single(var: usize) -> Self {
        Self {
            counts: vec![(var, 1)],
        }
    }

    /// Builds a multi-index from `(variable, count)` pairs; repeated variables
    /// accumulate and zero counts are dropped.
    pub fn from_counts<I: IntoIterator<Item = (usize, u32)>>(pairs: I) -> Self {
        let mut counts: Vec<(usize, u32)> = Vec::new();
        for (var, c) in pairs {
            if c == 0 {
                continue;
            }
            match counts.binary_search_by_key(&var, |&(v, _)| v) {
                Ok(pos) => counts[pos].1 += c,
                Err(pos) => counts.insert(pos, (var, c)),
            }
        }
        Self { counts }
    }

    /// Builds a multi-index from a list of variables with repetition,
    /// e.g. `[x, x, t]`.
    pub fn from_vars(vars: &[usize]) -> Self {
        Self::from_counts(vars.iter().map(|&v| (v, 1)))
    }

    pub fn order(&self) -> u32 {
        self.counts.iter().map(|&(_, c)| c).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn count(&self, var: usize) -> u32 {
        self.counts
            .binary_search_by_key(&var, |&(v, _)| v)
            .map(|pos| self.counts[pos].1)
            .unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.counts.iter().copied()
    }

    pub fn with_var(&self, var: usize) -> Self {
        self.add(&Self::single(var))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_counts(self.iter().chain(other.iter()))
    }

    /// `self - other`, or `None` unless `other <= self` componentwise.
    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        if !other.le(self) {
            return None;
        }
        Some(Self::from_counts(
            self.iter().map(|(v, c)| (v, c - other.count(v))),
        ))
    }

    /// Componentwise partial order.
    pub fn le(&self, other: &Self) -> bool {
        self.iter().all(|(v, c)| c <= other.count(v))
    }

    /// The variables as a nondecreasing sequence, one entry per derivative.
    pub fn sorted_vars(&self) -> Vec<usize> {
        self.iter()
            .flat_map(|(v, c)| std::iter::repeat_n(v, c as usize))
            .collect()
    }

    /// Product of binomial coefficients `C(self_i, lower_i)`.
    pub fn binomial(&self, lower: &Self) -> u64 {
        lower
            .iter()
            .map(|(v, s)| binomial(self.count(v) as u64, s as u64))
            .product()
    }

    /// Every multi-index `<= self` componentwise, in a deterministic order.
    pub fn sub_indices(&self) -> Vec<Self> {
        let mut out = vec![Self::zero()];
        for (v, c) in self.iter() {
            let mut next = Vec::with_capacity(out.len() * (c as usize + 1));
            for base in &out {
                for k in 0..=c {
                    next.push(base.add(&Self::from_counts([(v, k)])));
                }
            }
            out = next;
        }
        out.sort();
        out
    }

    /// All multi-indices over `n` variables with order at most `max_order`.
    pub fn all_up_to(n: usize, max_order: u32) -> Vec<Self> {
        let mut out = vec![Self::zero()];
        for var in 0..n {
            let mut next = Vec::new();
            for base in &out {
                for k in 0..=(max_order - base.order()) {
                    next.push(base.add(&Self::from_counts([(var, k)])));
                }
            }
            out = next;
        }
        out.sort();
        out
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order()
            .cmp(&other.order())
            .then_with(|| other.counts.cmp(&self.counts))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.sorted_vars())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_zero_entries_and_order() {
        let m = MultiIndex::from_counts([(1, 2), (0, 0), (1, 1), (0, 1)]);
        assert_eq!(m.iter().collect::<Vec<_>>(), vec![(0, 1), (1, 3)]);
        assert_eq!(m.order(), 4);
        assert_eq!(m.sorted_vars(), vec![0, 1, 1, 1]);
    }

    #[test]
    fn partial_order_and_difference() {
        let a = MultiIndex::from_vars(&[0, 1]);
        let b = MultiIndex::from_vars(&[0, 1, 1]);
        assert!(a.le(&b));
        assert!(!b.le(&a));
        assert_eq!(b.checked_sub(&a), Some(MultiIndex::single(1)));
        assert_eq!(a.checked_sub(&b), None);
    }

    #[test]
    fn binomials_and_sub_indices() {
        let k = MultiIndex::from_counts([(0, 3), (1, 1)]);
        assert_eq!(k.binomial(&MultiIndex::from_counts([(0, 2)])), 3);
        assert_eq!(k.binomial(&MultiIndex::from_counts([(0, 1), (1, 1)])), 3);
        assert_eq!(k.sub_indices().len(), 8);
        assert_eq!(MultiIndex::all_up_to(2, 2).len(), 6);
    }
}
