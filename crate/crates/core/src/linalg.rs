//! Sparse exact linear algebra by fraction-free integer elimination.

use std::collections::BTreeMap;

use num::{BigInt, Integer, One, Signed, Zero};

use crate::expr::Q;

type Row = BTreeMap<usize, BigInt>;

/// Rows of rational entries with a label per row.
#[derive(Clone, Debug, Default)]
pub struct LinearSystem {
    pub ncols: usize,
    pub rows: Vec<Vec<(usize, Q)>>,
    pub provenance: Vec<String>,
}

impl LinearSystem {
    pub fn new(ncols: usize) -> Self {
        Self {
            ncols,
            ..Default::default()
        }
    }

    /// Adds a row unless every entry is zero.
    pub fn push(&mut self, row: Vec<(usize, Q)>, provenance: String) {
        let row: Vec<(usize, Q)> = row.into_iter().filter(|(_, q)| !q.is_zero()).collect();
        if !row.is_empty() {
            self.rows.push(row);
            self.provenance.push(provenance);
        }
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }
}

/// Reduced echelon form over the integers: each pivot row has its pivot
/// column as the only nonzero among pivot columns.
#[derive(Clone, Debug)]
pub struct Echelon {
    ncols: usize,
    pivots: Vec<(usize, Row)>,
    inconsistent: bool,
}

fn integer_row(row: &[(usize, Q)]) -> Row {
    let lcm = row
        .iter()
        .fold(BigInt::one(), |acc, (_, q)| acc.lcm(q.denom()));
    let mut out = Row::new();
    for (c, q) in row {
        let v = q.numer() * (&lcm / q.denom());
        if !v.is_zero() {
            *out.entry(*c).or_insert_with(BigInt::zero) += v;
        }
    }
    out.retain(|_, v| !v.is_zero());
    primitive(&mut out);
    out
}

fn primitive(row: &mut Row) {
    let g = row.values().fold(BigInt::zero(), |acc, v| acc.gcd(v));
    if g > BigInt::one() {
        for v in row.values_mut() {
            *v = &*v / &g;
        }
    }
}

/// `a * target - b * pivot_row` with `a`, `b` chosen to clear `col`.
fn eliminate(target: &mut Row, pivot_row: &Row, col: usize) {
    let Some(t) = target.get(&col).cloned() else {
        return;
    };
    let p = &pivot_row[&col];
    let g = t.gcd(p);
    let a = p / &g;
    let b = &t / &g;
    for v in target.values_mut() {
        *v = &*v * &a;
    }
    for (c, v) in pivot_row {
        let e = target.entry(*c).or_insert_with(BigInt::zero);
        *e -= &b * v;
    }
    target.retain(|_, v| !v.is_zero());
    primitive(target);
}

impl Echelon {
    /// Eliminates with pivots restricted to columns `< ncols`; entries in
    /// column `ncols` are treated as an augmented right-hand side.
    pub fn compute(ncols: usize, rows: &[Vec<(usize, Q)>]) -> Self {
        let mut pending: Vec<Row> = rows
            .iter()
            .map(|r| integer_row(r))
            .filter(|r| !r.is_empty())
            .collect();
        let mut pivots: Vec<(usize, Row)> = Vec::new();
        for col in 0..ncols {
            let best = pending
                .iter()
                .enumerate()
                .filter_map(|(k, r)| r.get(&col).map(|v| (k, v.abs(), r.len())))
                .min_by(|a, b| a.1.cmp(&b.1).then(a.2.cmp(&b.2)).then(a.0.cmp(&b.0)));
            let Some((k, _, _)) = best else { continue };
            let mut prow = pending.swap_remove(k);
            if prow[&col].is_negative() {
                for v in prow.values_mut() {
                    *v = -&*v;
                }
            }
            for r in pending.iter_mut() {
                eliminate(r, &prow, col);
            }
            pending.retain(|r| !r.is_empty());
            for (_, r) in pivots.iter_mut() {
                eliminate(r, &prow, col);
            }
            pivots.push((col, prow));
        }
        let inconsistent = !pending.is_empty();
        pivots.sort_by_key(|(c, _)| *c);
        for (c, r) in pivots.iter_mut() {
            if r[c].is_negative() {
                for v in r.values_mut() {
                    *v = -&*v;
                }
            }
        }
        Self {
            ncols,
            pivots,
            inconsistent,
        }
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn pivot_columns(&self) -> Vec<usize> {
        self.pivots.iter().map(|(c, _)| *c).collect()
    }

    /// One basis vector per free column, with that column set to 1.
    pub fn nullspace(&self) -> Vec<Vec<Q>> {
        let pivot_cols: BTreeMap<usize, usize> = self
            .pivots
            .iter()
            .enumerate()
            .map(|(k, (c, _))| (*c, k))
            .collect();
        (0..self.ncols)
            .filter(|c| !pivot_cols.contains_key(c))
            .map(|free| {
                let mut v = vec![Q::zero(); self.ncols];
                v[free] = Q::one();
                for (pc, row) in &self.pivots {
                    if let Some(e) = row.get(&free) {
                        v[*pc] = -Q::new(e.clone(), row[pc].clone());
                    }
                }
                v
            })
            .collect()
    }

    /// Solution of the augmented system with every free column set to 0, or
    /// `None` when inconsistent.
    pub fn particular_solution(&self) -> Option<Vec<Q>> {
        if self.inconsistent {
            return None;
        }
        let mut v = vec![Q::zero(); self.ncols];
        for (pc, row) in &self.pivots {
            if let Some(b) = row.get(&self.ncols) {
                v[*pc] = -Q::new(b.clone(), row[pc].clone());
            }
        }
        Some(v)
    }
}

/// Basis of `{c : A c = 0}`.
pub fn nullspace(system: &LinearSystem) -> Vec<Vec<Q>> {
    Echelon::compute(system.ncols, &system.rows).nullspace()
}

/// Some `c` with `A c + b = 0` where `b` sits in column `ncols` of each row.
pub fn solve_affine(system: &LinearSystem) -> Option<Vec<Q>> {
    Echelon::compute(system.ncols, &system.rows).particular_solution()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{q_frac, q_int};

    fn sys(ncols: usize, rows: Vec<Vec<(usize, i64)>>) -> LinearSystem {
        let mut s = LinearSystem::new(ncols);
        for r in rows {
            s.push(
                r.into_iter().map(|(c, v)| (c, q_int(v))).collect(),
                String::new(),
            );
        }
        s
    }

    #[test]
    fn identity_has_trivial_kernel() {
        assert!(nullspace(&sys(2, vec![vec![(0, 1)], vec![(1, 1)]])).is_empty());
    }

    #[test]
    fn zero_row_keeps_full_kernel() {
        let s = sys(3, vec![vec![]]);
        assert_eq!(s.nrows(), 0);
        assert_eq!(nullspace(&s).len(), 3);
    }

    #[test]
    fn kernel_vectors_satisfy_rows() {
        let s = sys(
            4,
            vec![
                vec![(0, 2), (1, 4), (3, -6)],
                vec![(1, 3), (2, 1)],
                vec![(0, 1), (2, -1)],
            ],
        );
        let basis = nullspace(&s);
        assert_eq!(basis.len(), 4 - Echelon::compute(4, &s.rows).rank());
        for v in &basis {
            for row in &s.rows {
                let dot: Q = row.iter().map(|(c, q)| q * &v[*c]).sum();
                assert!(dot.is_zero());
            }
        }
    }

    #[test]
    fn affine_solution_and_inconsistency() {
        let mut s = LinearSystem::new(2);
        s.push(vec![(0, q_int(2)), (2, q_int(-1))], String::new());
        s.push(
            vec![(1, q_int(1)), (0, q_int(1)), (2, q_int(1))],
            String::new(),
        );
        let v = solve_affine(&s).unwrap();
        assert_eq!(v, vec![q_frac(1, 2), q_frac(-3, 2)]);
        s.push(vec![(2, q_int(1))], String::new());
        assert!(solve_affine(&s).is_none());
    }
}
