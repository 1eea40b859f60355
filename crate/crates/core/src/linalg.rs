//! Exact rational linear algebra: echelon forms, ranks, null spaces and the
//! LDLᵀ positive-semidefiniteness test used by the certifier.

use std::collections::{BTreeMap, HashMap};

use num_traits::{Signed, Zero};

use crate::rat::Rat;

pub type SparseVec = BTreeMap<usize, Rat>;

/// Incrementally built row-echelon basis of a subspace of Qⁿ.
#[derive(Debug, Default, Clone)]
pub struct SparseEchelon {
    /// pivot column -> row whose leading entry (equal to 1) sits in that column
    rows: HashMap<usize, SparseVec>,
}

impl SparseEchelon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Reduces `v` against the basis; the result is zero iff `v` is in the span.
    pub fn reduce(&self, mut v: SparseVec) -> SparseVec {
        let mut from = 0usize;
        loop {
            let Some((&c, coef)) = v.range(from..).next() else {
                return v;
            };
            match self.rows.get(&c) {
                Some(row) => {
                    let coef = coef.clone();
                    for (&j, x) in row {
                        let e = v.entry(j).or_insert_with(Rat::zero);
                        *e -= &coef * x;
                        if e.is_zero() {
                            v.remove(&j);
                        }
                    }
                }
                None => from = c + 1,
            }
        }
    }

    /// Adds `v` to the basis; returns false if it was already in the span.
    pub fn insert(&mut self, v: SparseVec) -> bool {
        // a reduced vector has no entries in pivot columns
        let mut v = self.reduce(v);
        let Some((&c, pivot)) = v.iter().next() else {
            return false;
        };
        let pivot = pivot.clone();
        for x in v.values_mut() {
            *x /= &pivot;
        }
        self.rows.insert(c, v);
        true
    }

    pub fn contains(&self, v: &SparseVec) -> bool {
        self.reduce(v.clone()).is_empty()
    }
}

pub fn sparse_from_dense(v: &[Rat]) -> SparseVec {
    v.iter()
        .enumerate()
        .filter(|(_, x)| !x.is_zero())
        .map(|(i, x)| (i, x.clone()))
        .collect()
}

/// Rank of the matrix whose rows are given.
pub fn rank(rows: impl IntoIterator<Item = SparseVec>) -> usize {
    let mut ech = SparseEchelon::new();
    for r in rows {
        ech.insert(r);
    }
    ech.rank()
}

/// Reduced row echelon form in place; returns the pivot columns.
pub fn rref(m: &mut [Vec<Rat>]) -> Vec<usize> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].clone();
        for x in m[r].iter_mut() {
            *x /= &inv;
        }
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let f = row[c].clone();
                for (x, y) in row.iter_mut().zip(&pivot_row) {
                    if !y.is_zero() {
                        *x -= &f * y;
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Basis of the right null space `{x : M x = 0}`.
pub fn nullspace(m: &[Vec<Rat>], cols: usize) -> Vec<Vec<Rat>> {
    let mut a: Vec<Vec<Rat>> = m.to_vec();
    let pivots = rref(&mut a);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut x = vec![Rat::zero(); cols];
            x[f] = Rat::from_integer(1.into());
            for (r, &pc) in pivots.iter().enumerate() {
                x[pc] = -a[r][f].clone();
            }
            x
        })
        .collect()
}

/// Outcome of the exact LDLᵀ semidefiniteness test.
#[derive(Debug, Clone, PartialEq)]
pub enum LdlOutcome {
    /// `A = L D Lᵀ` with unit lower-triangular `L` (column-major list of columns) and `D ≥ 0`.
    Psd { pivots: Vec<Rat>, l: Vec<Vec<Rat>> },
    /// Negative pivot, or zero pivot with a nonzero remaining row, at this index.
    NotPsd { index: usize, pivot: Rat },
}

/// Exact LDLᵀ of a symmetric rational matrix without reordering.
///
/// Accepts semidefinite input: a zero pivot is allowed when the rest of its
/// row in the Schur complement is zero.
pub fn ldl_psd(a: &[Vec<Rat>]) -> LdlOutcome {
    let n = a.len();
    let mut s: Vec<Vec<Rat>> = a.to_vec();
    let mut pivots = Vec::with_capacity(n);
    let mut l = vec![vec![Rat::zero(); n]; n];
    for k in 0..n {
        let p = s[k][k].clone();
        l[k][k] = Rat::from_integer(1.into());
        if p.is_negative() {
            return LdlOutcome::NotPsd { index: k, pivot: p };
        }
        if p.is_zero() {
            if let Some(j) = (k + 1..n).find(|&j| !s[k][j].is_zero()) {
                return LdlOutcome::NotPsd {
                    index: k,
                    pivot: s[k][j].clone(),
                };
            }
            pivots.push(p);
            continue;
        }
        for i in k + 1..n {
            if s[i][k].is_zero() {
                continue;
            }
            let lik = &s[i][k] / &p;
            for j in k + 1..=i {
                if s[k][j].is_zero() {
                    continue;
                }
                let delta = &lik * &s[k][j];
                s[i][j] -= &delta;
                if i != j {
                    s[j][i] = s[i][j].clone();
                }
            }
            l[k][i] = lik;
        }
        pivots.push(p);
    }
    LdlOutcome::Psd { pivots, l }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{frac, int};

    fn m(rows: &[&[i64]]) -> Vec<Vec<Rat>> {
        rows.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect()
    }

    #[test]
    fn rank_and_nullspace() {
        let a = m(&[&[1, 2, 3], &[2, 4, 6], &[1, 0, 1]]);
        assert_eq!(rank(a.iter().map(|r| sparse_from_dense(r))), 2);
        let ns = nullspace(&a, 3);
        assert_eq!(ns.len(), 1);
        for r in &a {
            let dot: Rat = r.iter().zip(&ns[0]).map(|(x, y)| x * y).sum();
            assert!(dot.is_zero());
        }
    }

    #[test]
    fn echelon_membership() {
        let mut e = SparseEchelon::new();
        assert!(e.insert(sparse_from_dense(&[int(0), int(2), int(1)])));
        assert!(e.insert(sparse_from_dense(&[int(1), int(1), int(0)])));
        assert!(!e.insert(sparse_from_dense(&[int(2), int(4), int(1)])));
        assert!(e.contains(&sparse_from_dense(&[int(1), int(3), int(1)])));
        assert!(!e.contains(&sparse_from_dense(&[int(0), int(0), int(1)])));
    }

    #[test]
    fn ldl_accepts_psd_rejects_indefinite() {
        let psd = m(&[&[4, 2], &[2, 1]]);
        match ldl_psd(&psd) {
            LdlOutcome::Psd { pivots, l } => {
                assert_eq!(pivots, vec![int(4), int(0)]);
                assert_eq!(l[0][1], frac(1, 2));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(ldl_psd(&m(&[&[1, 2], &[2, 1]])), LdlOutcome::NotPsd { index: 1, .. }));
        assert!(matches!(ldl_psd(&m(&[&[0, 1], &[1, 5]])), LdlOutcome::NotPsd { index: 0, .. }));
        assert!(matches!(ldl_psd(&m(&[&[-1]])), LdlOutcome::NotPsd { index: 0, .. }));
        assert!(matches!(ldl_psd(&m(&[&[0, 0], &[0, 3]])), LdlOutcome::Psd { .. }));
    }
}
