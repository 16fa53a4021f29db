//! Exact sparse row reduction over Gaussian rationals.

use std::collections::BTreeMap;

use crate::scalars::Exact;

pub type SparseRow = BTreeMap<usize, Exact>;

/// Incrementally maintained reduced row echelon form.
#[derive(Clone, Debug, Default)]
pub struct Rref {
    /// pivot column → row with coefficient 1 at the pivot and 0 at every other pivot column
    pivots: BTreeMap<usize, SparseRow>,
}

fn axpy(row: &mut SparseRow, c: &Exact, other: &SparseRow) {
    for (k, v) in other {
        let e = row.entry(*k).or_insert_with(Exact::zero);
        *e = &*e - &(c * v);
        if e.is_zero() {
            row.remove(k);
        }
    }
}

impl Rref {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn is_pivot(&self, col: usize) -> bool {
        self.pivots.contains_key(&col)
    }

    /// Reduces a row against the current pivots.
    pub fn reduce(&self, mut row: SparseRow) -> SparseRow {
        let hits: Vec<usize> = row.keys().copied().filter(|k| self.pivots.contains_key(k)).collect();
        for k in hits {
            if let Some(c) = row.get(&k).cloned() {
                axpy(&mut row, &c, &self.pivots[&k]);
            }
        }
        row
    }

    /// Adds a row; returns true when it raised the rank.
    pub fn push(&mut self, row: SparseRow) -> bool {
        let row = self.reduce(row);
        let Some((&col, lead)) = row.iter().next() else {
            return false;
        };
        let inv = lead.inv();
        let row: SparseRow = row.iter().map(|(k, v)| (*k, v * &inv)).collect();
        for other in self.pivots.values_mut() {
            if let Some(c) = other.get(&col).cloned() {
                axpy(other, &c, &row);
            }
        }
        self.pivots.insert(col, row);
        true
    }

    /// Basis of the solution space of the homogeneous system in `ncols` unknowns,
    /// one vector per free column.
    pub fn nullspace(&self, ncols: usize) -> Vec<(usize, SparseRow)> {
        let mut out = Vec::new();
        for f in (0..ncols).filter(|c| !self.pivots.contains_key(c)) {
            let mut v = SparseRow::new();
            v.insert(f, Exact::one());
            for (p, row) in &self.pivots {
                if let Some(c) = row.get(&f) {
                    v.insert(*p, -c);
                }
            }
            out.push((f, v));
        }
        out
    }
}

/// Rank of a set of sparse vectors.
pub fn rank_of(rows: impl IntoIterator<Item = SparseRow>) -> usize {
    let mut r = Rref::new();
    for row in rows {
        r.push(row);
    }
    r.rank()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: &[(usize, i64)]) -> SparseRow {
        v.iter().map(|(k, x)| (*k, Exact::int(*x))).collect()
    }

    #[test]
    fn nullspace_of_small_system() {
        let mut r = Rref::new();
        assert!(r.push(row(&[(0, 1), (1, 2), (2, 3)])));
        assert!(r.push(row(&[(1, 1), (2, 1)])));
        assert!(!r.push(row(&[(0, 2), (1, 5), (2, 7)])));
        let ns = r.nullspace(3);
        assert_eq!(ns.len(), 1);
        let v = &ns[0].1;
        let dot = |rw: &SparseRow| rw.iter().fold(Exact::zero(), |a, (k, c)| a + c * v.get(k).cloned().unwrap_or_else(Exact::zero));
        assert!(dot(&row(&[(0, 1), (1, 2), (2, 3)])).is_zero());
        assert!(dot(&row(&[(1, 1), (2, 1)])).is_zero());
        assert_eq!(rank_of([row(&[(0, 1)]), row(&[(0, 3)]), row(&[(4, 1)])]), 2);
    }
}
