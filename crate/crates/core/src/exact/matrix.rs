use std::collections::BTreeMap;

use num_traits::{One, Zero};

use super::scalar::GaussianRational;

type SparseRow = BTreeMap<usize, GaussianRational>;

/// Sparse matrix over the Gaussian rationals, stored row-wise.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalMatrix {
    cols: usize,
    rows: Vec<SparseRow>,
}

/// Reduced row echelon form: one row per pivot, each with a unit leading entry.
#[derive(Clone, Debug)]
pub struct Rref {
    pub cols: usize,
    pub pivots: Vec<(usize, SparseRow)>,
}

impl RationalMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        RationalMatrix {
            cols,
            rows: vec![SparseRow::new(); rows],
        }
    }

    pub fn from_dense(data: &[Vec<GaussianRational>]) -> Self {
        let cols = data.first().map_or(0, |r| r.len());
        let mut m = Self::new(0, cols);
        for r in data {
            assert_eq!(r.len(), cols, "ragged dense matrix");
            m.push_row(r.iter().cloned().enumerate());
        }
        m
    }

    pub fn from_ints(data: &[&[i64]]) -> Self {
        let dense: Vec<Vec<GaussianRational>> = data
            .iter()
            .map(|r| r.iter().map(|&v| GaussianRational::from_int(v)).collect())
            .collect();
        Self::from_dense(&dense)
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::new(n, n);
        for i in 0..n {
            m.set(i, i, GaussianRational::one());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    pub fn get(&self, r: usize, c: usize) -> GaussianRational {
        self.rows[r].get(&c).cloned().unwrap_or_else(GaussianRational::zero)
    }

    pub fn set(&mut self, r: usize, c: usize, v: GaussianRational) {
        assert!(c < self.cols, "column out of range");
        if v.is_zero() {
            self.rows[r].remove(&c);
        } else {
            self.rows[r].insert(c, v);
        }
    }

    /// Append a row given as `(column, value)` pairs; repeated columns accumulate.
    pub fn push_row(&mut self, entries: impl IntoIterator<Item = (usize, GaussianRational)>) {
        let mut row = SparseRow::new();
        for (c, v) in entries {
            assert!(c < self.cols, "column out of range");
            accumulate(&mut row, c, &v);
        }
        self.rows.push(row);
    }

    pub fn row_entries(&self, r: usize) -> impl Iterator<Item = (&usize, &GaussianRational)> {
        self.rows[r].iter()
    }

    pub fn mul_vec(&self, v: &[GaussianRational]) -> Vec<GaussianRational> {
        assert_eq!(v.len(), self.cols);
        self.rows
            .iter()
            .map(|row| {
                let mut acc = GaussianRational::zero();
                for (&c, a) in row {
                    if !v[c].is_zero() {
                        acc += &(a * &v[c]);
                    }
                }
                acc
            })
            .collect()
    }

    /// True when `A·v = 0` exactly.
    pub fn annihilates(&self, v: &[GaussianRational]) -> bool {
        self.mul_vec(v).iter().all(|x| x.is_zero())
    }

    /// Gaussian elimination to reduced row echelon form.
    pub fn rref(&self) -> Rref {
        let mut pivots: BTreeMap<usize, SparseRow> = BTreeMap::new();
        for row in &self.rows {
            let mut r = row.clone();
            let mut cursor = 0usize;
            loop {
                let hit = r
                    .range(cursor..)
                    .find(|(c, _)| pivots.contains_key(c))
                    .map(|(c, v)| (*c, v.clone()));
                let Some((c, factor)) = hit else { break };
                let prow = &pivots[&c];
                for (pc, pv) in prow {
                    accumulate(&mut r, *pc, &-(pv * &factor));
                }
                cursor = c + 1;
            }
            if let Some((&lead, lv)) = r.iter().next() {
                let inv = lv.inv().expect("nonzero leading entry");
                for v in r.values_mut() {
                    *v *= &inv;
                }
                pivots.insert(lead, r);
            }
        }
        // Back substitution, last pivot first.
        let cols: Vec<usize> = pivots.keys().rev().cloned().collect();
        for &c in &cols {
            let mut row = pivots.remove(&c).unwrap();
            let targets: Vec<usize> = row
                .range(c + 1..)
                .map(|(k, _)| *k)
                .filter(|k| pivots.contains_key(k))
                .collect();
            for k in targets {
                let Some(factor) = row.get(&k).cloned() else { continue };
                for (pc, pv) in &pivots[&k] {
                    accumulate(&mut row, *pc, &-(pv * &factor));
                }
            }
            pivots.insert(c, row);
        }
        Rref {
            cols: self.cols,
            pivots: pivots.into_iter().collect(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().pivots.len()
    }

    /// Exact rank and a canonical nullspace basis (one vector per free column,
    /// unit entry in that column).
    pub fn rref_nullspace(&self) -> (usize, Vec<Vec<GaussianRational>>) {
        let rref = self.rref();
        let basis = rref.nullspace();
        (rref.pivots.len(), basis)
    }
}

impl Rref {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn pivot_cols(&self) -> Vec<usize> {
        self.pivots.iter().map(|(c, _)| *c).collect()
    }

    pub fn nullspace(&self) -> Vec<Vec<GaussianRational>> {
        let pivot_set: std::collections::BTreeSet<usize> =
            self.pivots.iter().map(|(c, _)| *c).collect();
        let mut out = Vec::new();
        for f in (0..self.cols).filter(|c| !pivot_set.contains(c)) {
            let mut v = vec![GaussianRational::zero(); self.cols];
            v[f] = GaussianRational::one();
            for (pc, row) in &self.pivots {
                if let Some(x) = row.get(&f) {
                    v[*pc] = -x;
                }
            }
            out.push(v);
        }
        out
    }
}

fn accumulate(row: &mut SparseRow, c: usize, v: &GaussianRational) {
    if v.is_zero() {
        return;
    }
    match row.entry(c) {
        std::collections::btree_map::Entry::Vacant(e) => {
            e.insert(v.clone());
        }
        std::collections::btree_map::Entry::Occupied(mut e) => {
            *e.get_mut() += v;
            if e.get().is_zero() {
                e.remove();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn g(n: i64) -> GaussianRational {
        GaussianRational::from_int(n)
    }

    #[test]
    fn proportional_rows() {
        let a = RationalMatrix::from_ints(&[&[1, 2], &[2, 4]]);
        let (rank, ns) = a.rref_nullspace();
        assert_eq!(rank, 1);
        assert_eq!(ns, vec![vec![g(-2), g(1)]]);
    }

    #[test]
    fn identity_has_trivial_nullspace() {
        let (rank, ns) = RationalMatrix::identity(3).rref_nullspace();
        assert_eq!(rank, 3);
        assert!(ns.is_empty());
    }

    #[test]
    fn zero_map() {
        let (rank, ns) = RationalMatrix::new(2, 3).rref_nullspace();
        assert_eq!(rank, 0);
        assert_eq!(ns.len(), 3);
    }

    #[test]
    fn complex_entries() {
        let i = GaussianRational::i();
        let a = RationalMatrix::from_dense(&[vec![g(1), i.clone()], vec![i.clone(), g(-1)]]);
        let (rank, ns) = a.rref_nullspace();
        assert_eq!(rank, 1);
        assert!(a.annihilates(&ns[0]));
    }

    fn arb_matrix() -> impl Strategy<Value = RationalMatrix> {
        (1usize..50, 1usize..80).prop_flat_map(|(r, c)| {
            prop::collection::vec((0..r, 0..c, -3i64..4), 0..(r * c / 6 + 2)).prop_map(
                move |entries| {
                    let mut m = RationalMatrix::new(r, c);
                    for (i, j, v) in entries {
                        m.set(i, j, g(v));
                    }
                    m
                },
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn rank_nullity(a in arb_matrix()) {
            let (rank, ns) = a.rref_nullspace();
            prop_assert_eq!(rank + ns.len(), a.cols());
            for v in &ns {
                prop_assert!(a.annihilates(v));
            }
        }

        #[test]
        fn rref_is_idempotent(a in arb_matrix()) {
            let r1 = a.rref();
            let mut m = RationalMatrix::new(0, a.cols());
            for (_, row) in &r1.pivots {
                m.push_row(row.iter().map(|(c, v)| (*c, v.clone())));
            }
            let r2 = m.rref();
            prop_assert_eq!(r1.pivots, r2.pivots);
        }
    }
}
