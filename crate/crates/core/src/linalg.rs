//! Exact sparse linear algebra over the rationals: reduced row echelon form,
//! kernels, and a small subspace calculus (sum, intersection, equality,
//! Gram-orthogonal complements).
//!
//! Everything here is exact; subspace comparisons are identities of canonical
//! RREF matrices, never tolerance checks. Forward elimination is fraction-free
//! (multiply-through cross elimination); rows are normalized only when pivots
//! are finalized.

use crate::scalar::Scalar;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LinalgError {
    #[error("ambient dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("Gram restriction to the subspace is degenerate (rank {rank} < dim {dim})")]
    DegenerateGram { rank: usize, dim: usize },
}

/// Sparse row vector; absent keys are zero, stored values are nonzero.
pub type SparseRow = BTreeMap<usize, Scalar>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseMatrix {
    rows: Vec<SparseRow>,
    cols: usize,
}

impl SparseMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        SparseMatrix {
            rows: vec![SparseRow::new(); rows],
            cols,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = SparseMatrix::zero(n, n);
        for i in 0..n {
            m.set(i, i, Scalar::one());
        }
        m
    }

    pub fn from_rows(cols: usize, rows: Vec<SparseRow>) -> Self {
        let mut m = SparseMatrix { rows, cols };
        for row in &mut m.rows {
            row.retain(|&j, v| {
                assert!(j < cols, "column index out of bounds");
                !v.is_zero()
            });
        }
        m
    }

    /// Dense integer constructor, mostly for tests.
    pub fn from_dense_int(rows: &[&[i64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut m = SparseMatrix::zero(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged rows");
            for (j, &v) in r.iter().enumerate() {
                if v != 0 {
                    m.set(i, j, Scalar::from_int(v));
                }
            }
        }
        m
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &SparseRow {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[SparseRow] {
        &self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> Scalar {
        self.rows[i].get(&j).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn set(&mut self, i: usize, j: usize, v: Scalar) {
        assert!(i < self.rows.len() && j < self.cols, "index out of bounds");
        if v.is_zero() {
            self.rows[i].remove(&j);
        } else {
            self.rows[i].insert(j, v);
        }
    }

    pub fn push_row(&mut self, row: SparseRow) {
        debug_assert!(row.keys().all(|&j| j < self.cols));
        debug_assert!(row.values().all(|v| !v.is_zero()));
        self.rows.push(row);
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut t = SparseMatrix::zero(self.cols, self.rows.len());
        for (i, row) in self.rows.iter().enumerate() {
            for (&j, v) in row {
                t.rows[j].insert(i, v.clone());
            }
        }
        t
    }

    pub fn mul(&self, rhs: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.cols, rhs.rows.len(), "inner dimension mismatch");
        let mut out = SparseMatrix::zero(self.rows.len(), rhs.cols);
        for (i, row) in self.rows.iter().enumerate() {
            let acc = &mut out.rows[i];
            for (&k, v) in row {
                for (&j, w) in &rhs.rows[k] {
                    let entry = acc.entry(j).or_insert_with(Scalar::zero);
                    *entry += v * w;
                }
            }
            acc.retain(|_, v| !v.is_zero());
        }
        out
    }

    /// Vertical stack; column counts must agree.
    pub fn stack(&self, below: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.cols, below.cols, "column count mismatch");
        let mut rows = self.rows.clone();
        rows.extend(below.rows.iter().cloned());
        SparseMatrix { rows, cols: self.cols }
    }

    pub fn rank(&self) -> usize {
        self.rref().0.n_rows()
    }

    /// Unique reduced row echelon form together with the pivot columns.
    /// Zero rows are dropped.
    pub fn rref(&self) -> (SparseMatrix, Vec<usize>) {
        let mut rows: Vec<SparseRow> = self.rows.iter().filter(|r| !r.is_empty()).cloned().collect();
        let mut pivots: Vec<usize> = Vec::new();
        let mut done = 0; // rows above `done` hold finalized pivots

        while done < rows.len() {
            // Next pivot: smallest leading column among remaining rows; among
            // those, the sparsest row to limit fill-in.
            let mut best: Option<(usize, usize, usize)> = None; // (col, nnz, row)
            for (i, row) in rows.iter().enumerate().skip(done) {
                let (&lead, _) = row.iter().next().expect("empty rows are pruned");
                let nnz = row.len();
                let cand = (lead, nnz, i);
                if best.map_or(true, |b| cand < b) {
                    best = Some(cand);
                }
            }
            let (col, _, r) = best.expect("nonempty remainder");
            rows.swap(done, r);

            // Fraction-free elimination below: row_j := p·row_j − a·row_p.
            let pivot_row = rows[done].clone();
            let p = pivot_row[&col].clone();
            for row in rows.iter_mut().skip(done + 1) {
                if let Some(a) = row.get(&col).cloned() {
                    scale_row(row, &p);
                    axpy(row, &Scalar::zero() - &a, &pivot_row);
                }
            }
            rows.retain_from(done + 1);
            pivots.push(col);
            done += 1;
        }

        // Pivot finalization: normalize leading entries to 1, then eliminate
        // above each pivot.
        for i in 0..rows.len() {
            let lead = pivots[i];
            let inv = rows[i][&lead].recip();
            scale_row(&mut rows[i], &inv);
            let pivot_row = rows[i].clone();
            for j in 0..i {
                if let Some(a) = rows[j].get(&lead).cloned() {
                    axpy(&mut rows[j], &Scalar::zero() - &a, &pivot_row);
                }
            }
        }

        (SparseMatrix { rows, cols: self.cols }, pivots)
    }

    /// Kernel as a canonical subspace of the column-index space.
    pub fn kernel(&self) -> Subspace {
        let (r, pivots) = self.rref();
        let pivot_set: BTreeMap<usize, usize> =
            pivots.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let mut basis: Vec<SparseRow> = Vec::new();
        for f in 0..self.cols {
            if pivot_set.contains_key(&f) {
                continue;
            }
            let mut v = SparseRow::new();
            v.insert(f, Scalar::one());
            for (&p, &i) in &pivot_set {
                if let Some(c) = r.rows[i].get(&f) {
                    v.insert(p, -c);
                }
            }
            basis.push(v);
        }
        Subspace::from_sparse_rows(self.cols, basis)
    }

    /// One exact solution of `self · x = b`, if any (free variables set to 0).
    pub fn solve(&self, b: &SparseRow) -> Option<Vec<Scalar>> {
        let mut aug = self.clone();
        aug.cols += 1;
        for (i, row) in aug.rows.iter_mut().enumerate() {
            if let Some(v) = b.get(&i) {
                row.insert(self.cols, v.clone());
            }
        }
        let (r, pivots) = aug.rref();
        if pivots.contains(&self.cols) {
            return None; // inconsistent
        }
        let mut x = vec![Scalar::zero(); self.cols];
        for (i, &p) in pivots.iter().enumerate() {
            if let Some(v) = r.rows[i].get(&self.cols) {
                x[p] = v.clone();
            }
        }
        Some(x)
    }
}

trait RetainFrom {
    fn retain_from(&mut self, start: usize);
}

impl RetainFrom for Vec<SparseRow> {
    /// Drop rows at positions ≥ `start` that became zero.
    fn retain_from(&mut self, start: usize) {
        let mut i = start;
        while i < self.len() {
            if self[i].is_empty() {
                self.swap_remove(i);
            } else {
                i += 1;
            }
        }
    }
}

fn scale_row(row: &mut SparseRow, c: &Scalar) {
    debug_assert!(!c.is_zero());
    if c.is_one() {
        return;
    }
    for v in row.values_mut() {
        *v *= c;
    }
}

/// row += c · other
fn axpy(row: &mut SparseRow, c: &Scalar, other: &SparseRow) {
    if c.is_zero() {
        return;
    }
    for (&j, v) in other {
        let entry = row.entry(j).or_insert_with(Scalar::zero);
        *entry += c * v;
        if entry.is_zero() {
            row.remove(&j);
        }
    }
}

/// Exact row-reduced basis of a subspace of ℚ^ambient.
///
/// The basis matrix is in RREF with strictly increasing pivots, which makes
/// equality of subspaces literal equality of matrices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subspace {
    ambient: usize,
    basis: SparseMatrix,
    pivots: Vec<usize>,
}

impl Subspace {
    pub fn zero_space(ambient: usize) -> Self {
        Subspace {
            ambient,
            basis: SparseMatrix::zero(0, ambient),
            pivots: Vec::new(),
        }
    }

    pub fn full(ambient: usize) -> Self {
        Subspace {
            ambient,
            basis: SparseMatrix::identity(ambient),
            pivots: (0..ambient).collect(),
        }
    }

    pub fn from_sparse_rows(ambient: usize, rows: Vec<SparseRow>) -> Self {
        let (basis, pivots) = SparseMatrix::from_rows(ambient, rows).rref();
        Subspace { ambient, basis, pivots }
    }

    pub fn from_matrix(m: &SparseMatrix) -> Self {
        let (basis, pivots) = m.rref();
        Subspace {
            ambient: m.n_cols(),
            basis,
            pivots,
        }
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.n_rows()
    }

    pub fn basis(&self) -> &SparseMatrix {
        &self.basis
    }

    pub fn basis_rows(&self) -> &[SparseRow] {
        self.basis.rows()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    /// Membership, by exact reduction against the RREF basis.
    pub fn contains(&self, v: &SparseRow) -> bool {
        let mut rem = v.clone();
        for (i, &p) in self.pivots.iter().enumerate() {
            if let Some(c) = rem.get(&p).cloned() {
                axpy(&mut rem, &(-c), self.basis.row(i));
            }
        }
        rem.is_empty()
    }

    pub fn contains_space(&self, other: &Subspace) -> bool {
        other.basis_rows().iter().all(|r| self.contains(r))
    }

    pub fn sum(&self, other: &Subspace) -> Result<Subspace, LinalgError> {
        self.check_ambient(other)?;
        Ok(Subspace::from_matrix(&self.basis.stack(&other.basis)))
    }

    /// Intersection by the Zassenhaus block trick.
    pub fn intersect(&self, other: &Subspace) -> Result<Subspace, LinalgError> {
        self.check_ambient(other)?;
        let n = self.ambient;
        let mut block = SparseMatrix::zero(0, 2 * n);
        for row in self.basis_rows() {
            let mut r = SparseRow::new();
            for (&j, v) in row {
                r.insert(j, v.clone());
                r.insert(n + j, v.clone());
            }
            block.push_row(r);
        }
        for row in other.basis_rows() {
            block.push_row(row.clone());
        }
        let (reduced, _) = block.rref();
        let mut rows = Vec::new();
        for row in reduced.rows() {
            let (&lead, _) = row.iter().next().expect("no zero rows in rref");
            if lead >= n {
                let shifted: SparseRow = row.iter().map(|(&j, v)| (j - n, v.clone())).collect();
                rows.push(shifted);
            }
        }
        Ok(Subspace::from_sparse_rows(n, rows))
    }

    pub fn equals(&self, other: &Subspace) -> bool {
        self.ambient == other.ambient && self.basis == other.basis
    }

    /// `{x ∈ within : gram(x, a) = 0}` for every a in `self`.
    ///
    /// Requires the restriction of `gram` to `self` to be nondegenerate, so
    /// that when `self ⊆ within` the result is a genuine direct complement.
    pub fn complement_in(
        &self,
        within: &Subspace,
        gram: &SparseMatrix,
    ) -> Result<Subspace, LinalgError> {
        self.check_ambient(within)?;
        if gram.n_rows() != self.ambient || gram.n_cols() != self.ambient {
            return Err(LinalgError::DimensionMismatch(gram.n_rows(), self.ambient));
        }
        let a_gram_at = self.basis.mul(gram).mul(&self.basis.transpose());
        let rank = a_gram_at.rank();
        if rank < self.dim() {
            return Err(LinalgError::DegenerateGram { rank, dim: self.dim() });
        }
        // x = tᵀ·W with W·G·Aᵀ·t-condition: kernel of (W·G·Aᵀ)ᵀ.
        let m = within.basis.mul(gram).mul(&self.basis.transpose());
        let t = m.transpose().kernel();
        let rows = t
            .basis_rows()
            .iter()
            .map(|trow| {
                let mut x = SparseRow::new();
                for (&i, c) in trow {
                    axpy(&mut x, c, within.basis.row(i));
                }
                x
            })
            .collect();
        Ok(Subspace::from_sparse_rows(self.ambient, rows))
    }

    fn check_ambient(&self, other: &Subspace) -> Result<(), LinalgError> {
        if self.ambient != other.ambient {
            return Err(LinalgError::DimensionMismatch(self.ambient, other.ambient));
        }
        Ok(())
    }
}

/// Dense row helper: turns a coordinate vector into a sparse row.
pub fn sparse_row_from_dense(v: &[Scalar]) -> SparseRow {
    v.iter()
        .enumerate()
        .filter(|(_, x)| !x.is_zero())
        .map(|(j, x)| (j, x.clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sub(ambient: usize, rows: &[&[i64]]) -> Subspace {
        let s = Subspace::from_matrix(&SparseMatrix::from_dense_int(rows));
        assert_eq!(s.ambient(), ambient);
        s
    }

    #[test]
    fn rref_rank_one() {
        let m = SparseMatrix::from_dense_int(&[&[2, 4], &[1, 2]]);
        let (r, pivots) = m.rref();
        assert_eq!(r, SparseMatrix::from_dense_int(&[&[1, 2]]));
        assert_eq!(pivots, vec![0]);
    }

    #[test]
    fn rref_identity_and_zero() {
        let id = SparseMatrix::identity(3);
        assert_eq!(id.rref().0, id);
        let z = SparseMatrix::zero(2, 2);
        assert_eq!(z.rref().0.n_rows(), 0);
    }

    #[test]
    fn kernel_examples() {
        let m = SparseMatrix::from_dense_int(&[&[1, -1]]);
        let k = m.kernel();
        assert_eq!(k.dim(), 1);
        assert!(k.contains(&sparse_row_from_dense(&[Scalar::one(), Scalar::one()])));

        assert!(SparseMatrix::identity(4).kernel().is_zero());
        assert_eq!(SparseMatrix::zero(3, 3).kernel().dim(), 3);
    }

    #[test]
    fn subspace_equality_scaling() {
        let a = sub(2, &[&[1, 0]]);
        let b = sub(2, &[&[2, 0]]);
        assert!(a.equals(&b));
    }

    #[test]
    fn intersect_example() {
        let a = sub(2, &[&[1, 0], &[0, 1]]);
        let b = sub(2, &[&[1, 1]]);
        let i = a.intersect(&b).unwrap();
        assert!(i.equals(&b));
    }

    #[test]
    fn complement_euclidean() {
        let a = sub(2, &[&[1, 0]]);
        let full = Subspace::full(2);
        let c = a.complement_in(&full, &SparseMatrix::identity(2)).unwrap();
        assert!(c.equals(&sub(2, &[&[0, 1]])));
    }

    #[test]
    fn complement_degenerate_gram_rejected() {
        let a = sub(2, &[&[1, 0]]);
        let full = Subspace::full(2);
        // gram(e1, e1) = 0: restriction to a is degenerate.
        let gram = SparseMatrix::from_dense_int(&[&[0, 1], &[1, 0]]);
        assert!(matches!(
            a.complement_in(&full, &gram),
            Err(LinalgError::DegenerateGram { .. })
        ));
    }

    #[test]
    fn solve_consistent_and_inconsistent() {
        let m = SparseMatrix::from_dense_int(&[&[1, 2], &[0, 1]]);
        let mut b = SparseRow::new();
        b.insert(0, Scalar::from_int(5));
        b.insert(1, Scalar::from_int(2));
        let x = m.solve(&b).unwrap();
        assert_eq!(x, vec![Scalar::from_int(1), Scalar::from_int(2)]);

        let singular = SparseMatrix::from_dense_int(&[&[1, 1], &[1, 1]]);
        let mut b2 = SparseRow::new();
        b2.insert(0, Scalar::one());
        b2.insert(1, Scalar::from_int(2));
        assert!(singular.solve(&b2).is_none());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_matrix(max_dim: usize) -> impl Strategy<Value = SparseMatrix> {
            (1..=max_dim, 1..=max_dim).prop_flat_map(|(r, c)| {
                proptest::collection::vec(-5i64..=5, r * c).prop_map(move |vals| {
                    let rows: Vec<Vec<i64>> =
                        vals.chunks(c).map(|ch| ch.to_vec()).collect();
                    let refs: Vec<&[i64]> = rows.iter().map(|r| r.as_slice()).collect();
                    SparseMatrix::from_dense_int(&refs)
                })
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn rref_idempotent(m in arb_matrix(5)) {
                let (r, _) = m.rref();
                prop_assert_eq!(r.rref().0, r);
            }

            /// rref is a function of the row space only: left-multiplying by an
            /// invertible matrix does not change it.
            #[test]
            fn rref_row_space_invariant(m in arb_matrix(4), seed in 0u64..1000) {
                use rand::{Rng, SeedableRng};
                let n = m.n_rows();
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                // Random invertible P: product of elementary row operations.
                let mut p = SparseMatrix::identity(n);
                for _ in 0..2 * n {
                    let i = rng.gen_range(0..n);
                    let j = rng.gen_range(0..n);
                    if i != j {
                        let c = Scalar::from_int(rng.gen_range(-3i64..=3));
                        let row_j = p.row(j).clone();
                        axpy(&mut p.rows[i], &c, &row_j);
                    } else {
                        let c = Scalar::from_int(*[1i64, -1, 2, 3].get(rng.gen_range(0..4)).unwrap());
                        scale_row(&mut p.rows[i], &c);
                    }
                }
                prop_assert_eq!(p.rank(), n);
                prop_assert_eq!(p.mul(&m).rref().0, m.rref().0);
            }

            #[test]
            fn rank_nullity(m in arb_matrix(5)) {
                prop_assert_eq!(m.kernel().dim() + m.rank(), m.n_cols());
            }

            #[test]
            fn equals_iff_sum_and_intersection(a in arb_matrix(4), b in arb_matrix(4)) {
                prop_assume!(a.n_cols() == b.n_cols());
                let sa = Subspace::from_matrix(&a);
                let sb = Subspace::from_matrix(&b);
                let same = sa.equals(&sb);
                let via_ops = sa.sum(&sb).unwrap().equals(&sa)
                    && sa.intersect(&sb).unwrap().equals(&sa);
                prop_assert_eq!(same, via_ops);
            }

            #[test]
            fn complement_dimension(a in arb_matrix(4)) {
                let n = a.n_cols();
                let sa = Subspace::from_matrix(&a);
                let full = Subspace::full(n);
                let c = sa.complement_in(&full, &SparseMatrix::identity(n)).unwrap();
                prop_assert_eq!(c.dim(), n - sa.dim());
            }
        }
    }
}
