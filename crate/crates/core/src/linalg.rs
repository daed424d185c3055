//! Exact sparse linear algebra over the rationals.
//!
//! Vectors are sparse maps from column index to a nonzero rational. Row
//! spaces are kept in echelon form with the *leading* (smallest) column of
//! each row as its pivot, so callers control which coordinates become pivots
//! by choosing the column order. The canonical representative of a coset
//! `v + span(R)` is the unique element with zero entries at every pivot column.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};

use crate::arith::Rational;
use crate::error::{Error, Result};

pub type SparseVec = BTreeMap<usize, Rational>;

/// `target += factor * source`, dropping entries that cancel.
pub fn axpy(target: &mut SparseVec, factor: &Rational, source: &SparseVec) {
    if factor.is_zero() {
        return;
    }
    for (&c, x) in source {
        let entry = target.entry(c).or_insert_with(Rational::zero);
        *entry += factor * x;
        if entry.is_zero() {
            target.remove(&c);
        }
    }
}

pub fn scale(v: &SparseVec, factor: &Rational) -> SparseVec {
    if factor.is_zero() {
        return SparseVec::new();
    }
    v.iter().map(|(&c, x)| (c, x * factor)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseMatrix {
    pub rows: usize,
    pub cols: usize,
    entries: BTreeMap<(usize, usize), Rational>,
}

impl SparseMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        SparseMatrix {
            rows,
            cols,
            entries: BTreeMap::new(),
        }
    }

    pub fn from_dense(rows: &[Vec<Rational>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut m = SparseMatrix::new(rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols, "ragged matrix");
            for (c, x) in row.iter().enumerate() {
                m.set(r, c, x.clone());
            }
        }
        m
    }

    pub fn from_rows(cols: usize, rows: Vec<SparseVec>) -> Self {
        let mut m = SparseMatrix::new(rows.len(), cols);
        for (r, row) in rows.into_iter().enumerate() {
            for (c, x) in row {
                m.set(r, c, x);
            }
        }
        m
    }

    pub fn set(&mut self, r: usize, c: usize, x: Rational) {
        assert!(r < self.rows && c < self.cols, "index out of bounds");
        if x.is_zero() {
            self.entries.remove(&(r, c));
        } else {
            self.entries.insert((r, c), x);
        }
    }

    pub fn get(&self, r: usize, c: usize) -> Rational {
        self.entries
            .get(&(r, c))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn row(&self, r: usize) -> SparseVec {
        self.entries
            .range((r, 0)..(r + 1, 0))
            .map(|(&(_, c), x)| (c, x.clone()))
            .collect()
    }

    pub fn row_vectors(&self) -> Vec<SparseVec> {
        let mut out = vec![SparseVec::new(); self.rows];
        for (&(r, c), x) in &self.entries {
            out[r].insert(c, x.clone());
        }
        out
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }
}

/// Incrementally built echelon basis of a row space.
///
/// Every stored row is reduced against all earlier pivots and scaled so its
/// leading entry is 1. [`EchelonBasis::into_rref`] finishes the
/// back-substitution.
#[derive(Debug, Clone, Default)]
pub struct EchelonBasis {
    ambient_dim: usize,
    rows: Vec<SparseVec>,
    pivot_row: BTreeMap<usize, usize>,
}

impl EchelonBasis {
    pub fn new(ambient_dim: usize) -> Self {
        EchelonBasis {
            ambient_dim,
            rows: Vec::new(),
            pivot_row: BTreeMap::new(),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_pivot(&self, col: usize) -> bool {
        self.pivot_row.contains_key(&col)
    }

    pub fn pivots(&self) -> impl Iterator<Item = usize> + '_ {
        self.pivot_row.keys().copied()
    }

    pub fn rows(&self) -> &[SparseVec] {
        &self.rows
    }

    /// Eliminates every pivot column from `v`.
    pub fn reduce(&self, v: &mut SparseVec) {
        let mut cursor = 0usize;
        loop {
            let next = v
                .range(cursor..)
                .find(|(c, _)| self.pivot_row.contains_key(c))
                .map(|(&c, x)| (c, x.clone()));
            let Some((c, factor)) = next else { break };
            let row = &self.rows[self.pivot_row[&c]];
            axpy(v, &(-factor), row);
            cursor = c + 1;
        }
    }

    /// Adds `v` to the span. Returns the new echelon row, or `None` when `v`
    /// was already in the span.
    pub fn insert(&mut self, mut v: SparseVec) -> Option<&SparseVec> {
        debug_assert!(v.keys().all(|&c| c < self.ambient_dim));
        self.reduce(&mut v);
        let (&lead, x) = v.iter().next()?;
        let inv = Rational::one() / x;
        let v = scale(&v, &inv);
        self.pivot_row.insert(lead, self.rows.len());
        self.rows.push(v);
        self.rows.last()
    }

    pub fn contains(&self, v: &SparseVec) -> bool {
        let mut v = v.clone();
        self.reduce(&mut v);
        v.is_empty()
    }

    pub fn into_rref(mut self) -> SubspaceBasis {
        let mut order: Vec<(usize, usize)> = self.pivot_row.iter().map(|(&c, &r)| (c, r)).collect();
        order.sort();
        // back-substitute from the last pivot upwards
        for idx in (0..order.len()).rev() {
            let (col, r) = order[idx];
            let pivot_vec = self.rows[r].clone();
            for &(_, other) in order.iter().take(idx) {
                if let Some(f) = self.rows[other].get(&col).cloned() {
                    axpy(&mut self.rows[other], &(-f), &pivot_vec);
                }
            }
        }
        let vectors: Vec<SparseVec> = order
            .iter()
            .map(|&(_, r)| std::mem::take(&mut self.rows[r]))
            .collect();
        let pivot_cols = order.iter().map(|&(c, _)| c).collect();
        SubspaceBasis {
            ambient_dim: self.ambient_dim,
            vectors,
            pivot_cols,
        }
    }
}

/// A subspace in reduced row-echelon form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubspaceBasis {
    pub ambient_dim: usize,
    pub vectors: Vec<SparseVec>,
    pub pivot_cols: Vec<usize>,
}

impl SubspaceBasis {
    pub fn empty(ambient_dim: usize) -> Self {
        SubspaceBasis {
            ambient_dim,
            vectors: Vec::new(),
            pivot_cols: Vec::new(),
        }
    }

    pub fn from_vectors(ambient_dim: usize, vectors: impl IntoIterator<Item = SparseVec>) -> Self {
        let mut e = EchelonBasis::new(ambient_dim);
        for v in vectors {
            e.insert(v);
        }
        e.into_rref()
    }

    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    pub fn reduce(&self, v: &mut SparseVec) {
        for (col, row) in self.pivot_cols.iter().zip(&self.vectors) {
            if let Some(f) = v.get(col).cloned() {
                axpy(v, &(-f), row);
            }
        }
    }

    pub fn contains(&self, v: &SparseVec) -> bool {
        let mut v = v.clone();
        self.reduce(&mut v);
        v.is_empty()
    }

    /// Columns that are not pivots: coordinates of the quotient space.
    pub fn free_cols(&self) -> Vec<usize> {
        let piv: BTreeSet<usize> = self.pivot_cols.iter().copied().collect();
        (0..self.ambient_dim).filter(|c| !piv.contains(c)).collect()
    }
}

pub fn rref(m: &SparseMatrix) -> SubspaceBasis {
    SubspaceBasis::from_vectors(m.cols, m.row_vectors())
}

/// Canonical representative of `v + span(relations)`.
pub fn quotient_coordinates(
    ambient_dim: usize,
    relations: &SubspaceBasis,
    v: &SparseVec,
) -> Result<SparseVec> {
    if relations.ambient_dim != ambient_dim {
        return Err(Error::DimensionMismatch {
            expected: ambient_dim,
            got: relations.ambient_dim,
        });
    }
    if let Some((&c, _)) = v.iter().next_back() {
        if c >= ambient_dim {
            return Err(Error::DimensionMismatch {
                expected: ambient_dim,
                got: c + 1,
            });
        }
    }
    let mut out = v.clone();
    relations.reduce(&mut out);
    Ok(out)
}

/// Basis of `{ v in span(relations) : supp(v) ⊆ keep_cols }`, written in the
/// coordinates of `keep_cols` (listed in increasing order).
pub fn intersect_with_coordinate_subspace(
    relations: &SubspaceBasis,
    keep_cols: &BTreeSet<usize>,
) -> SubspaceBasis {
    // Order the dropped columns first: rows whose leading entry falls among
    // the kept columns are then exactly the ones supported there.
    let dropped: Vec<usize> = (0..relations.ambient_dim)
        .filter(|c| !keep_cols.contains(c))
        .collect();
    let mut perm = vec![0usize; relations.ambient_dim];
    for (i, &c) in dropped.iter().chain(keep_cols.iter()).enumerate() {
        perm[c] = i;
    }
    let offset = dropped.len();
    let mut e = EchelonBasis::new(relations.ambient_dim);
    for v in &relations.vectors {
        e.insert(v.iter().map(|(&c, x)| (perm[c], x.clone())).collect());
    }
    let kept = e
        .rows()
        .iter()
        .filter(|row| row.keys().next().is_some_and(|&c| c >= offset))
        .map(|row| {
            row.iter()
                .map(|(&c, x)| (c - offset, x.clone()))
                .collect::<SparseVec>()
        })
        .collect::<Vec<_>>();
    SubspaceBasis::from_vectors(keep_cols.len(), kept)
}

/// Basis of the right kernel `{ x : m x = 0 }`.
pub fn kernel(m: &SparseMatrix) -> Vec<SparseVec> {
    let r = rref(m);
    r.free_cols()
        .into_iter()
        .map(|f| {
            let mut v = SparseVec::new();
            v.insert(f, Rational::one());
            for (col, row) in r.pivot_cols.iter().zip(&r.vectors) {
                if let Some(x) = row.get(&f) {
                    v.insert(*col, -x.clone());
                }
            }
            v
        })
        .collect()
}

/// Small dense square-or-rectangular matrix, used for representations of
/// finite-dimensional algebra modules.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Rational>,
}

impl DenseMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zero(n, n);
        for i in 0..n {
            m.set(i, i, Rational::one());
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Rational>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(Error::DimensionMismatch {
                expected: c,
                got: bad.len(),
            });
        }
        Ok(DenseMatrix {
            rows: r,
            cols: c,
            data: rows.concat(),
        })
    }

    pub fn get(&self, r: usize, c: usize) -> &Rational {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, x: Rational) {
        self.data[r * self.cols + c] = x;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn mul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = DenseMatrix::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.data[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `self += factor * other`.
    pub fn add_scaled(&mut self, factor: &Rational, other: &DenseMatrix) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        if factor.is_zero() {
            return;
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            if !b.is_zero() {
                *a += factor * b;
            }
        }
    }

    pub fn column(&self, c: usize) -> SparseVec {
        (0..self.rows)
            .filter_map(|r| {
                let x = self.get(r, c);
                (!x.is_zero()).then(|| (r, x.clone()))
            })
            .collect()
    }

    pub fn apply(&self, v: &SparseVec) -> SparseVec {
        let mut out = SparseVec::new();
        for (&c, x) in v {
            axpy(&mut out, x, &self.column(c));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;

    fn m(rows: &[&[i64]]) -> SparseMatrix {
        SparseMatrix::from_dense(
            &rows
                .iter()
                .map(|r| r.iter().map(|&x| rat(x)).collect())
                .collect::<Vec<_>>(),
        )
    }

    fn v(xs: &[i64]) -> SparseVec {
        xs.iter()
            .enumerate()
            .filter(|(_, &x)| x != 0)
            .map(|(i, &x)| (i, rat(x)))
            .collect()
    }

    #[test]
    fn rref_examples() {
        let b = rref(&m(&[&[1, 2], &[2, 4]]));
        assert_eq!(b.rank(), 1);
        assert_eq!(b.vectors, vec![v(&[1, 2])]);

        let b = rref(&m(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]));
        assert_eq!(b.rank(), 3);
        assert_eq!(b.vectors, vec![v(&[1, 0, 0]), v(&[0, 1, 0]), v(&[0, 0, 1])]);

        // row3 = row1 - row2
        let b = rref(&m(&[&[1, 1, 0], &[0, 1, 1], &[1, 0, -1]]));
        assert_eq!(b.rank(), 2);
        assert_eq!(b.pivot_cols, vec![0, 1]);
        assert_eq!(b.vectors, vec![v(&[1, 0, -1]), v(&[0, 1, 1])]);

        assert_eq!(rref(&SparseMatrix::new(0, 4)).rank(), 0);
    }

    #[test]
    fn quotient_examples() {
        let none = SubspaceBasis::empty(2);
        assert_eq!(
            quotient_coordinates(2, &none, &v(&[3, 1])).unwrap(),
            v(&[3, 1])
        );
        let kill = SubspaceBasis::from_vectors(2, [v(&[1, 0])]);
        assert_eq!(
            quotient_coordinates(2, &kill, &v(&[5, 2])).unwrap(),
            v(&[0, 2])
        );
        let diag = SubspaceBasis::from_vectors(2, [v(&[1, 1])]);
        assert_eq!(
            quotient_coordinates(2, &diag, &v(&[2, 0])).unwrap(),
            v(&[0, -2])
        );
        assert!(quotient_coordinates(3, &diag, &v(&[1])).is_err());
        assert!(quotient_coordinates(2, &diag, &v(&[0, 0, 1])).is_err());
    }

    #[test]
    fn intersection_examples() {
        let keep0: BTreeSet<usize> = [0].into();
        let full = SubspaceBasis::from_vectors(2, [v(&[1, 0]), v(&[0, 1])]);
        assert_eq!(
            intersect_with_coordinate_subspace(&full, &keep0).vectors,
            vec![v(&[1])]
        );
        let diag = SubspaceBasis::from_vectors(2, [v(&[1, 1])]);
        assert_eq!(intersect_with_coordinate_subspace(&diag, &keep0).rank(), 0);
        let two = SubspaceBasis::from_vectors(3, [v(&[1, 1, 0]), v(&[0, 1, 1])]);
        let keep02: BTreeSet<usize> = [0, 2].into();
        assert_eq!(
            intersect_with_coordinate_subspace(&two, &keep02).vectors,
            vec![v(&[1, -1])]
        );
    }

    #[test]
    fn kernel_of_rank_one() {
        let k = kernel(&m(&[&[1, 2], &[2, 4]]));
        assert_eq!(k, vec![v(&[-2, 1])]);
    }
}
