//! Thin helpers over faer's compressed-column matrices.

use std::ops::{AddAssign, Mul};

use faer::linalg::solvers::SolveCore;
use faer::sparse::linalg::solvers::Llt;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Conj, MatMut, Side};
use num_complex::Complex64;

pub type SpR = SparseColMat<usize, f64>;
pub type SpC = SparseColMat<usize, Complex64>;

pub trait Conjugate: Copy {
    fn conjugate(self) -> Self;
}

impl Conjugate for f64 {
    fn conjugate(self) -> Self {
        self
    }
}

impl Conjugate for Complex64 {
    fn conjugate(self) -> Self {
        self.conj()
    }
}

pub trait Zero: Copy {
    fn zero() -> Self;
}

impl Zero for f64 {
    fn zero() -> Self {
        0.0
    }
}

impl Zero for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
}

pub fn from_triplets<T>(nrows: usize, ncols: usize, t: &[(usize, usize, T)]) -> SparseColMat<usize, T>
where
    T: faer::traits::ComplexField + Copy,
{
    let trip: Vec<Triplet<usize, usize, T>> = t.iter().map(|&(i, j, v)| Triplet::new(i, j, v)).collect();
    SparseColMat::try_new_from_triplets(nrows, ncols, &trip).expect("triplet indices in range")
}

/// `A x`.
pub fn apply<T, V>(a: &SparseColMat<usize, T>, x: &[V]) -> Vec<V>
where
    T: Copy,
    V: Zero + AddAssign + Mul<T, Output = V>,
{
    assert_eq!(x.len(), a.ncols());
    let mut y = vec![V::zero(); a.nrows()];
    let cp = a.symbolic().col_ptr();
    let ri = a.symbolic().row_idx();
    let val = a.val();
    for j in 0..a.ncols() {
        let xj = x[j];
        for p in cp[j]..cp[j + 1] {
            y[ri[p]] += xj * val[p];
        }
    }
    y
}

/// `Aᴴ x`.
pub fn apply_adjoint<T, V>(a: &SparseColMat<usize, T>, x: &[V]) -> Vec<V>
where
    T: Conjugate,
    V: Zero + AddAssign + Mul<T, Output = V>,
{
    assert_eq!(x.len(), a.nrows());
    let mut y = vec![V::zero(); a.ncols()];
    let cp = a.symbolic().col_ptr();
    let ri = a.symbolic().row_idx();
    let val = a.val();
    for (j, yj) in y.iter_mut().enumerate() {
        let mut acc = V::zero();
        for p in cp[j]..cp[j + 1] {
            acc += x[ri[p]] * val[p].conjugate();
        }
        *yj = acc;
    }
    y
}

/// Entries as `(row, col, value)`.
pub fn triplets<T: Copy>(a: &SparseColMat<usize, T>) -> Vec<(usize, usize, T)> {
    let cp = a.symbolic().col_ptr();
    let ri = a.symbolic().row_idx();
    let val = a.val();
    let mut out = Vec::with_capacity(val.len());
    for j in 0..a.ncols() {
        for p in cp[j]..cp[j + 1] {
            out.push((ri[p], j, val[p]));
        }
    }
    out
}

/// Principal submatrix on `keep` (new index = position in `keep`), plus the
/// block of kept rows against dropped columns.
pub fn split_block<T>(a: &SparseColMat<usize, T>, keep: &[bool]) -> (SparseColMat<usize, T>, SparseColMat<usize, T>)
where
    T: faer::traits::ComplexField + Copy,
{
    let n = a.nrows();
    let mut kept = vec![usize::MAX; n];
    let mut dropped = vec![usize::MAX; n];
    let (mut nk, mut nd) = (0, 0);
    for i in 0..n {
        if keep[i] {
            kept[i] = nk;
            nk += 1;
        } else {
            dropped[i] = nd;
            nd += 1;
        }
    }
    let mut ii = Vec::new();
    let mut ib = Vec::new();
    for (i, j, v) in triplets(a) {
        if !keep[i] {
            continue;
        }
        if keep[j] {
            ii.push((kept[i], kept[j], v));
        } else {
            ib.push((kept[i], dropped[j], v));
        }
    }
    (from_triplets(nk, nk, &ii), from_triplets(nk, nd, &ib))
}

/// Sparse Cholesky factor reused across right-hand sides.
pub struct Cholesky<T: faer::traits::ComplexField> {
    llt: Llt<usize, T>,
    n: usize,
}

impl<T> Cholesky<T>
where
    T: faer::traits::ComplexField + Copy,
{
    pub fn new(a: &SparseColMat<usize, T>) -> Option<Self> {
        let llt = a.sp_cholesky(Side::Lower).ok()?;
        Some(Cholesky { llt, n: a.nrows() })
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        assert_eq!(b.len(), self.n);
        let m = MatMut::from_column_major_slice_mut(b, self.n, 1);
        self.llt.solve_in_place_with_conj(Conj::No, m);
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Solves for every column of a column-major block in place.
    pub fn solve_block_in_place(&self, b: &mut [T], ncols: usize) {
        let m = MatMut::from_column_major_slice_mut(b, self.n, ncols);
        self.llt.solve_in_place_with_conj(Conj::No, m);
    }

    pub fn dim(&self) -> usize {
        self.n
    }
}
