//! Dense matrices and a reusable LU factorization.

use faer::linalg::solvers::Solve;
use faer::Mat;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Square, row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_fn<F: Fn(usize, usize) -> f64>(n: usize, f: F) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i))
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, other: &Self, factor: f64) -> Self {
        assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + factor * b)
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `y = A x`, rows in parallel. Each row sums in fixed order.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        self.data
            .par_chunks(self.n)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `x^T A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.matvec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Column `j` as a vector.
    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    pub(crate) fn set_col(&mut self, j: usize, col: &[f64]) {
        for (i, v) in col.iter().enumerate() {
            self.data[i * self.n + j] = *v;
        }
    }

    fn to_faer(&self) -> Mat<f64> {
        Mat::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }
}

/// LU factorization with partial pivoting, computed once and reused.
pub struct LuSolver {
    n: usize,
    lu: faer::linalg::solvers::PartialPivLu<f64>,
}

impl std::fmt::Debug for LuSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LuSolver").field("n", &self.n).finish()
    }
}

impl LuSolver {
    /// Factorizes `a`; fails when a pivot is zero, not finite, or negligible
    /// relative to the largest pivot.
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        if !a.is_finite() {
            return Err(Error::Singular("matrix has non-finite entries".into()));
        }
        let lu = a.to_faer().partial_piv_lu();
        let u = lu.U();
        let mut max_pivot: f64 = 0.0;
        let mut min_pivot = f64::INFINITY;
        for i in 0..a.dim() {
            let p = u[(i, i)].abs();
            if !p.is_finite() {
                return Err(Error::Singular(format!("non-finite pivot at row {i}")));
            }
            max_pivot = max_pivot.max(p);
            min_pivot = min_pivot.min(p);
        }
        if a.dim() > 0 && !(min_pivot > 1e-14 * max_pivot) {
            return Err(Error::Singular(format!(
                "pivot ratio {:.3e} below 1e-14",
                min_pivot / max_pivot
            )));
        }
        Ok(Self { n: a.dim(), lu })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.n);
        let mut b = Mat::from_fn(self.n, 1, |i, _| rhs[i]);
        self.lu.solve_in_place(&mut b);
        (0..self.n).map(|i| b[(i, 0)]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_small_system() {
        let a = DenseMatrix::from_fn(3, |i, j| [[4.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 2.0, 5.0]][i][j]);
        let lu = LuSolver::new(&a).unwrap();
        let x = lu.solve(&[1.0, 2.0, 3.0]);
        let r = a.matvec(&x);
        for (ri, bi) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((ri - bi).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_matrix_rejected() {
        let a = DenseMatrix::from_fn(3, |i, j| (i + j) as f64);
        assert!(matches!(LuSolver::new(&a), Err(Error::Singular(_))));
        let mut b = DenseMatrix::zeros(2);
        b.set(0, 0, f64::NAN);
        assert!(matches!(LuSolver::new(&b), Err(Error::Singular(_))));
    }

    #[test]
    fn transpose_and_scaling() {
        let a = DenseMatrix::from_fn(4, |i, j| (i * 4 + j) as f64);
        let t = a.transpose();
        assert_eq!(t.get(1, 2), a.get(2, 1));
        let s = a.add_scaled(&t, -1.0);
        assert_eq!(s.get(0, 0), 0.0);
        assert_eq!(s.max_abs(), 9.0);
    }
}
