//! Direct sparse linear solves.

use crate::error::{Error, Result};
use crate::sparse::{matvec, norm2, SpMat};
use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

/// Solutions whose size exceeds the data by this factor relative to the
/// matrix scale are reported as numerically singular.
const SINGULAR_AMPLIFICATION: f64 = 1e13;

/// Solve `a x = b` by sparse LU with partial pivoting.
pub fn linear_solve(a: &SpMat, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.rows() {
        return Err(Error::LinearSolve(format!("system is {}x{} with a right-hand side of length {}", a.rows(), a.cols(), b.len())));
    }
    Factorization::new(a)?.solve(b)
}

/// A sparse LU factorization for repeated solves with one matrix.
pub struct Factorization {
    n: usize,
    amax: f64,
    lu: Option<faer::sparse::linalg::solvers::Lu<usize, f64>>,
}

impl Factorization {
    pub fn new(a: &SpMat) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::LinearSolve(format!("system is {}x{}, not square", a.rows(), a.cols())));
        }
        if n == 0 {
            return Ok(Factorization { n, amax: 0.0, lu: None });
        }
        let mut row_nnz = vec![0usize; n];
        let mut col_nnz = vec![0usize; n];
        let mut trips = Vec::with_capacity(a.nnz());
        let mut amax: f64 = 0.0;
        for (v, (i, j)) in a.iter() {
            if *v != 0.0 {
                if !v.is_finite() {
                    return Err(Error::LinearSolve(format!("non-finite matrix entry at ({i}, {j})")));
                }
                row_nnz[i] += 1;
                col_nnz[j] += 1;
                amax = amax.max(v.abs());
                trips.push(Triplet::new(i, j, *v));
            }
        }
        if let Some(i) = row_nnz.iter().position(|&c| c == 0) {
            return Err(Error::LinearSolve(format!("structurally singular: row {i} is empty")));
        }
        if let Some(j) = col_nnz.iter().position(|&c| c == 0) {
            return Err(Error::LinearSolve(format!("structurally singular: column {j} is empty")));
        }
        let m = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trips)
            .map_err(|e| Error::LinearSolve(format!("matrix construction failed: {e:?}")))?;
        let lu = m.sp_lu().map_err(|e| Error::LinearSolve(format!("factorization failed: {e:?}")))?;
        Ok(Factorization { n, amax, lu: Some(lu) })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::LinearSolve(format!("right-hand side has length {}, expected {n}", b.len())));
        }
        let Some(lu) = &self.lu else { return Ok(vec![]) };
        let mut x = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
        lu.solve_in_place(x.as_mut());
        let x: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
        let bnorm = b.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let (imax, xmax) = x.iter().enumerate().fold((0, 0.0_f64), |(im, m), (i, v)| {
            if !v.is_finite() || v.abs() > m {
                (i, if v.is_finite() { v.abs() } else { f64::INFINITY })
            } else {
                (im, m)
            }
        });
        if !xmax.is_finite() || (bnorm > 0.0 && xmax * self.amax > SINGULAR_AMPLIFICATION * bnorm) {
            return Err(Error::LinearSolve(format!(
                "numerically singular matrix: zero pivot near unknown {imax} (solution amplification {:.1e})",
                xmax * self.amax / bnorm.max(f64::MIN_POSITIVE)
            )));
        }
        Ok(x)
    }
}

/// Relative residual `|a x - b| / |b|`.
pub fn relative_residual(a: &SpMat, x: &[f64], b: &[f64]) -> f64 {
    let r: Vec<f64> = matvec(a, x).iter().zip(b).map(|(p, q)| p - q).collect();
    norm2(&r) / norm2(b).max(f64::MIN_POSITIVE)
}
