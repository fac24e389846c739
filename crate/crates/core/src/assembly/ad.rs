//! Forward-mode automatic differentiation on vectors with sparse Jacobians.

use crate::sparse::{add, matvec, mul, scale, scale_rows, sub, zeros, SpMat, Triplets};
use std::ops::Range;

/// A vector of values together with its Jacobian with respect to the global
/// unknowns.
#[derive(Debug, Clone)]
pub struct Ad {
    pub val: Vec<f64>,
    pub jac: SpMat,
}

impl Ad {
    /// The unknowns in `range` of a global vector `x` as independent variables.
    pub fn variable(x: &[f64], range: Range<usize>) -> Ad {
        let mut t = Triplets::new(range.len(), x.len());
        for (i, j) in range.clone().enumerate() {
            t.push(i, j, 1.0);
        }
        Ad { val: x[range].to_vec(), jac: t.into_csr() }
    }

    pub fn constant(val: Vec<f64>, num_dofs: usize) -> Ad {
        let n = val.len();
        Ad { val, jac: zeros(n, num_dofs) }
    }

    pub fn len(&self) -> usize {
        self.val.len()
    }

    pub fn is_empty(&self) -> bool {
        self.val.is_empty()
    }

    pub fn num_dofs(&self) -> usize {
        self.jac.cols()
    }

    /// Left multiplication by a constant matrix.
    pub fn lmul(&self, m: &SpMat) -> Ad {
        Ad { val: matvec(m, &self.val), jac: mul(m, &self.jac) }
    }

    pub fn add(&self, o: &Ad) -> Ad {
        Ad { val: self.val.iter().zip(&o.val).map(|(a, b)| a + b).collect(), jac: add(&self.jac, &o.jac) }
    }

    pub fn sub(&self, o: &Ad) -> Ad {
        Ad { val: self.val.iter().zip(&o.val).map(|(a, b)| a - b).collect(), jac: sub(&self.jac, &o.jac) }
    }

    pub fn add_const(&self, c: &[f64]) -> Ad {
        Ad { val: self.val.iter().zip(c).map(|(a, b)| a + b).collect(), jac: self.jac.clone() }
    }

    pub fn scale(&self, s: f64) -> Ad {
        Ad { val: self.val.iter().map(|a| a * s).collect(), jac: scale(&self.jac, s) }
    }

    /// Element-wise product with constants.
    pub fn mul_const(&self, c: &[f64]) -> Ad {
        Ad { val: self.val.iter().zip(c).map(|(a, b)| a * b).collect(), jac: scale_rows(&self.jac, c) }
    }

    /// Element-wise product.
    pub fn mul(&self, o: &Ad) -> Ad {
        let val = self.val.iter().zip(&o.val).map(|(a, b)| a * b).collect();
        Ad { val, jac: add(&scale_rows(&self.jac, &o.val), &scale_rows(&o.jac, &self.val)) }
    }

    /// Element-wise quotient.
    pub fn div(&self, o: &Ad) -> Ad {
        let inv: Vec<f64> = o.val.iter().map(|b| 1.0 / b).collect();
        let val: Vec<f64> = self.val.iter().zip(&inv).map(|(a, b)| a * b).collect();
        let d_o: Vec<f64> = val.iter().zip(&inv).map(|(q, b)| -q * b).collect();
        Ad { val, jac: add(&scale_rows(&self.jac, &inv), &scale_rows(&o.jac, &d_o)) }
    }

    /// Element-wise map with derivative.
    pub fn map(&self, f: impl Fn(f64) -> (f64, f64)) -> Ad {
        let (val, d): (Vec<f64>, Vec<f64>) = self.val.iter().map(|&a| f(a)).unzip();
        Ad { val, jac: scale_rows(&self.jac, &d) }
    }

    pub fn exp(&self) -> Ad {
        self.map(|a| {
            let e = a.exp();
            (e, e)
        })
    }

    pub fn recip(&self) -> Ad {
        self.map(|a| (1.0 / a, -1.0 / (a * a)))
    }
}
