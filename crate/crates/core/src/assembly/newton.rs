//! Newton iteration with per-block scaled convergence checks, a
//! classification stability check for semi-smooth problems, and a
//! finite-difference Jacobian diagnostic.

use super::linsolve::linear_solve;
use crate::error::{Error, Result};
use crate::sparse::{matvec, norm2, SpMat};
use std::fmt;
use std::io::Write;
use std::ops::Range;

/// A nonlinear system `r(x) = 0`.
pub trait NonlinearProblem {
    fn residual_jacobian(&mut self, x: &[f64]) -> Result<(Vec<f64>, SpMat)>;

    /// Residual only; defaults to dropping the Jacobian.
    fn residual(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.residual_jacobian(x)?.0)
    }

    /// Named residual blocks; the default is a single block.
    fn blocks(&self, n: usize) -> Vec<(String, Range<usize>)> {
        vec![("all".into(), 0..n)]
    }

    /// Scale of each block's residual at the current iterate; unit by default.
    fn block_scales(&self, blocks: &[(String, Range<usize>)], _x: &[f64], _r: &[f64], _jac: &SpMat) -> Vec<f64> {
        vec![1.0; blocks.len()]
    }

    /// Active-set classification at `x`, for semi-smooth problems.
    fn classification(&self, _x: &[f64]) -> Option<Vec<u8>> {
        None
    }
}

#[derive(Debug, Clone)]
pub struct NewtonConfig {
    pub tol: f64,
    pub max_iterations: usize,
    /// Iterations without improvement of the best residual before giving up.
    pub patience: usize,
    /// Finite-difference step for the optional Jacobian check at every iterate.
    pub fd_check: Option<f64>,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig { tol: 1e-6, max_iterations: 30, patience: 8, fd_check: None }
    }
}

#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Scaled residual norm per block, in block order.
    pub block_norms: Vec<f64>,
    pub step_norm: f64,
    pub classification_changes: Option<usize>,
    pub fd_error: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct NewtonReport {
    pub block_names: Vec<String>,
    pub history: Vec<IterationRecord>,
    pub iterations: usize,
    pub converged: bool,
}

impl NewtonReport {
    pub fn final_residual(&self) -> f64 {
        self.history.last().map_or(f64::NAN, |r| r.block_norms.iter().fold(0.0, |m: f64, v| m.max(*v)))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "iteration")?;
        for b in &self.block_names {
            write!(w, ",{b}")?;
        }
        writeln!(w, ",step_norm,classification_changes,fd_error")?;
        for r in &self.history {
            write!(w, "{}", r.iteration)?;
            for v in &r.block_norms {
                write!(w, ",{v:.6e}")?;
            }
            let opt = |o: Option<String>| o.unwrap_or_default();
            writeln!(
                w,
                ",{:.6e},{},{}",
                r.step_norm,
                opt(r.classification_changes.map(|c| c.to_string())),
                opt(r.fd_error.map(|e| format!("{e:.3e}")))
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NewtonFailureReason {
    SingularJacobian(String),
    Diverged,
    MaxIterations,
    NonFinite,
}

#[derive(Debug, Clone)]
pub struct NewtonFailure {
    pub reason: NewtonFailureReason,
    pub report: NewtonReport,
}

impl fmt::Display for NewtonFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match &self.reason {
            NewtonFailureReason::SingularJacobian(m) => format!("singular Jacobian ({m})"),
            NewtonFailureReason::Diverged => "residual stopped decreasing".into(),
            NewtonFailureReason::MaxIterations => "maximum number of iterations reached".into(),
            NewtonFailureReason::NonFinite => "non-finite residual".into(),
        };
        write!(f, "Newton failed after {} iterations: {what}; last residual {:.3e}", self.report.iterations, self.report.final_residual())?;
        if let Some(last) = self.report.history.last() {
            let worst =
                last.block_norms.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| self.report.block_names[i].clone());
            if let Some(b) = worst {
                write!(f, " (largest in block {b})")?;
            }
        }
        Ok(())
    }
}

impl std::error::Error for NewtonFailure {}

fn fail(reason: NewtonFailureReason, report: NewtonReport) -> Error {
    Error::Newton(Box::new(NewtonFailure { reason, report }))
}

/// Iterate from `x` in place until every scaled block norm is below the
/// tolerance and, for semi-smooth problems, the classification is unchanged
/// from the previous iterate.
pub fn newton_solve(problem: &mut dyn NonlinearProblem, x: &mut [f64], cfg: &NewtonConfig) -> Result<NewtonReport> {
    let n = x.len();
    let blocks = problem.blocks(n);
    let mut report = NewtonReport { block_names: blocks.iter().map(|b| b.0.clone()).collect(), ..Default::default() };
    let mut best = f64::INFINITY;
    let mut since_best = 0;
    let mut prev_class: Option<Vec<u8>> = None;
    let mut step_norm = 0.0;
    for it in 0..=cfg.max_iterations {
        let (r, jac) = problem.residual_jacobian(x)?;
        let scales = problem.block_scales(&blocks, x, &r, &jac);
        let norms: Vec<f64> = blocks.iter().zip(&scales).map(|((_, rg), s)| norm2(&r[rg.clone()]) / s).collect();
        let class = problem.classification(x);
        let changes = match (&class, &prev_class) {
            (Some(c), Some(p)) => Some(c.iter().zip(p).filter(|(a, b)| a != b).count()),
            _ => None,
        };
        let fd_error = match cfg.fd_check {
            Some(h) => Some(jacobian_fd_error(problem, x, &jac, h, 3)?),
            None => None,
        };
        report.history.push(IterationRecord {
            iteration: it,
            block_norms: norms.clone(),
            step_norm,
            classification_changes: changes,
            fd_error,
        });
        report.iterations = it;
        if norms.iter().any(|v| !v.is_finite()) {
            return Err(fail(NewtonFailureReason::NonFinite, report));
        }
        let worst = norms.iter().fold(0.0_f64, |m, v| m.max(*v));
        let stable = class.is_none() || changes == Some(0);
        if worst < cfg.tol && stable {
            report.converged = true;
            return Ok(report);
        }
        if it == cfg.max_iterations {
            break;
        }
        if worst < best {
            best = worst;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > cfg.patience {
                return Err(fail(NewtonFailureReason::Diverged, report));
            }
        }
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let dx = match linear_solve(&jac, &rhs) {
            Ok(dx) => dx,
            Err(e) => return Err(fail(NewtonFailureReason::SingularJacobian(e.to_string()), report)),
        };
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
        step_norm = norm2(&dx);
        prev_class = class;
    }
    Err(fail(NewtonFailureReason::MaxIterations, report))
}

/// Size of the terms in each block: the 2-norm over its rows of
/// `sum_j |J_ij x_j| + |r_i|`, floored to stay positive. Residuals measured
/// against it are relative to the magnitudes that cancel in them.
pub fn term_scales(blocks: &[(String, Range<usize>)], x: &[f64], r: &[f64], jac: &SpMat, floor: f64) -> Vec<f64> {
    let jac = crate::sparse::ensure_csr(jac);
    let mut rows = vec![0.0; r.len()];
    for (i, row) in jac.outer_iterator().enumerate() {
        rows[i] = row.iter().map(|(j, v)| (v * x[j]).abs()).sum::<f64>() + r[i].abs();
    }
    blocks.iter().map(|(_, rg)| norm2(&rows[rg.clone()]).max(floor)).collect()
}

/// Largest relative error of Jacobian-vector products against central
/// differences, over `ndir` deterministic pseudo-random directions scaled by
/// the magnitude of `x`.
pub fn jacobian_fd_error(problem: &mut dyn NonlinearProblem, x: &[f64], jac: &SpMat, h: f64, ndir: usize) -> Result<f64> {
    let n = x.len();
    let mut worst: f64 = 0.0;
    let mut state = 0x9e3779b97f4a7c15_u64;
    for _ in 0..ndir {
        let v: Vec<f64> = (0..n)
            .map(|i| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let u = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                u * (1.0 + x[i].abs())
            })
            .collect();
        let xp: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + h * b).collect();
        let xm: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a - h * b).collect();
        let (rp, rm) = (problem.residual(&xp)?, problem.residual(&xm)?);
        let fd: Vec<f64> = rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let jv = matvec(jac, &v);
        let diff: Vec<f64> = fd.iter().zip(&jv).map(|(a, b)| a - b).collect();
        worst = worst.max(norm2(&diff) / norm2(&jv).max(norm2(&fd)).max(1e-300));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::Triplets;

    struct Scalar;
    impl NonlinearProblem for Scalar {
        fn residual_jacobian(&mut self, x: &[f64]) -> Result<(Vec<f64>, SpMat)> {
            let mut t = Triplets::new(1, 1);
            t.push(0, 0, 2.0 * x[0]);
            Ok((vec![x[0] * x[0] - 4.0], t.into_csr()))
        }
    }

    struct Linear;
    impl NonlinearProblem for Linear {
        fn residual_jacobian(&mut self, x: &[f64]) -> Result<(Vec<f64>, SpMat)> {
            let mut t = Triplets::new(2, 2);
            t.push(0, 0, 2.0);
            t.push(0, 1, 1.0);
            t.push(1, 1, 3.0);
            Ok((vec![2.0 * x[0] + x[1] - 1.0, 3.0 * x[1] - 6.0], t.into_csr()))
        }
    }

    #[test]
    fn linear_problem_takes_one_iteration() {
        let mut x = vec![0.0, 0.0];
        let rep = newton_solve(&mut Linear, &mut x, &NewtonConfig { tol: 1e-10, ..Default::default() }).unwrap();
        assert_eq!(rep.iterations, 1);
        assert!((x[0] + 0.5).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn square_root_converges_quadratically() {
        let mut x = vec![3.0];
        let rep = newton_solve(&mut Scalar, &mut x, &NewtonConfig { tol: 1e-12, ..Default::default() }).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12);
        let r: Vec<f64> = rep.history.iter().map(|h| h.block_norms[0]).collect();
        // e_{k+1} ~ e_k^2 / 4 for the error in x; the residual follows.
        for w in r.windows(2) {
            if w[0] < 1e-1 && w[1] > 1e-14 {
                assert!(w[1] < 0.5 * w[0] * w[0], "{r:?}");
            }
        }
        let mut csv = Vec::new();
        rep.write_csv(&mut csv).unwrap();
        assert!(String::from_utf8(csv).unwrap().starts_with("iteration,all,step_norm"));
    }

    #[test]
    fn singular_jacobian_reports() {
        let mut x = vec![0.0];
        let e = newton_solve(&mut Scalar, &mut x, &NewtonConfig::default()).unwrap_err();
        match e {
            Error::Newton(f) => assert!(matches!(f.reason, NewtonFailureReason::SingularJacobian(_))),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn fd_check_on_scalar() {
        let x = vec![1.3];
        let (_, j) = Scalar.residual_jacobian(&x).unwrap();
        assert!(jacobian_fd_error(&mut Scalar, &x, &j, 1e-6, 3).unwrap() < 1e-8);
    }
}
