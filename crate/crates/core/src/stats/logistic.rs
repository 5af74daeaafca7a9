//! Maximum-likelihood logistic regression by iteratively reweighted least squares.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::popgen::logistic;

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub coefficients: Vec<f64>,
    pub iterations: u32,
    pub gradient_norm: f64,
}

const MAX_ITER: u32 = 100;
/// Coefficients beyond this size only arise when the likelihood has no finite maximum.
const DIVERGED: f64 = 30.0;

/// Fit `P(y = 1 | x) = logistic(x . beta)`. Each row of `design` is one
/// observation (include a constant column for an intercept).
pub fn logistic_fit(design: &[Vec<f64>], outcomes: &[bool]) -> Result<LogisticFit> {
    let n = design.len();
    if n == 0 || n != outcomes.len() {
        return Err(Error::Parameter(format!("{n} design rows but {} outcomes", outcomes.len())));
    }
    let p = design[0].len();
    if p == 0 || design.iter().any(|r| r.len() != p) {
        return Err(Error::Parameter("design rows must share a non-zero width".into()));
    }
    let positives = outcomes.iter().filter(|&&y| y).count();
    if positives == 0 || positives == n {
        return Err(Error::Separation("all outcomes are identical".into()));
    }

    let x = DMatrix::from_fn(n, p, |i, j| design[i][j]);
    let y = DVector::from_fn(n, |i, _| if outcomes[i] { 1.0 } else { 0.0 });
    let sv = x.clone().singular_values();
    if sv.min() <= 1e-10 * sv.max() {
        return Err(Error::Parameter("design matrix is not full rank".into()));
    }
    let mut beta = DVector::zeros(p);
    for iter in 1..=MAX_ITER {
        let eta = &x * &beta;
        let mu = eta.map(logistic);
        let w = mu.map(|m| m * (1.0 - m));
        let grad = x.transpose() * (&y - &mu);
        let gradient_norm = grad.norm();
        if gradient_norm < 1e-8 {
            return Ok(LogisticFit { coefficients: beta.iter().copied().collect(), iterations: iter - 1, gradient_norm });
        }
        let mut xw = x.clone();
        for (i, mut row) in xw.row_iter_mut().enumerate() {
            row *= w[i];
        }
        let hessian = x.transpose() * xw;
        let step = match hessian.cholesky() {
            Some(c) => c.solve(&grad),
            None => return Err(Error::Separation("information matrix became singular".into())),
        };
        beta += step;
        if beta.amax() > DIVERGED {
            return Err(Error::Separation(format!("coefficients diverging (max |beta| = {:.1})", beta.amax())));
        }
    }
    Err(Error::Separation(format!("no convergence after {MAX_ITER} iterations")))
}
