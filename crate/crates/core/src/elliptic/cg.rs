//! Preconditioned conjugate gradients for matrix-free SPD operators.

use rayon::prelude::*;

use crate::error::{Error, Result};

pub trait LinearOperator: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `y = A x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);

    /// Diagonal used by the Jacobi preconditioner.
    fn diagonal(&self) -> Vec<f64>;
}

/// Symmetric positive definite approximation `z = M⁻¹ r`.
pub trait Preconditioner: Sync {
    fn precondition(&self, r: &[f64], z: &mut [f64]);
}

/// Diagonal scaling.
#[derive(Debug, Clone)]
pub struct Jacobi {
    inv_diag: Vec<f64>,
}

impl Jacobi {
    pub fn new<A: LinearOperator>(op: &A) -> Self {
        let inv_diag = op.diagonal().into_iter().map(|d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
        Self { inv_diag }
    }
}

impl Preconditioner for Jacobi {
    fn precondition(&self, r: &[f64], z: &mut [f64]) {
        z.par_iter_mut().zip(r.par_iter().zip(self.inv_diag.par_iter())).for_each(|(zi, (ri, mi))| *zi = ri * mi);
    }
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

use crate::reduce::dot;

/// Solves `A x = b` to relative residual `tol` with Jacobi preconditioning,
/// starting from `x0` when given.
pub fn pcg<A: LinearOperator>(
    op: &A,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    pcg_with(op, &Jacobi::new(op), b, x0, tol, max_iter)
}

/// As [`pcg`] with the preconditioner `pre`.
pub fn pcg_with<A: LinearOperator, M: Preconditioner>(
    op: &A,
    pre: &M,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    let n = op.len();
    assert_eq!(b.len(), n);
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok(CgOutcome { x: vec![0.0; n], iterations: 0, residual: 0.0 });
    }
    let mut x = match x0 {
        Some(x0) => x0.to_vec(),
        None => vec![0.0; n],
    };
    let mut r = vec![0.0; n];
    op.apply(&x, &mut r);
    r.par_iter_mut().zip(b.par_iter()).for_each(|(ri, bi)| *ri = bi - *ri);
    let mut rnorm = dot(&r, &r).sqrt();
    if rnorm <= tol * bnorm {
        return Ok(CgOutcome { x, iterations: 0, residual: rnorm / bnorm });
    }
    let mut z = vec![0.0; n];
    pre.precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::NoConvergence { iterations: it, residual: rnorm / bnorm });
        }
        let alpha = rz / pap;
        x.par_iter_mut().zip(p.par_iter()).for_each(|(xi, pi)| *xi += alpha * pi);
        r.par_iter_mut().zip(ap.par_iter()).for_each(|(ri, api)| *ri -= alpha * api);
        rnorm = dot(&r, &r).sqrt();
        if rnorm <= tol * bnorm {
            return Ok(CgOutcome { x, iterations: it, residual: rnorm / bnorm });
        }
        pre.precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.par_iter_mut().zip(z.par_iter()).for_each(|(pi, zi)| *pi = zi + beta * *pi);
    }
    Err(Error::NoConvergence { iterations: max_iter, residual: rnorm / bnorm })
}
