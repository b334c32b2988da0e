//! Direct symmetric diagonalization for small instances, used as the
//! reference against which the iterative solver is checked.

use nalgebra::{DMatrix, SymmetricEigen};

use super::{orient, EigenSolution, SymmetricOperator};
use crate::error::{Error, Result};
use crate::scalar::{norm2, Real};

/// Largest instance the dense routines accept.
pub const DENSE_LIMIT: usize = 4096;

fn dense_matrix<T: Real, Op: SymmetricOperator<T> + ?Sized>(op: &Op) -> Result<DMatrix<f64>> {
    let n = op.dim();
    if n > DENSE_LIMIT {
        return Err(Error::Oversize {
            sites: n,
            limit: DENSE_LIMIT,
        });
    }
    let a = op.to_dense();
    Ok(DMatrix::from_fn(n, n, |i, j| a[i * n + j].to_f64_lossy()))
}

/// Full spectrum with eigenvectors, ascending.
pub fn dense_oracle<T: Real, Op: SymmetricOperator<T> + ?Sized>(op: &Op) -> Result<EigenSolution<T>> {
    let a = dense_matrix(op)?;
    let n = a.nrows();
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    let mut residuals = Vec::with_capacity(n);
    for &i in &order {
        let e = T::lit(eig.eigenvalues[i]);
        let mut v: Vec<T> = eig.eigenvectors.column(i).iter().map(|&x| T::lit(x)).collect();
        orient(&mut v);
        let hv = op.apply(&v);
        let r: Vec<T> = hv.iter().zip(&v).map(|(&a, &b)| a - e * b).collect();
        residuals.push(norm2(&r));
        values.push(e);
        vectors.push(v);
    }
    Ok(EigenSolution {
        values,
        vectors,
        residuals,
        iterations: n,
    })
}

/// Eigenvalues only, ascending.
pub fn dense_eigenvalues<T: Real, Op: SymmetricOperator<T> + ?Sized>(op: &Op) -> Result<Vec<T>> {
    let a = dense_matrix(op)?;
    let mut ev: Vec<f64> = a.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev.into_iter().map(T::lit).collect())
}

/// Number of eigenvalues of a symmetric tridiagonal matrix strictly below `x`
/// (Sturm sequence / inertia of the shifted LDLᵀ factorization).
pub fn sturm_count_below<T: Real>(diag: &[T], off: &[T], x: T) -> usize {
    let tiny = T::min_positive_value().sqrt();
    let mut count = 0;
    let mut d = T::one();
    for i in 0..diag.len() {
        let coupling = if i == 0 { T::zero() } else { off[i - 1] * off[i - 1] / d };
        d = diag[i] - x - coupling;
        if d == T::zero() {
            d = -tiny;
        }
        if d < T::zero() {
            count += 1;
        }
    }
    count
}
