//! Bottom of the spectrum of `-Δ + V` on the torus and on sub-boxes.

mod dense;
mod lanczos;
mod operator;

pub use dense::{dense_eigenvalues, dense_oracle, sturm_count_below, DENSE_LIMIT};
pub use lanczos::{lanczos, LanczosOptions};
pub use operator::{HamiltonianOperator, SymmetricOperator};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Lowest eigenpairs in ascending order with unit-norm, mutually orthogonal
/// eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenSolution<T: Real = f64> {
    pub values: Vec<T>,
    pub vectors: Vec<Vec<T>>,
    /// `‖Hφ_i - E_iφ_i‖₂`
    pub residuals: Vec<T>,
    /// Operator applications spent.
    pub iterations: usize,
}

impl<T: Real> EigenSolution<T> {
    pub fn ground_energy(&self) -> T {
        self.values[0]
    }

    pub fn ground_state(&self) -> &[T] {
        &self.vectors[0]
    }

    /// `E_1 - E_0`, when at least two pairs were computed.
    pub fn gap(&self) -> Option<T> {
        (self.values.len() >= 2).then(|| self.values[1] - self.values[0])
    }
}

/// Fixes the global sign of an eigenvector: positive total mass, or a
/// positive largest entry when the mass vanishes.
pub(crate) fn orient<T: Real>(v: &mut [T]) {
    let sum: T = v.iter().copied().sum();
    let scale = T::from_count(v.len()).sqrt() * T::lit(1e-10);
    let flip = if sum.abs() > scale {
        sum < T::zero()
    } else {
        let mut best = T::zero();
        let mut sign_neg = false;
        for &x in v.iter() {
            if x.abs() > best * (T::one() + T::lit(1e-9)) {
                best = x.abs();
                sign_neg = x < T::zero();
            }
        }
        sign_neg
    };
    if flip {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Lowest `k` eigenpairs of a lattice Hamiltonian to absolute residual `tol`.
///
/// The block size is at least `2d + 1` so that the `2d`-fold first excited
/// level of the clean torus is resolved in one block.
pub fn lowest_eigenpairs<T: Real>(
    h: &HamiltonianOperator<T>,
    k: usize,
    tol: f64,
    seed: u64,
) -> Result<EigenSolution<T>> {
    let d = h.lattice().dim();
    let block = (k + 1).max(2 * d + 1);
    let opts = LanczosOptions::with_tol(tol).seed(seed).block_size(block);
    lanczos(h, k, &opts)
}

/// Number of eigenvalues in the closed interval `[lo, hi]`.
///
/// Dense diagonalization up to [`DENSE_LIMIT`] sites; beyond that only open
/// one-dimensional chains are supported, through Sturm counts.
pub fn count_eigenvalues_in<T: Real>(h: &HamiltonianOperator<T>, lo: T, hi: T) -> Result<usize> {
    if hi < lo {
        return Ok(0);
    }
    let n = h.dim();
    if n <= DENSE_LIMIT {
        let ev = dense_eigenvalues(h)?;
        return Ok(ev.iter().filter(|&&e| e >= lo && e <= hi).count());
    }
    match h.as_open_chain() {
        Some((diag, off)) => {
            let bump = |x: T| x + (x.abs() + T::one()) * T::epsilon();
            Ok(sturm_count_below(&diag, &off, bump(hi)) - sturm_count_below(&diag, &off, lo))
        }
        None => Err(Error::Oversize {
            sites: n,
            limit: DENSE_LIMIT,
        }),
    }
}
