use std::sync::Arc;

use crate::disorder::{Boundary, DisorderRealization, Region};
use crate::error::Result;
use crate::lattice::Lattice;
use crate::scalar::Real;

/// Real symmetric linear map applied without assembling a matrix.
pub trait SymmetricOperator<T: Real>: Sync {
    fn dim(&self) -> usize;

    /// `y = A x`; both slices have length [`dim`](Self::dim).
    fn apply_into(&self, x: &[T], y: &mut [T]);

    /// Upper bound on the spectrum (Gershgorin).
    fn spectral_upper_bound(&self) -> T;

    fn apply(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.dim()];
        self.apply_into(x, &mut y);
        y
    }

    /// Dense row-major copy, for small-instance checks.
    fn to_dense(&self) -> Vec<T> {
        let n = self.dim();
        let mut out = vec![T::zero(); n * n];
        let mut e = vec![T::zero(); n];
        let mut col = vec![T::zero(); n];
        for j in 0..n {
            e[j] = T::one();
            self.apply_into(&e, &mut col);
            e[j] = T::zero();
            for i in 0..n {
                out[i * n + j] = col[i];
            }
        }
        out
    }
}

/// `-Δ + V` on a region of the torus, stored as a diagonal plus a hopping list
/// (every hop has amplitude -1).
#[derive(Debug, Clone)]
pub struct HamiltonianOperator<T: Real = f64> {
    lattice: Arc<Lattice>,
    region: Region,
    sites: Vec<usize>,
    potential: Vec<T>,
    diag: Vec<T>,
    offsets: Vec<usize>,
    adjacency: Vec<usize>,
}

impl<T: Real> HamiltonianOperator<T> {
    /// `H^P_{ω,L}` on the whole torus.
    pub fn periodic(realization: &DisorderRealization<T>) -> Self {
        let lattice = Arc::clone(&realization.lattice);
        let n = lattice.n_sites();
        let deg = 2 * lattice.dim();
        let two_d = T::from_count(deg);
        let mut offsets = Vec::with_capacity(n + 1);
        let mut adjacency = Vec::with_capacity(n * deg);
        offsets.push(0);
        for x in 0..n {
            adjacency.extend_from_slice(lattice.neighbors(x));
            offsets.push(adjacency.len());
        }
        let diag = realization.potential.iter().map(|&v| two_d + v).collect();
        Self {
            region: Region::torus(&lattice),
            sites: (0..n).collect(),
            potential: realization.potential.clone(),
            diag,
            offsets,
            adjacency,
            lattice,
        }
    }

    pub(crate) fn from_parts(
        lattice: Arc<Lattice>,
        region: Region,
        sites: Vec<usize>,
        potential: Vec<T>,
        diag: Vec<T>,
        offsets: Vec<usize>,
        adjacency: Vec<usize>,
    ) -> Self {
        Self {
            lattice,
            region,
            sites,
            potential,
            diag,
            offsets,
            adjacency,
        }
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn boundary(&self) -> Boundary {
        self.region.boundary
    }

    /// Global lattice index of each local degree of freedom.
    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn potential(&self) -> &[T] {
        &self.potential
    }

    pub fn diagonal(&self) -> &[T] {
        &self.diag
    }

    pub fn hops(&self, local: usize) -> &[usize] {
        &self.adjacency[self.offsets[local]..self.offsets[local + 1]]
    }

    /// `Σ_x diag_x`, the trace.
    pub fn trace(&self) -> T {
        self.diag.iter().copied().sum()
    }

    /// Quadratic form `⟨Hu, u⟩`.
    pub fn quadratic_form(&self, u: &[T]) -> Result<T> {
        crate::lattice::check_len(self.dim(), u.len())?;
        let hu = self.apply(u);
        Ok(crate::scalar::dot(&hu, u))
    }

    /// Tridiagonal `(diagonal, off-diagonal)` form when the operator is an open
    /// chain (one-dimensional Neumann or Dirichlet box), `None` otherwise.
    pub fn as_open_chain(&self) -> Option<(Vec<T>, Vec<T>)> {
        if self.lattice.dim() != 1 || self.boundary() == Boundary::Periodic {
            return None;
        }
        let off = vec![-T::one(); self.dim().saturating_sub(1)];
        Some((self.diag.clone(), off))
    }
}

impl<T: Real> SymmetricOperator<T> for HamiltonianOperator<T> {
    fn dim(&self) -> usize {
        self.sites.len()
    }

    fn apply_into(&self, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.dim());
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = self.diag[i] * x[i];
            for &j in &self.adjacency[self.offsets[i]..self.offsets[i + 1]] {
                acc -= x[j];
            }
            *yi = acc;
        }
    }

    fn spectral_upper_bound(&self) -> T {
        (0..self.dim())
            .map(|i| self.diag[i] + T::from_count(self.offsets[i + 1] - self.offsets[i]))
            .fold(T::zero(), T::max)
    }
}
