//! Restarted block Lanczos for the bottom of the spectrum.
//!
//! The Krylov basis is kept fully orthogonal (two passes of classical
//! Gram-Schmidt against every stored vector) and the Rayleigh-Ritz problem is
//! solved after every block step. Each step extends the basis with the
//! residuals of the current lowest Ritz pairs; when the basis is full it is
//! thick-restarted from the best Ritz vectors. Convergence is judged on
//! residual norms only, so tiny spectral gaps never stop the iteration early.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::{orient, EigenSolution, SymmetricOperator};
use crate::disorder::standard_normal;
use crate::error::{Error, Result};
use crate::scalar::{dot, norm2, Real};

#[derive(Debug, Clone)]
pub struct LanczosOptions {
    /// Absolute residual tolerance `‖Hφ - Eφ‖₂`.
    pub tol: f64,
    /// Block size; defaults to `k + 1`.
    pub block_size: Option<usize>,
    /// Largest basis before a thick restart.
    pub max_basis: Option<usize>,
    /// Cap on block steps; defaults to `50 k √n`.
    pub max_steps: Option<usize>,
    /// Seed of the start block.
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            block_size: None,
            max_basis: None,
            max_steps: None,
            seed: 0,
        }
    }
}

impl LanczosOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn block_size(mut self, b: usize) -> Self {
        self.block_size = Some(b);
        self
    }
}

/// Lowest `k` eigenpairs of a symmetric operator.
pub fn lanczos<T: Real, Op: SymmetricOperator<T> + ?Sized>(
    op: &Op,
    k: usize,
    opts: &LanczosOptions,
) -> Result<EigenSolution<T>> {
    let n = op.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "requested {k} eigenpairs of a {n}-dimensional operator"
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let block = opts.block_size.unwrap_or(k + 1).max(k).min(n);
    let max_basis = opts
        .max_basis
        .unwrap_or_else(|| (12 * block).max(80))
        .max(2 * block + k)
        .min(n);
    let keep = (max_basis / 3).max(k + block).min(max_basis - block);
    let max_steps = opts
        .max_steps
        .unwrap_or_else(|| (50.0 * k as f64 * (n as f64).sqrt()).ceil() as usize);
    let tol = T::lit(opts.tol);

    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(max_basis);
    let mut images: Vec<Vec<T>> = Vec::with_capacity(max_basis);
    // projected matrix, row-major in f64 (max_basis x max_basis)
    let mut proj = vec![0.0f64; max_basis * max_basis];
    let mut matvecs = 0usize;

    let mut pending: Vec<Vec<T>> = (0..block).map(|_| random_vector(n, &mut rng)).collect();
    let mut best_residuals = vec![f64::INFINITY; k];

    for _step in 0..max_steps {
        // extend the basis with the pending directions
        let mut added = 0;
        for mut v in pending.drain(..) {
            if basis.len() >= max_basis {
                break;
            }
            if !orthogonalize(&mut v, &basis) {
                // direction already in span; try a fresh random one
                let mut r = random_vector(n, &mut rng);
                if basis.len() >= n || !orthogonalize(&mut r, &basis) {
                    continue;
                }
                v = r;
            }
            let hv = op.apply(&v);
            matvecs += 1;
            let m = basis.len();
            for (i, q) in basis.iter().enumerate() {
                let a = dot(q, &hv).to_f64_lossy();
                proj[i * max_basis + m] = a;
                proj[m * max_basis + i] = a;
            }
            proj[m * max_basis + m] = dot(&v, &hv).to_f64_lossy();
            basis.push(v);
            images.push(hv);
            added += 1;
        }
        let m = basis.len();
        if added == 0 && m < k {
            return Err(Error::InvalidParameter("operator has fewer than k independent directions".into()));
        }

        // Rayleigh-Ritz
        let small = DMatrix::from_fn(m, m, |i, j| 0.5 * (proj[i * max_basis + j] + proj[j * max_basis + i]));
        let eig = SymmetricEigen::new(small);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

        let wanted = block.max(k).min(m);
        let mut ritz_vecs = Vec::with_capacity(wanted);
        let mut ritz_imgs = Vec::with_capacity(wanted);
        let mut residuals = Vec::with_capacity(wanted);
        for &idx in order.iter().take(wanted) {
            let theta = T::lit(eig.eigenvalues[idx]);
            let y = eig.eigenvectors.column(idx);
            let x = combine(&basis, y.as_slice());
            let hx = combine(&images, y.as_slice());
            let r: Vec<T> = hx.iter().zip(&x).map(|(&a, &b)| a - theta * b).collect();
            residuals.push(r);
            ritz_vecs.push(x);
            ritz_imgs.push(hx);
        }
        let norms: Vec<T> = residuals.iter().map(|r| norm2(r)).collect();
        for i in 0..k {
            best_residuals[i] = best_residuals[i].min(norms[i].to_f64_lossy());
        }

        if norms[..k].iter().all(|&r| r <= tol) || m == n {
            // confirm with fresh products
            let values: Vec<T> = order.iter().take(k).map(|&i| T::lit(eig.eigenvalues[i])).collect();
            let mut vectors: Vec<Vec<T>> = ritz_vecs.iter().take(k).cloned().collect();
            for v in vectors.iter_mut() {
                crate::scalar::normalize(v);
                orient(v);
            }
            let true_res: Vec<T> = vectors
                .iter()
                .zip(&values)
                .map(|(v, &e)| {
                    let hv = op.apply(v);
                    norm2(&hv.iter().zip(v).map(|(&a, &b)| a - e * b).collect::<Vec<_>>())
                })
                .collect();
            matvecs += k;
            if true_res.iter().all(|&r| r <= tol) {
                return Ok(EigenSolution {
                    values,
                    vectors,
                    residuals: true_res,
                    iterations: matvecs,
                });
            }
            if m == n {
                // full space and still above tolerance: rounding floor reached
                return Err(not_converged(matvecs, &true_res, opts.tol));
            }
        }

        // next directions: residuals of the unconverged lowest Ritz pairs
        pending = residuals
            .into_iter()
            .zip(&norms)
            .filter(|(_, &nr)| nr > tol * T::lit(0.01))
            .map(|(r, _)| r)
            .collect();
        if pending.is_empty() {
            pending.push(random_vector(n, &mut rng));
        }

        if basis.len() + pending.len() > max_basis {
            // thick restart on the lowest `keep` Ritz vectors
            let keep_now = keep.min(m);
            let mut new_basis = Vec::with_capacity(max_basis);
            let mut new_images = Vec::with_capacity(max_basis);
            for (slot, &idx) in order.iter().take(keep_now).enumerate() {
                let y = eig.eigenvectors.column(idx);
                let (x, hx) = if slot < ritz_vecs.len() {
                    (ritz_vecs[slot].clone(), ritz_imgs[slot].clone())
                } else {
                    (combine(&basis, y.as_slice()), combine(&images, y.as_slice()))
                };
                new_basis.push(x);
                new_images.push(hx);
            }
            // re-orthonormalize to wash out drift; keep images consistent
            reorthonormalize(&mut new_basis, &mut new_images);
            basis = new_basis;
            images = new_images;
            proj.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..basis.len() {
                for j in i..basis.len() {
                    let a = dot(&basis[i], &images[j]).to_f64_lossy();
                    proj[i * max_basis + j] = a;
                    proj[j * max_basis + i] = a;
                }
            }
        }
    }
    Err(not_converged(
        matvecs,
        &best_residuals.iter().map(|&r| T::lit(r)).collect::<Vec<_>>(),
        opts.tol,
    ))
}

fn not_converged<T: Real>(matvecs: usize, res: &[T], tol: f64) -> Error {
    let residuals: Vec<f64> = res.iter().map(|r| r.to_f64_lossy()).collect();
    Error::NotConverged {
        iterations: matvecs,
        worst_residual: residuals.iter().cloned().fold(0.0, f64::max),
        tolerance: tol,
        residuals,
    }
}

fn random_vector<T: Real>(n: usize, rng: &mut ChaCha20Rng) -> Vec<T> {
    (0..n).map(|_| T::lit(standard_normal(rng))).collect()
}

fn combine<T: Real>(vectors: &[Vec<T>], coeffs: &[f64]) -> Vec<T> {
    let n = vectors[0].len();
    let mut out = vec![T::zero(); n];
    for (v, &c) in vectors.iter().zip(coeffs) {
        crate::scalar::axpy(T::lit(c), v, &mut out);
    }
    out
}

/// Two-pass Gram-Schmidt against `basis`, then normalization. Returns false
/// when the vector collapses (already in the span).
fn orthogonalize<T: Real>(v: &mut [T], basis: &[Vec<T>]) -> bool {
    let start = norm2(v);
    if !(start > T::zero()) || !start.is_finite() {
        return false;
    }
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, v);
            crate::scalar::axpy(-c, q, v);
        }
    }
    let end = norm2(v);
    if end <= start * T::lit(1e-10) || end <= T::min_positive_value().sqrt() {
        return false;
    }
    let inv = end.recip();
    v.iter_mut().for_each(|x| *x *= inv);
    true
}

/// Modified Gram-Schmidt on `basis`, applying the same triangular transform to
/// `images` so that `images[i] = H basis[i]` still holds.
fn reorthonormalize<T: Real>(basis: &mut [Vec<T>], images: &mut [Vec<T>]) {
    for i in 0..basis.len() {
        for j in 0..i {
            let c = dot(&basis[j], &basis[i]);
            let (bj, bi) = split_pair(basis, j, i);
            crate::scalar::axpy(-c, bj, bi);
            let (ij, ii) = split_pair(images, j, i);
            crate::scalar::axpy(-c, ij, ii);
        }
        let nrm = norm2(&basis[i]);
        let inv = nrm.recip();
        basis[i].iter_mut().for_each(|x| *x *= inv);
        images[i].iter_mut().for_each(|x| *x *= inv);
    }
}

fn split_pair<T>(v: &mut [Vec<T>], lo: usize, hi: usize) -> (&Vec<T>, &mut Vec<T>) {
    let (a, b) = v.split_at_mut(hi);
    (&a[lo], &mut b[0])
}
