//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use anderson_gp::disorder::{sample_potential, DisorderSpec};
use anderson_gp::{Lattice, Realization};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_field(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn unit_field(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut u = random_field(n, rng);
    let nrm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    u.iter_mut().for_each(|x| *x /= nrm);
    u
}

pub fn realization(d: usize, l: usize, seed: u64, sample: u64) -> Realization {
    sample_potential(&DisorderSpec::uniform(1.0, seed), Lattice::shared(d, l).unwrap(), 0, sample)
}

pub fn coords(lat: &Lattice, site: usize) -> Vec<i64> {
    lat.coords(site)[..lat.dim()].to_vec()
}

/// `n^{-1/2} Σ_β u_β e^{-2πi γ·β / (2L+1)}` by direct summation.
pub fn naive_dft(lat: &Lattice, u: &[Complex64], sign: f64) -> Vec<Complex64> {
    let n = lat.n_sites();
    let side = lat.side() as f64;
    let scale = (n as f64).sqrt().recip();
    (0..n)
        .map(|g| {
            let cg = coords(lat, g);
            let mut acc = Complex64::new(0.0, 0.0);
            for (b, &ub) in u.iter().enumerate() {
                let cb = coords(lat, b);
                let dot: i64 = cg.iter().zip(&cb).map(|(x, y)| x * y).sum();
                acc += ub * Complex64::from_polar(1.0, sign * 2.0 * PI * dot as f64 / side);
            }
            acc * scale
        })
        .collect()
}

/// Dense `-Δ + V` on the torus, built from coordinates with explicit wrapping.
pub fn dense_periodic(lat: &Lattice, v: &[f64]) -> DMatrix<f64> {
    let n = lat.n_sites();
    let d = lat.dim();
    let l = lat.half_side() as i64;
    let side = lat.side() as i64;
    let mut m = DMatrix::zeros(n, n);
    for x in 0..n {
        m[(x, x)] = 2.0 * d as f64 + v[x];
        let c = coords(lat, x);
        for axis in 0..d {
            for step in [-1i64, 1] {
                let mut y = c.clone();
                y[axis] = (y[axis] + step + l).rem_euclid(side) - l;
                let j = lat.site(&y);
                m[(x, j)] -= 1.0;
            }
        }
    }
    m
}

pub fn sorted_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Multiset of `h(γ) = 2d - 2 Σ cos(2πγ_j/(2L+1))` over all frequencies.
pub fn symbol_multiset(lat: &Lattice) -> Vec<f64> {
    let side = lat.side() as f64;
    let mut out: Vec<f64> = (0..lat.n_sites())
        .map(|g| {
            let c = coords(lat, g);
            2.0 * lat.dim() as f64 - 2.0 * c.iter().map(|&x| (2.0 * PI * x as f64 / side).cos()).sum::<f64>()
        })
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

pub fn shared(d: usize, l: usize) -> Arc<Lattice> {
    Lattice::shared(d, l).unwrap()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
