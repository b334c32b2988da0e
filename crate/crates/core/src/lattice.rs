//! Periodic cubic torus `Λ_L = [-L, L]^d`, its discrete Laplacian and the
//! Fourier transform that diagonalizes it.
//!
//! Sites are numbered lexicographically in their coordinate tuple with axis 0
//! the most significant, so comparing site indices is the same as comparing
//! coordinates lexicographically. Frequencies `γ` use the same index set.

use std::sync::Arc;

use num_complex::Complex;
use num_traits::{FromPrimitive, Num};
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MAX_DIM: usize = 3;

/// Multi-index on the torus, only the first `dim` entries are meaningful.
pub type Coord = [i64; MAX_DIM];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    dim: usize,
    half_side: usize,
    side: usize,
    n_sites: usize,
    /// `2 * dim` neighbors per site, ordered (-e_0, +e_0, -e_1, +e_1, ...).
    neighbors: Vec<usize>,
}

impl Lattice {
    pub fn new(dim: usize, half_side: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if half_side < 1 {
            return Err(Error::InvalidHalfSide(half_side));
        }
        let side = 2 * half_side + 1;
        let n_sites = side.pow(dim as u32);
        let mut neighbors = Vec::with_capacity(n_sites * 2 * dim);
        for site in 0..n_sites {
            for axis in 0..dim {
                let stride = side.pow((dim - 1 - axis) as u32);
                let digit = (site / stride) % side;
                let down = if digit == 0 { site + (side - 1) * stride } else { site - stride };
                let up = if digit == side - 1 { site - (side - 1) * stride } else { site + stride };
                neighbors.push(down);
                neighbors.push(up);
            }
        }
        Ok(Self {
            dim,
            half_side,
            side,
            n_sites,
            neighbors,
        })
    }

    pub fn shared(dim: usize, half_side: usize) -> Result<Arc<Self>> {
        Self::new(dim, half_side).map(Arc::new)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `L`
    #[inline]
    pub fn half_side(&self) -> usize {
        self.half_side
    }

    /// `2L + 1`
    #[inline]
    pub fn side(&self) -> usize {
        self.side
    }

    #[inline]
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    #[inline]
    pub fn neighbors(&self, site: usize) -> &[usize] {
        let deg = 2 * self.dim;
        &self.neighbors[site * deg..(site + 1) * deg]
    }

    #[inline]
    fn stride(&self, axis: usize) -> usize {
        self.side.pow((self.dim - 1 - axis) as u32)
    }

    /// Coordinates of `site` in `[-L, L]^d`.
    pub fn coords(&self, site: usize) -> Coord {
        let mut c = [0i64; MAX_DIM];
        let l = self.half_side as i64;
        for (axis, slot) in c.iter_mut().enumerate().take(self.dim) {
            *slot = ((site / self.stride(axis)) % self.side) as i64 - l;
        }
        c
    }

    /// Site index of a coordinate tuple, reduced modulo `2L + 1` on each axis.
    pub fn site(&self, coords: &[i64]) -> usize {
        debug_assert!(coords.len() >= self.dim);
        let n = self.side as i64;
        let l = self.half_side as i64;
        (0..self.dim).fold(0usize, |acc, axis| {
            acc * self.side + (coords[axis] + l).rem_euclid(n) as usize
        })
    }

    /// Periodic ℓ¹ distance `Σ_j min(|x_j - y_j|, (2L+1) - |x_j - y_j|)`.
    pub fn torus_distance(&self, a: usize, b: usize) -> usize {
        let (ca, cb) = (self.coords(a), self.coords(b));
        (0..self.dim)
            .map(|j| {
                let d = (ca[j] - cb[j]).unsigned_abs() as usize;
                d.min(self.side - d)
            })
            .sum()
    }

    /// Euclidean length of a frequency multi-index `|γ|`.
    pub fn frequency_norm(&self, freq: usize) -> f64 {
        let c = self.coords(freq);
        c[..self.dim].iter().map(|&g| (g * g) as f64).sum::<f64>().sqrt()
    }

    /// Fourier symbol `h(γ) = 2d - 2 Σ_j cos(2π γ_j / (2L+1))` of `-Δ`.
    pub fn symbol<T: Real>(&self, freq: usize) -> T {
        let c = self.coords(freq);
        let n = T::from_count(self.side);
        let two = T::lit(2.0);
        let s: T = c[..self.dim]
            .iter()
            .map(|&g| (two * T::PI() * T::from_i64(g).unwrap() / n).cos())
            .sum();
        two * T::from_count(self.dim) - two * s
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        check_len(self.n_sites, len)
    }

    /// `v = -Δu` with `v_x = 2d u_x - Σ_{y ~ x} u_y`. Works for real and
    /// complex fields.
    pub fn apply_neg_laplacian<F>(&self, u: &[F]) -> Result<Vec<F>>
    where
        F: Num + Copy + FromPrimitive,
    {
        self.check_len(u.len())?;
        let mut out = vec![F::zero(); u.len()];
        self.neg_laplacian_into(u, &mut out);
        Ok(out)
    }

    /// Unchecked variant writing into `out`; lengths must match `n_sites`.
    pub fn neg_laplacian_into<F>(&self, u: &[F], out: &mut [F])
    where
        F: Num + Copy + FromPrimitive,
    {
        let deg = 2 * self.dim;
        let diag = F::from_usize(deg).expect("small integer");
        for (x, o) in out.iter_mut().enumerate() {
            let nb = &self.neighbors[x * deg..(x + 1) * deg];
            let mut acc = diag * u[x];
            for &y in nb {
                acc = acc - u[y];
            }
            *o = acc;
        }
    }

    /// Kinetic energy `‖∇u‖² := ⟨-Δu, u⟩`, evaluated as a sum over bonds.
    pub fn dirichlet_energy<T: Real>(&self, u: &[T]) -> Result<T> {
        self.check_len(u.len())?;
        let deg = 2 * self.dim;
        let mut acc = T::zero();
        for x in 0..self.n_sites {
            // each bond once: only the "+" neighbor on every axis
            for axis in 0..self.dim {
                let y = self.neighbors[x * deg + 2 * axis + 1];
                let d = u[x] - u[y];
                acc += d * d;
            }
        }
        Ok(acc)
    }

    /// Unitary transform `û_γ = (2L+1)^{-d/2} Σ_β u_β e^{-2iπ γ·β/(2L+1)}`.
    pub fn dft<T: Real>(&self, u: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        self.check_len(u.len())?;
        let mut data = u.to_vec();
        self.transform(&mut data, Direction::Forward);
        Ok(data)
    }

    pub fn idft<T: Real>(&self, coeffs: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        self.check_len(coeffs.len())?;
        let mut data = coeffs.to_vec();
        self.transform(&mut data, Direction::Inverse);
        Ok(data)
    }

    /// DFT of a real field.
    pub fn dft_real<T: Real>(&self, u: &[T]) -> Result<Vec<Complex<T>>> {
        self.check_len(u.len())?;
        let mut data: Vec<Complex<T>> = u.iter().map(|&x| Complex::new(x, T::zero())).collect();
        self.transform(&mut data, Direction::Forward);
        Ok(data)
    }

    /// Kinetic energy evaluated on the Fourier side, `Σ_γ h(γ) |û_γ|²`.
    pub fn dirichlet_energy_fourier<T: Real>(&self, u: &[T]) -> Result<T> {
        let hat = self.dft_real(u)?;
        Ok(hat
            .iter()
            .enumerate()
            .map(|(g, c)| self.symbol::<T>(g) * c.norm_sqr())
            .sum())
    }

    /// Plane wave `e_γ(β) = (2L+1)^{-d/2} e^{2iπ γ·β/(2L+1)}`, unit norm.
    pub fn plane_wave<T: Real>(&self, freq: usize) -> Vec<Complex<T>> {
        let g = self.coords(freq);
        let n = T::from_count(self.side);
        let scale = n.powf(-T::from_count(self.dim) / T::lit(2.0));
        (0..self.n_sites)
            .map(|site| {
                let b = self.coords(site);
                let phase: T = (0..self.dim)
                    .map(|j| T::from_i64(g[j] * b[j]).unwrap())
                    .sum::<T>()
                    * T::lit(2.0)
                    * T::PI()
                    / n;
                Complex::from_polar(scale, phase)
            })
            .collect()
    }

    fn transform<T: Real>(&self, data: &mut [Complex<T>], dir: Direction) {
        let n = self.side;
        let mut planner = FftPlanner::<T>::new();
        let fft: Arc<dyn Fft<T>> = match dir {
            Direction::Forward => planner.plan_fft_forward(n),
            Direction::Inverse => planner.plan_fft_inverse(n),
        };
        let l = self.half_side as i64;
        let nf = T::from_count(n);
        let two_pi_over_n = T::lit(2.0) * T::PI() / nf;
        // Offsets o = β + L are what the FFT sees. For frequency γ the
        // centred sum picks up a phase e^{±2iπγL/n} relative to bin γ mod n.
        let phases: Vec<Complex<T>> = (-l..=l)
            .map(|g| {
                let sign = match dir {
                    Direction::Forward => T::one(),
                    Direction::Inverse => -T::one(),
                };
                Complex::from_polar(T::one(), sign * two_pi_over_n * T::from_i64(g * l).unwrap())
            })
            .collect();
        let scale = nf.sqrt().recip();
        let mut line = vec![Complex::new(T::zero(), T::zero()); n];
        let mut scratch = vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
        let total = self.n_sites;
        for axis in 0..self.dim {
            let stride = self.stride(axis);
            for start in 0..total {
                if !(start / stride).is_multiple_of(n) {
                    continue;
                }
                match dir {
                    Direction::Forward => {
                        for (o, slot) in line.iter_mut().enumerate() {
                            *slot = data[start + o * stride];
                        }
                        fft.process_with_scratch(&mut line, &mut scratch);
                        for (gi, ph) in phases.iter().enumerate() {
                            let g = gi as i64 - l;
                            let bin = g.rem_euclid(n as i64) as usize;
                            data[start + gi * stride] = line[bin] * *ph * scale;
                        }
                    }
                    Direction::Inverse => {
                        for (gi, ph) in phases.iter().enumerate() {
                            let g = gi as i64 - l;
                            let bin = g.rem_euclid(n as i64) as usize;
                            line[bin] = data[start + gi * stride] * *ph;
                        }
                        fft.process_with_scratch(&mut line, &mut scratch);
                        for (o, v) in line.iter().enumerate() {
                            data[start + o * stride] = *v * scale;
                        }
                    }
                }
            }
        }
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::SizeMismatch { expected, got });
    }
    Ok(())
}

#[derive(Clone, Copy)]
enum Direction {
    Forward,
    Inverse,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(Lattice::new(0, 2), Err(Error::UnsupportedDimension(0))));
        assert!(matches!(Lattice::new(4, 2), Err(Error::UnsupportedDimension(4))));
        assert!(matches!(Lattice::new(1, 0), Err(Error::InvalidHalfSide(0))));
    }

    #[test]
    fn site_counts() {
        assert_eq!(Lattice::new(1, 2).unwrap().n_sites(), 5);
        assert_eq!(Lattice::new(2, 1).unwrap().n_sites(), 9);
        assert_eq!(Lattice::new(3, 4).unwrap().n_sites(), 729);
    }

    #[test]
    fn periodic_wrap_in_one_dimension() {
        let lat = Lattice::new(1, 2).unwrap();
        assert_eq!(lat.coords(4)[0], 2);
        let nb: Vec<i64> = lat.neighbors(4).iter().map(|&y| lat.coords(y)[0]).collect();
        assert_eq!(nb, vec![1, -2]);
    }

    #[test]
    fn neighbors_are_symmetric_and_coords_roundtrip() {
        for (d, l) in [(1, 3), (2, 2), (3, 1)] {
            let lat = Lattice::new(d, l).unwrap();
            for x in 0..lat.n_sites() {
                let c = lat.coords(x);
                assert!(c[..d].iter().all(|&v| v.abs() <= l as i64));
                assert_eq!(lat.site(&c), x);
                assert_eq!(lat.neighbors(x).len(), 2 * d);
                for &y in lat.neighbors(x) {
                    assert!(lat.neighbors(y).contains(&x));
                    assert_eq!(lat.torus_distance(x, y), 1);
                }
            }
        }
    }

    #[test]
    fn stencil_on_delta() {
        let lat = Lattice::new(1, 1).unwrap();
        let v = lat.apply_neg_laplacian(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(v, vec![2.0, -1.0, -1.0]);
        assert!(lat.apply_neg_laplacian(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn constants_are_harmonic() {
        let lat = Lattice::new(2, 3).unwrap();
        let u = vec![0.7f64; lat.n_sites()];
        assert!(lat.apply_neg_laplacian(&u).unwrap().iter().all(|v: &f64| v.abs() < 1e-15));
        assert_eq!(lat.dirichlet_energy(&u).unwrap(), 0.0);
    }

    #[test]
    fn delta_energy() {
        let lat = Lattice::new(1, 2).unwrap();
        let e = lat.dirichlet_energy(&[1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(e, 2.0);
    }

    #[test]
    fn constant_maps_to_zero_frequency() {
        let lat = Lattice::new(2, 2).unwrap();
        let c = (lat.n_sites() as f64).sqrt().recip();
        let u = vec![Complex::new(c, 0.0); lat.n_sites()];
        let hat = lat.dft(&u).unwrap();
        let zero = lat.site(&[0, 0]);
        for (g, v) in hat.iter().enumerate() {
            let want = if g == zero { 1.0 } else { 0.0 };
            assert!((v - Complex::new(want, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn works_in_single_precision() {
        let lat = Lattice::new(1, 3).unwrap();
        let u: Vec<f32> = (0..7).map(|i| i as f32).collect();
        let e = lat.dirichlet_energy(&u).unwrap();
        let ef = lat.dirichlet_energy_fourier(&u).unwrap();
        assert!((e - ef).abs() < 1e-3 * e);
    }
}
