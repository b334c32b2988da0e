//! Gross-Pitaevskii energy `ℰ(φ) = ⟨Hφ, φ⟩ + U‖φ‖₄⁴` on the unit sphere, its
//! minimizer, and the projection certificate comparing the minimizer with the
//! linear ground state.

use crate::error::{Error, Result};
use crate::lattice::check_len;
use crate::scalar::{dot, norm2, normalize, Real};
use crate::spectral::{lowest_eigenpairs, EigenSolution, HamiltonianOperator, SymmetricOperator};

#[derive(Debug, Clone, Copy)]
pub struct GpProblem<'a, T: Real = f64> {
    pub hamiltonian: &'a HamiltonianOperator<T>,
    pub coupling: T,
}

impl<'a, T: Real> GpProblem<'a, T> {
    pub fn new(hamiltonian: &'a HamiltonianOperator<T>, coupling: T) -> Result<Self> {
        if !(coupling >= T::zero()) || !coupling.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "coupling must be a finite nonnegative number, got {coupling}"
            )));
        }
        Ok(Self {
            hamiltonian,
            coupling,
        })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    /// Energy given a precomputed `Hφ`.
    fn energy_with(&self, phi: &[T], h_phi: &[T]) -> T {
        let quartic: T = phi.iter().map(|&x| x * x * x * x).sum();
        dot(h_phi, phi) + self.coupling * quartic
    }

    /// Euclidean gradient given a precomputed `Hφ`.
    fn gradient_with(&self, phi: &[T], h_phi: &[T]) -> Vec<T> {
        let two = T::lit(2.0);
        let four_u = T::lit(4.0) * self.coupling;
        phi.iter()
            .zip(h_phi)
            .map(|(&x, &hx)| two * hx + four_u * x * x * x)
            .collect()
    }
}

/// `⟨Hφ, φ⟩ + U Σ_x φ(x)⁴`
pub fn gp_energy<T: Real>(p: &GpProblem<'_, T>, phi: &[T]) -> Result<T> {
    check_len(p.dim(), phi.len())?;
    let h_phi = p.hamiltonian.apply(phi);
    Ok(p.energy_with(phi, &h_phi))
}

/// `∇ℰ(φ) = 2Hφ + 4Uφ³` (ambient, not projected on the sphere).
pub fn gp_gradient<T: Real>(p: &GpProblem<'_, T>, phi: &[T]) -> Result<Vec<T>> {
    check_len(p.dim(), phi.len())?;
    let h_phi = p.hamiltonian.apply(phi);
    Ok(p.gradient_with(phi, &h_phi))
}

#[derive(Debug, Clone)]
pub struct GpOptions {
    /// Stop when the sphere-projected gradient norm is below this...
    pub g_tol: f64,
    /// ...and the last relative energy change is below this.
    pub e_rel_tol: f64,
    pub max_iter: usize,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    pub max_backtracks: usize,
    /// Residual tolerance of the linear ground state used as warm start.
    pub eig_tol: f64,
    pub seed: u64,
}

impl Default for GpOptions {
    fn default() -> Self {
        Self {
            g_tol: 1e-9,
            e_rel_tol: 1e-12,
            max_iter: 200_000,
            armijo: 1e-4,
            max_backtracks: 60,
            eig_tol: 1e-10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GpResult<T: Real = f64> {
    /// Unit norm, entrywise nonnegative.
    pub minimizer: Vec<T>,
    pub energy: T,
    /// Initial energy followed by the energy after each accepted step, obtained
    /// by subtracting the computed decrease.
    pub trace: Vec<T>,
    pub gradient_norm: T,
    pub iterations: usize,
    pub converged: bool,
}

struct Iterate<T> {
    phi: Vec<T>,
    energy: T,
    projected_gradient: Vec<T>,
    gradient_norm: T,
}

fn evaluate<T: Real>(p: &GpProblem<'_, T>, phi: Vec<T>) -> Iterate<T> {
    let h_phi = p.hamiltonian.apply(&phi);
    let energy = p.energy_with(&phi, &h_phi);
    let mut g = p.gradient_with(&phi, &h_phi);
    let radial = dot(&g, &phi);
    for (gi, &x) in g.iter_mut().zip(&phi) {
        *gi -= radial * x;
    }
    let gradient_norm = norm2(&g);
    Iterate {
        phi,
        energy,
        projected_gradient: g,
        gradient_norm,
    }
}

/// `E(φ) - E(ψ)`, both fields taken on the unit sphere. Near a minimizer the
/// two energies agree to rounding level, so the difference is then formed
/// from `s = ψ - φ` directly, with the stored norms divided out so that
/// normalization error does not masquerade as an energy change.
fn energy_drop<T: Real>(p: &GpProblem<'_, T>, cur: &Iterate<T>, next: &Iterate<T>, floor: T) -> T {
    let direct = cur.energy - next.energy;
    if direct.abs() > T::lit(1e3) * floor {
        return direct;
    }
    let (a, b) = (&next.phi, &cur.phi);
    let s: Vec<T> = a.iter().zip(b).map(|(&x, &y)| x - y).collect();
    let hs = p.hamiltonian.apply(&s);
    let hb = p.hamiltonian.apply(b);
    // quadratic part Q, quartic part R, squared norm N; d* are ψ-minus-φ
    let (mut dq, mut dr, mut dn) = (T::zero(), T::zero(), T::zero());
    let (mut qb, mut rb, mut nb) = (T::zero(), T::zero(), T::zero());
    for i in 0..s.len() {
        let sum = a[i] + b[i];
        dq += hs[i] * sum;
        dr += s[i] * sum * (a[i] * a[i] + b[i] * b[i]);
        dn += s[i] * sum;
        let b2 = b[i] * b[i];
        qb += hb[i] * b[i];
        rb += b2 * b2;
        nb += b2;
    }
    let na = nb + dn;
    let quad = (dq * nb - qb * dn) / (na * nb);
    let quart = (dr * nb * nb - rb * dn * (na + nb)) / (na * na * nb * nb);
    -(quad + p.coupling * quart)
}

/// Modulus then renormalization, the retraction used by the descent.
fn retract<T: Real>(mut v: Vec<T>) -> Option<Vec<T>> {
    v.iter_mut().for_each(|x| *x = x.abs());
    let n = normalize(&mut v);
    (n > T::zero() && n.is_finite()).then_some(v)
}

/// Projected gradient descent on the unit sphere with Armijo backtracking.
///
/// Without `init` the linear ground state `φ₀` is computed and used as the
/// starting point. Each iterate is replaced by its entrywise modulus, which
/// never raises the energy, so the result is nonnegative.
///
/// The first trial step is `1 / (2λ_max + 12U‖φ‖∞²)`; later trial steps use
/// the Barzilai-Borwein length of the previous step, always followed by
/// backtracking. Energy decreases are computed from the step itself once they
/// reach rounding level, and the trace accumulates those decreases, so it is
/// non-increasing by construction. Steps whose decrease is nonnegative but
/// below the Armijo threshold are still taken if the gradient shrinks.
pub fn minimize_gp<T: Real>(
    p: &GpProblem<'_, T>,
    init: Option<&[T]>,
    opts: &GpOptions,
) -> Result<GpResult<T>> {
    let n = p.dim();
    let start = match init {
        Some(x) => {
            check_len(n, x.len())?;
            x.to_vec()
        }
        None => {
            let eig = lowest_eigenpairs(p.hamiltonian, 1, opts.eig_tol, opts.seed)?;
            eig.vectors.into_iter().next().expect("one eigenvector")
        }
    };
    let start = retract(start)
        .ok_or_else(|| Error::InvalidParameter("initial field is zero or not finite".into()))?;

    let lambda_max = p.hamiltonian.spectral_upper_bound();
    let step_bound = |phi: &[T]| {
        let sup = phi.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
        (T::lit(2.0) * lambda_max + T::lit(12.0) * p.coupling * sup * sup).recip()
    };
    let tau_min = step_bound(&start) * T::lit(1e-6);
    let tau_max = step_bound(&start) * T::lit(1e4);

    let mut cur = evaluate(p, start);
    let mut trace = vec![cur.energy];
    let mut tau = step_bound(&cur.phi);
    let mut last_rel_change = T::zero();
    let g_tol = T::lit(opts.g_tol);
    let e_tol = T::lit(opts.e_rel_tol);
    let c1 = T::lit(opts.armijo);
    let noise = T::lit(32.0) * T::epsilon();
    let mut iterations = 0;

    loop {
        if cur.gradient_norm <= g_tol && last_rel_change <= e_tol {
            return Ok(finish(cur, trace, iterations, true));
        }
        if iterations >= opts.max_iter {
            return Ok(finish(cur, trace, iterations, false));
        }
        iterations += 1;

        let g2 = cur.gradient_norm * cur.gradient_norm;
        let floor = noise * cur.energy.abs().max(T::min_positive_value());
        let mut trial_tau = tau;
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            let cand: Vec<T> = cur
                .phi
                .iter()
                .zip(&cur.projected_gradient)
                .map(|(&x, &g)| x - trial_tau * g)
                .collect();
            if let Some(cand) = retract(cand) {
                let next = evaluate(p, cand);
                let drop = energy_drop(p, &cur, &next, floor);
                let sufficient = drop >= c1 * trial_tau * g2;
                let stationary = drop >= T::zero() && next.gradient_norm < cur.gradient_norm;
                if sufficient || stationary {
                    accepted = Some((next, trial_tau, drop));
                    break;
                }
            }
            trial_tau *= T::lit(0.5);
        }
        let Some((next, used_tau, drop)) = accepted else {
            // no admissible step: the energy cannot be lowered any further
            let done = cur.gradient_norm <= g_tol;
            return Ok(finish(cur, trace, iterations, done));
        };

        // Barzilai-Borwein length for the next trial
        let mut ss = T::zero();
        let mut sy = T::zero();
        for i in 0..n {
            let s = next.phi[i] - cur.phi[i];
            let y = next.projected_gradient[i] - cur.projected_gradient[i];
            ss += s * s;
            sy += s * y;
        }
        tau = if sy > T::zero() { ss / sy } else { used_tau * T::lit(2.0) };
        tau = tau.max(tau_min).min(tau_max);

        last_rel_change = drop / next.energy.abs().max(T::min_positive_value());
        let last = *trace.last().expect("trace starts with the initial energy");
        trace.push(last - drop);
        cur = next;
    }
}

fn finish<T: Real>(cur: Iterate<T>, trace: Vec<T>, iterations: usize, converged: bool) -> GpResult<T> {
    GpResult {
        energy: cur.energy,
        minimizer: cur.phi,
        trace,
        gradient_norm: cur.gradient_norm,
        iterations,
        converged,
    }
}

/// Inputs and outcome of the projection argument
/// `(E₁ - E^GP)‖(1-π₀)φ^GP‖ ≤ (E^GP - E₀)‖π₀φ^GP‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct CondensationCertificate<T: Real = f64> {
    pub e0: T,
    pub e1: T,
    pub e_gp: T,
    /// `‖π₀φ^GP‖ = |⟨φ₀, φ^GP⟩|`
    pub parallel_norm: T,
    /// `‖(1-π₀)φ^GP‖`
    pub orthogonal_norm: T,
    pub overlap: T,
    /// `E₁ > E^GP` and the gap is resolvable.
    pub valid: bool,
    /// `(E^GP - E₀)‖π₀φ‖ - (E₁ - E^GP)‖(1-π₀)φ‖`; nonnegative when the
    /// inequality holds.
    pub margin: T,
}

impl<T: Real> CondensationCertificate<T> {
    /// The inequality holds within `slack` (vacuously true when invalid).
    pub fn holds(&self, slack: T) -> bool {
        !self.valid || self.margin >= -slack
    }
}

/// Gap below which the certificate is not asserted.
pub const CERTIFICATE_MIN_GAP: f64 = 1e-12;

pub fn certificate<T: Real>(
    p: &GpProblem<'_, T>,
    eig: &EigenSolution<T>,
    gp: &GpResult<T>,
) -> Result<CondensationCertificate<T>> {
    if eig.values.len() < 2 {
        return Err(Error::InvalidParameter("certificate needs E₀ and E₁".into()));
    }
    if !gp.converged {
        return Err(Error::InvalidParameter("certificate needs a converged GP minimizer".into()));
    }
    check_len(p.dim(), gp.minimizer.len())?;
    let phi0 = eig.ground_state();
    check_len(p.dim(), phi0.len())?;
    let (e0, e1, e_gp) = (eig.values[0], eig.values[1], gp.energy);
    let overlap = dot(phi0, &gp.minimizer);
    let parallel_norm = overlap.abs();
    let orth: Vec<T> = gp
        .minimizer
        .iter()
        .zip(phi0)
        .map(|(&x, &y)| x - overlap * y)
        .collect();
    let orthogonal_norm = norm2(&orth);
    let valid = e1 - e0 >= T::lit(CERTIFICATE_MIN_GAP) && e1 > e_gp;
    let margin = (e_gp - e0) * parallel_norm - (e1 - e_gp) * orthogonal_norm;
    Ok(CondensationCertificate {
        e0,
        e1,
        e_gp,
        parallel_norm,
        orthogonal_norm,
        overlap,
        valid,
        margin,
    })
}
