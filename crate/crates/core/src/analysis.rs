//! Scalar diagnostics: ℓᵖ norms, the scale functions `f_d`/`g_d`, the
//! frequency-shell decomposition behind the ℓ⁴ bound, localization centers
//! and the gap/overlap summary of a GP run.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::gp::GpResult;
use crate::lattice::{check_len, Coord, Lattice};
use crate::scalar::{dot, Real};
use crate::spectral::EigenSolution;

/// `‖u‖_p` for `p ∈ {2, 4, ∞}`.
pub fn lp_norm<T: Real>(u: &[T], p: f64) -> Result<T> {
    if p == 2.0 {
        Ok(dot(u, u).sqrt())
    } else if p == 4.0 {
        Ok(four_norm4(u).sqrt().sqrt())
    } else if p == f64::INFINITY {
        Ok(u.iter().fold(T::zero(), |m, &x| m.max(x.abs())))
    } else {
        Err(Error::InvalidParameter(format!("unsupported norm exponent {p}")))
    }
}

/// `‖u‖₄⁴`
pub fn four_norm4<T: Real>(u: &[T]) -> T {
    u.iter().map(|&x| x * x * x * x).sum()
}

/// `f_d(ξ)`: `ξ^{-1/4}` for `d ≤ 3`, `ξ^{-1/d} log ξ` for `d = 4`, `ξ^{-1/d}` above.
pub fn scale_f(d: usize, xi: f64) -> Result<f64> {
    if !(xi > 0.0) || d == 0 {
        return Err(Error::InvalidParameter(format!("f_d needs d ≥ 1 and ξ > 0, got d={d}, ξ={xi}")));
    }
    Ok(match d {
        1..=3 => xi.powf(-0.25),
        4 => xi.powf(-0.25) * xi.ln(),
        _ => xi.powf(-1.0 / d as f64),
    })
}

/// `g_d(ε)`: `ε^{d/4}` for `d ≤ 3`, `ε|log ε|` for `d = 4`, `ε` above.
pub fn scale_g(d: usize, eps: f64) -> Result<f64> {
    if !(eps > 0.0) || d == 0 {
        return Err(Error::InvalidParameter(format!("g_d needs d ≥ 1 and ε > 0, got d={d}, ε={eps}")));
    }
    Ok(match d {
        1..=3 => eps.powf(d as f64 / 4.0),
        4 => eps * eps.ln().abs(),
        _ => eps,
    })
}

pub fn scale_functions(d: usize, xi: f64, eps: f64) -> Result<(f64, f64)> {
    Ok((scale_f(d, xi)?, scale_g(d, eps)?))
}

/// Index `k_ε ∈ ℕ` with `-log ε ≤ k_ε < -log ε + 1`.
pub fn shell_count(eps: f64) -> usize {
    (-eps.ln()).ceil().max(0.0) as usize
}

/// `u = Σ_k u_k` with `û_0` supported on `|γ| < εL`, `û_k` on
/// `e^{k-1}εL ≤ |γ| < e^kεL` for `1 ≤ k < k_ε`, and the last shell on
/// `|γ| ≥ e^{k_ε-1}εL`.
#[derive(Debug, Clone)]
pub struct ShellDecomposition<T: Real = f64> {
    pub eps: f64,
    pub k_eps: usize,
    pub shells: Vec<Vec<T>>,
    /// `‖u_k‖₂`
    pub l2: Vec<T>,
    /// `‖u_k‖∞`
    pub sup: Vec<T>,
    /// `‖u_k‖₂ (e^k ε)^{d/2}`, the sup-norm bound for `k ≥ 1`.
    pub sup_bound: Vec<T>,
    /// `Σ_k e^{2k} ‖u_k‖₂²`
    pub weighted_mass: T,
    /// `Σ_{k≥1} e^{2k-2} ε² ‖u_k‖₂²`
    pub shell_kinetic_lower: T,
    /// Constant with `shell_kinetic_lower ≤ lattice_constant · ⟨-Δu, u⟩`,
    /// from `h(γ) ≥ 16|γ|²/(2L+1)²`.
    pub lattice_constant: f64,
    /// `⟨-Δu, u⟩`
    pub kinetic: T,
}

impl<T: Real> ShellDecomposition<T> {
    /// Shells with `k ≥ 1` whose sup norm exceeds the bound by more than the
    /// relative slack.
    pub fn sup_bound_violations(&self, slack: f64) -> Vec<usize> {
        (1..self.shells.len())
            .filter(|&k| self.sup[k] > self.sup_bound[k] * T::lit(1.0 + slack))
            .collect()
    }
}

/// Shell membership of frequency norm `r` given `εL`.
fn shell_of(r: f64, eps_l: f64, k_eps: usize) -> usize {
    if k_eps == 0 || r < eps_l {
        return 0;
    }
    // first k with r < e^k εL, capped at the last shell
    let mut k = 1;
    while k < k_eps && r >= (k as f64).exp() * eps_l {
        k += 1;
    }
    k
}

pub fn shell_decompose<T: Real>(lattice: &Lattice, u: &[T], eps: f64) -> Result<ShellDecomposition<T>> {
    check_len(lattice.n_sites(), u.len())?;
    let l = lattice.half_side() as f64;
    if !(eps > 0.0) || eps * l < 1.0 {
        return Err(Error::InvalidParameter(format!("shell decomposition needs εL ≥ 1, got ε={eps}, L={l}")));
    }
    let d = lattice.dim() as f64;
    let k_eps = shell_count(eps);
    let n_shells = k_eps + 1;
    let eps_l = eps * l;
    let hat = lattice.dft_real(u)?;
    let membership: Vec<usize> = (0..lattice.n_sites())
        .map(|g| shell_of(lattice.frequency_norm(g), eps_l, k_eps))
        .collect();
    let zero = Complex::new(T::zero(), T::zero());
    let mut shells = Vec::with_capacity(n_shells);
    for k in 0..n_shells {
        let masked: Vec<Complex<T>> = hat
            .iter()
            .zip(&membership)
            .map(|(&c, &m)| if m == k { c } else { zero })
            .collect();
        let back = lattice.idft(&masked)?;
        shells.push(back.into_iter().map(|c| c.re).collect::<Vec<T>>());
    }
    let l2: Vec<T> = shells.iter().map(|s| dot(s, s).sqrt()).collect();
    let sup: Vec<T> = shells
        .iter()
        .map(|s| s.iter().fold(T::zero(), |m, &x| m.max(x.abs())))
        .collect();
    let sup_bound: Vec<T> = l2
        .iter()
        .enumerate()
        .map(|(k, &n)| n * T::lit(((k as f64).exp() * eps).powf(d / 2.0)))
        .collect();
    let weighted_mass = l2
        .iter()
        .enumerate()
        .map(|(k, &n)| T::lit((2.0 * k as f64).exp()) * n * n)
        .sum();
    let shell_kinetic_lower = l2
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &n)| T::lit((2.0 * k as f64 - 2.0).exp() * eps * eps) * n * n)
        .sum();
    let side = lattice.side() as f64;
    Ok(ShellDecomposition {
        eps,
        k_eps,
        shells,
        l2,
        sup,
        sup_bound,
        weighted_mass,
        shell_kinetic_lower,
        lattice_constant: side * side / (16.0 * l * l),
        kinetic: lattice.dirichlet_energy(u)?,
    })
}

/// Outcome of comparing `‖u‖₄` with `g_d(ε)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourNormReport {
    pub four_norm: f64,
    pub g: f64,
    /// `‖u‖₄ / g_d(ε)`
    pub ratio: f64,
    pub kinetic: f64,
    /// `|‖u‖₂ - 1| ≤ 1e-10`
    pub normalized: bool,
    /// `⟨-Δu, u⟩ ≤ ε²`
    pub low_energy: bool,
    /// `εL ≥ 1`
    pub scale_ok: bool,
}

impl FourNormReport {
    pub fn preconditions_hold(&self) -> bool {
        self.normalized && self.low_energy && self.scale_ok
    }
}

/// Evaluates `‖u‖₄ / g_d(ε)`. Precondition failures are flagged in the report
/// rather than rejected, so trial families with `⟨-Δu,u⟩ ≤ Cε²` can be scored.
pub fn four_norm_bound_check<T: Real>(lattice: &Lattice, u: &[T], eps: f64) -> Result<FourNormReport> {
    check_len(lattice.n_sites(), u.len())?;
    let g = scale_g(lattice.dim(), eps)?;
    let four_norm = lp_norm(u, 4.0)?.to_f64_lossy();
    let kinetic = lattice.dirichlet_energy(u)?.to_f64_lossy();
    let norm = lp_norm(u, 2.0)?.to_f64_lossy();
    Ok(FourNormReport {
        four_norm,
        g,
        ratio: four_norm / g,
        kinetic,
        normalized: (norm - 1.0).abs() <= 1e-10,
        low_energy: kinetic <= eps * eps * (1.0 + 1e-12),
        scale_ok: eps * lattice.half_side() as f64 >= 1.0,
    })
}

/// `ε = √⟨-Δu,u⟩` clipped below at `1/L` so that `εL ≥ 1`.
pub fn default_epsilon<T: Real>(lattice: &Lattice, u: &[T]) -> Result<f64> {
    let kinetic = lattice.dirichlet_energy(u)?.to_f64_lossy().max(0.0);
    Ok(kinetic.sqrt().max(1.0 / lattice.half_side() as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationReport {
    /// Site maximizing `|u|`, lexicographically smallest on ties.
    pub center: usize,
    pub center_coords: Coord,
    pub peak: f64,
    /// Fitted rate `α̂` in `|u(x)| ≈ A e^{-α̂|x - x_c|}`; `None` when no site
    /// is left for the fit.
    pub decay_rate: Option<f64>,
    /// RMS residual of the log-linear fit.
    pub fit_residual: Option<f64>,
    /// Smallest `q̂` with `|u(x)| ≤ L^{q̂} e^{-α̂|x - x_c|}` everywhere.
    pub prefactor_exponent: Option<f64>,
    pub fitted_sites: usize,
}

/// Radius of the ball around the center excluded from the decay fit.
pub const NEAR_FIELD_RADIUS: usize = 2;
const AMPLITUDE_FLOOR: f64 = 1e-12;

pub fn localization_center<T: Real>(lattice: &Lattice, u: &[T]) -> Result<LocalizationReport> {
    check_len(lattice.n_sites(), u.len())?;
    let mut center = 0;
    let mut peak = -1.0;
    for (x, v) in u.iter().enumerate() {
        let a = v.abs().to_f64_lossy();
        if a > peak {
            peak = a;
            center = x;
        }
    }
    if !(peak > 0.0) {
        return Err(Error::InvalidParameter("localization center of the zero field".into()));
    }
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for (x, v) in u.iter().enumerate() {
        let r = lattice.torus_distance(x, center);
        let a = v.abs().to_f64_lossy();
        if r > NEAR_FIELD_RADIUS && a > AMPLITUDE_FLOOR {
            pts.push((r as f64, a.ln()));
        }
    }
    let distinct_radii = {
        let mut r: Vec<u64> = pts.iter().map(|p| p.0 as u64).collect();
        r.sort_unstable();
        r.dedup();
        r.len()
    };
    let (decay_rate, fit_residual, prefactor_exponent) = if distinct_radii >= 2 {
        let m = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let rms = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / m).sqrt();
        let alpha = -slope;
        let log_l = (lattice.half_side() as f64).ln();
        let envelope = u
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs().to_f64_lossy() > AMPLITUDE_FLOOR)
            .map(|(x, v)| v.abs().to_f64_lossy().ln() + alpha * lattice.torus_distance(x, center) as f64)
            .fold(f64::NEG_INFINITY, f64::max);
        let q = if log_l > 0.0 { Some(envelope / log_l) } else { None };
        (Some(alpha), Some(rms), q)
    } else {
        (None, None, None)
    };
    Ok(LocalizationReport {
        center,
        center_coords: lattice.coords(center),
        peak,
        decay_rate,
        fit_residual,
        prefactor_exponent,
        fitted_sites: pts.len(),
    })
}

/// Gap, overlap, flatness and ℓ⁴ mass of one realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapOverlap {
    /// `E₁ - E₀`
    pub gap: f64,
    /// `|⟨φ₀, φ^GP⟩|`, clamped to `[0, 1]`
    pub overlap: f64,
    /// `‖∇φ₀‖²`
    pub flatness: f64,
    /// `‖φ₀‖₄⁴`
    pub ground_four_norm4: f64,
}

pub fn gap_and_overlap<T: Real>(lattice: &Lattice, eig: &EigenSolution<T>, gp: &GpResult<T>) -> Result<GapOverlap> {
    let gap = eig
        .gap()
        .ok_or_else(|| Error::InvalidParameter("gap needs two eigenvalues".into()))?
        .to_f64_lossy();
    let phi0 = eig.ground_state();
    check_len(phi0.len(), gp.minimizer.len())?;
    let overlap = dot(phi0, &gp.minimizer).abs().to_f64_lossy().min(1.0);
    Ok(GapOverlap {
        gap,
        overlap,
        flatness: lattice.dirichlet_energy(phi0)?.to_f64_lossy(),
        ground_four_norm4: four_norm4(phi0).to_f64_lossy(),
    })
}

/// Trial field equal to `ε` at the origin and `(2L+1)^{-d/2}` elsewhere.
pub fn delta_perturbed_trial(lattice: &Lattice, eps: f64) -> Vec<f64> {
    let n = lattice.n_sites();
    let mut u = vec![(n as f64).sqrt().recip(); n];
    u[lattice.site(&[0, 0, 0])] = eps;
    u
}

/// Trial field with flat Fourier coefficients `(2εL+1)^{-d/2}` on `|γ| ≤ εL`.
pub fn flat_fourier_trial(lattice: &Lattice, eps: f64) -> Result<Vec<f64>> {
    let n = lattice.n_sites();
    let radius = eps * lattice.half_side() as f64;
    let amp = (2.0 * radius + 1.0).powf(-(lattice.dim() as f64) / 2.0);
    let hat: Vec<Complex<f64>> = (0..n)
        .map(|g| {
            if lattice.frequency_norm(g) <= radius {
                Complex::new(amp, 0.0)
            } else {
                Complex::new(0.0, 0.0)
            }
        })
        .collect();
    Ok(lattice.idft(&hat)?.into_iter().map(|c| c.re).collect())
}
