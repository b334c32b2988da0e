use std::fmt;

use num_complex::Complex;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::plan::{ExperimentKind, ExperimentPlan};
use super::stats::{Quantiles, Series};
use super::parallel_map;
use crate::analysis::{
    default_epsilon, delta_perturbed_trial, flat_fourier_trial, four_norm_bound_check, shell_decompose,
};
use crate::disorder::{sample_potential, standard_normal, unit_f64, Provenance, Stream};
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::scalar::normalize;
use crate::spectral::{lowest_eigenpairs, HamiltonianOperator};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellsConfig {
    pub eps: Vec<f64>,
    /// Number of disorder ground states scored per `L` (capped by the plan's
    /// sample count).
    pub ground_states: usize,
    /// Relative slack of the shell sup-norm bounds.
    pub slack: f64,
}

impl Default for ShellsConfig {
    fn default() -> Self {
        Self {
            eps: vec![0.5, 0.1, 0.02],
            ground_states: 20,
            slack: 1e-9,
        }
    }
}

/// Random real unit field whose Fourier support is `{γ : h(γ) ≤ ε²}`, so that
/// `⟨-Δu, u⟩ ≤ ε²`. Half of the draws use independent random phases; the
/// other half use phases of a wave packet centered at a random site, which
/// concentrates the field and makes `‖u‖₄` large.
pub fn random_low_energy_field<R: RngCore>(lattice: &Lattice, eps: f64, rng: &mut R) -> Result<Vec<f64>> {
    let n = lattice.n_sites();
    let d = lattice.dim();
    let side = lattice.side() as f64;
    let coherent = rng.next_u64() & 1 == 1;
    let center = lattice.coords((rng.next_u64() % n as u64) as usize);
    let mut hat = vec![Complex::new(0.0, 0.0); n];
    for g in 0..n {
        if lattice.symbol::<f64>(g) > eps * eps {
            continue;
        }
        let c = lattice.coords(g);
        let mut neg_c = [0i64; 3];
        for j in 0..d {
            neg_c[j] = -c[j];
        }
        let neg = lattice.site(&neg_c[..d]);
        if neg < g {
            continue;
        }
        let (amp, phase) = if coherent {
            let dot: f64 = (0..d).map(|j| (c[j] * center[j]) as f64).sum();
            (unit_f64(rng), -2.0 * std::f64::consts::PI * dot / side)
        } else {
            (standard_normal(rng).abs(), 2.0 * std::f64::consts::PI * unit_f64(rng))
        };
        if neg == g {
            hat[g] = Complex::new(amp * phase.cos().signum(), 0.0);
        } else {
            hat[g] = Complex::from_polar(amp, phase);
            hat[neg] = hat[g].conj();
        }
    }
    let mut u: Vec<f64> = lattice.idft(&hat)?.into_iter().map(|z| z.re).collect();
    if !(normalize(&mut u) > 0.0) {
        // all drawn amplitudes vanished; fall back to the flat field
        u = vec![(n as f64).sqrt().recip(); n];
    }
    Ok(u)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellsEpsilon {
    pub eps: f64,
    pub fields: usize,
    /// Fields with at least one shell above its sup-norm bound.
    pub sup_violations: usize,
    /// Fields whose weighted shell mass exceeds the lattice kinetic bound.
    pub kinetic_violations: usize,
    /// `‖u‖₄ / g_d(ε)` over the random corpus.
    pub corpus_ratio: Quantiles,
    pub delta_trial_ratio: f64,
    pub flat_trial_ratio: f64,
    /// `⟨-Δu, u⟩ / ε²` of the flat-Fourier trial field.
    pub flat_trial_kinetic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellsLevel {
    pub dim: usize,
    pub l: usize,
    pub per_eps: Vec<ShellsEpsilon>,
    /// Largest over smallest per-`ε` corpus maximum ratio.
    pub corpus_c_spread: f64,
    /// Largest ratio reached by either trial family.
    pub trial_c: f64,
    pub ground_state_ratio: Quantiles,
    pub ground_state_eps: Quantiles,
    pub ground_state_sup_violations: usize,
}

impl ShellsLevel {
    pub fn ground_state_excess(&self) -> f64 {
        self.ground_state_ratio.max / self.trial_c
    }

    pub fn sup_violations(&self) -> usize {
        self.per_eps.iter().map(|e| e.sup_violations + e.kinetic_violations).sum::<usize>()
            + self.ground_state_sup_violations
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellsSummary {
    pub levels: Vec<ShellsLevel>,
}

impl ShellsSummary {
    pub fn violations(&self) -> usize {
        self.levels.iter().map(|l| l.sup_violations()).sum()
    }
}

struct FieldScore {
    ratio: f64,
    sup_violation: bool,
    kinetic_violation: bool,
}

fn score_field(lattice: &Lattice, u: &[f64], eps: f64, slack: f64) -> Result<FieldScore> {
    let shells = shell_decompose(lattice, u, eps)?;
    let report = four_norm_bound_check(lattice, u, eps)?;
    let kinetic_violation =
        shells.shell_kinetic_lower > shells.lattice_constant * shells.kinetic * (1.0 + slack) + 1e-15;
    Ok(FieldScore {
        ratio: report.ratio,
        sup_violation: !shells.sup_bound_violations(slack).is_empty(),
        kinetic_violation,
    })
}

fn normalized(mut u: Vec<f64>) -> Vec<f64> {
    normalize(&mut u);
    u
}

pub fn run_shell_experiment(plan: &ExperimentPlan, cfg: &ShellsConfig, workers: usize) -> Result<ShellsSummary> {
    if plan.kind != ExperimentKind::Shells {
        return Err(Error::InvalidParameter(format!("plan is a {} experiment, expected shells", plan.kind)));
    }
    plan.validate()?;
    if cfg.eps.is_empty() || cfg.eps.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(Error::InvalidParameter("shell ε values must lie in (0, 1)".into()));
    }
    let d = plan.dim;
    let mut levels = vec![];
    for (li, &l) in plan.l_grid.iter().enumerate() {
        let lattice = Lattice::shared(d, l)?;
        let mut per_eps = vec![];
        for (ei, &eps) in cfg.eps.iter().enumerate() {
            let idx: Vec<usize> = (0..plan.samples).collect();
            let scores = parallel_map(workers, &idx, |&s| {
                let prov = Provenance::new(plan.seed(), li as u64, (ei * plan.samples + s) as u64);
                let u = random_low_energy_field(&lattice, eps, &mut prov.rng(Stream::Auxiliary))?;
                score_field(&lattice, &u, eps, cfg.slack)
            })?
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
            let delta = four_norm_bound_check(&lattice, &normalized(delta_perturbed_trial(&lattice, eps)), eps)?;
            let flat = four_norm_bound_check(&lattice, &normalized(flat_fourier_trial(&lattice, eps)?), eps)?;
            per_eps.push(ShellsEpsilon {
                eps,
                fields: scores.len(),
                sup_violations: scores.iter().filter(|s| s.sup_violation).count(),
                kinetic_violations: scores.iter().filter(|s| s.kinetic_violation).count(),
                corpus_ratio: Quantiles::of(scores.iter().map(|s| s.ratio)),
                delta_trial_ratio: delta.ratio,
                flat_trial_ratio: flat.ratio,
                flat_trial_kinetic: flat.kinetic / (eps * eps),
            });
        }
        let maxima: Vec<f64> = per_eps.iter().map(|e| e.corpus_ratio.max).collect();
        let corpus_c_spread = maxima.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            / maxima.iter().copied().fold(f64::INFINITY, f64::min);
        let trial_c = per_eps
            .iter()
            .flat_map(|e| [e.delta_trial_ratio, e.flat_trial_ratio])
            .fold(f64::NEG_INFINITY, f64::max);

        let count = cfg.ground_states.min(plan.samples);
        let idx: Vec<usize> = (0..count).collect();
        let ground = parallel_map(workers, &idx, |&s| -> Result<(f64, f64, bool)> {
            let real = sample_potential::<f64>(&plan.disorder, lattice.clone(), li as u64, s as u64);
            let h = HamiltonianOperator::periodic(&real);
            let seed = real.provenance.rng(Stream::EigenStart).next_u64();
            let eig = lowest_eigenpairs(&h, 1, plan.tol_eig, seed)?;
            let phi0 = eig.ground_state();
            let eps = default_epsilon(&lattice, phi0)?.min(1.0 - 1e-12);
            let score = score_field(&lattice, phi0, eps, cfg.slack)?;
            Ok((score.ratio, eps, score.sup_violation || score.kinetic_violation))
        })?
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        levels.push(ShellsLevel {
            dim: d,
            l,
            per_eps,
            corpus_c_spread,
            trial_c,
            ground_state_ratio: Quantiles::of(ground.iter().map(|g| g.0)),
            ground_state_eps: Quantiles::of(ground.iter().map(|g| g.1)),
            ground_state_sup_violations: ground.iter().filter(|g| g.2).count(),
        });
    }
    Ok(ShellsSummary { levels })
}

impl ShellsSummary {
    pub fn series(&self) -> Vec<Series> {
        let mut out = vec![];
        for v in &self.levels {
            let mut s = Series::new(
                &format!("ratios_L{}", v.l),
                &["eps", "corpus_max", "corpus_median", "corpus_q10", "corpus_q90", "delta_trial", "flat_trial"],
            );
            for e in &v.per_eps {
                s.push(vec![
                    e.eps,
                    e.corpus_ratio.max,
                    e.corpus_ratio.median,
                    e.corpus_ratio.q10,
                    e.corpus_ratio.q90,
                    e.delta_trial_ratio,
                    e.flat_trial_ratio,
                ]);
            }
            out.push(s);
        }
        out
    }
}

impl fmt::Display for ShellsSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.levels {
            writeln!(f, "d = {}, L = {}", v.dim, v.l)?;
            writeln!(
                f,
                "  {:>7} {:>6} {:>5} {:>5} {:>10} {:>10} {:>10} {:>10}",
                "eps", "fields", "sup!", "kin!", "ratio_max", "ratio_med", "delta", "flat"
            )?;
            for e in &v.per_eps {
                writeln!(
                    f,
                    "  {:>7} {:>6} {:>5} {:>5} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
                    e.eps,
                    e.fields,
                    e.sup_violations,
                    e.kinetic_violations,
                    e.corpus_ratio.max,
                    e.corpus_ratio.median,
                    e.delta_trial_ratio,
                    e.flat_trial_ratio
                )?;
            }
            writeln!(
                f,
                "  corpus C spread {:.3}; trial C {:.4}; ground states: max ratio {:.4} ({:.3} x trial C), median eps {:.4}, bound violations {}",
                v.corpus_c_spread,
                v.trial_c,
                v.ground_state_ratio.max,
                v.ground_state_excess(),
                v.ground_state_eps.median,
                v.ground_state_sup_violations
            )?;
        }
        Ok(())
    }
}
