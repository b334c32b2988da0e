//! Seeded disorder ensembles over `(d, L, U(L))` grids.
//!
//! Every `(L, sample)` pair is an independent task keyed by its provenance, so
//! results do not depend on the number of workers or on scheduling. Tasks are
//! distributed by a rayon pool and collected back in task order.

mod estimates;
mod plan;
mod records;
mod shells;
mod stats;
mod summary;

use std::time::Instant;

use rand::RngCore;
use rayon::prelude::*;

pub use estimates::{run_spectral_estimates, EstimatesConfig, EstimatesLevel, EstimatesSummary};
pub use plan::{eta, log_bracket, theorem_coupling, CouplingSchedule, ExperimentKind, ExperimentPlan};
pub use records::{read_records, write_records, BadLine, ReadOutcome, RunMetrics, RunRecord};
pub use shells::{random_low_energy_field, run_shell_experiment, ShellsConfig, ShellsEpsilon, ShellsLevel, ShellsSummary};
pub use stats::{linear_fit, log_log_slope, non_decreasing, non_increasing, origin_fit, quantile, Quantiles, Series};
pub use summary::{
    CondensationLevel, CondensationSummary, ScalingLevel, ScalingSummary, SpectrumLevel, SpectrumSummary,
};

use crate::analysis::{gap_and_overlap, localization_center};
use crate::disorder::{sample_potential, Provenance, Stream};
use crate::error::{Error, Result};
use crate::gp::{certificate, minimize_gp, GpOptions, GpProblem};
use crate::lattice::Lattice;
use crate::spectral::{lowest_eigenpairs, HamiltonianOperator};

/// Slack used when checking per-record invariants.
pub const INVARIANT_SLACK: f64 = 1e-9;

/// Maps `f` over `items` on a pool of `workers` threads, keeping item order.
pub fn parallel_map<I, R, F>(workers: usize, items: &[I], f: F) -> Result<Vec<R>>
where
    I: Sync,
    R: Send,
    F: Fn(&I) -> R + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    Ok(pool.install(|| items.par_iter().map(&f).collect()))
}

fn tasks(plan: &ExperimentPlan) -> Vec<(usize, usize)> {
    (0..plan.l_grid.len())
        .flat_map(|li| (0..plan.samples).map(move |s| (li, s)))
        .collect()
}

/// Runs the full per-sample pipeline (potential, two lowest eigenpairs, GP
/// minimizer, certificate, localization centers) for one provenance.
pub fn run_sample(plan: &ExperimentPlan, l_index: usize, sample_index: usize) -> RunRecord {
    let start = Instant::now();
    let l = plan.l_grid[l_index];
    let provenance = Provenance::new(plan.seed(), l_index as u64, sample_index as u64);
    let coupling = plan.coupling(l_index);
    let outcome = coupling.and_then(|u| measure(plan, l, u, l_index, sample_index));
    let (metrics, failure) = match outcome {
        Ok(m) => (Some(m), None),
        Err(e) => (None, Some(e.to_string())),
    };
    RunRecord {
        provenance,
        dim: plan.dim,
        l,
        coupling: plan.coupling(l_index).unwrap_or(f64::NAN),
        metrics,
        failure,
        wall_time_s: start.elapsed().as_secs_f64(),
    }
}

/// Recomputes the record with the given provenance under `plan`.
pub fn replay(plan: &ExperimentPlan, provenance: &Provenance) -> Result<RunRecord> {
    if provenance.master_seed != plan.seed() {
        return Err(Error::InvalidParameter("provenance seed differs from the plan seed".into()));
    }
    let li = provenance.l_index as usize;
    if li >= plan.l_grid.len() {
        return Err(Error::InvalidParameter(format!("grid index {li} out of range")));
    }
    Ok(run_sample(plan, li, provenance.sample_index as usize))
}

fn measure(plan: &ExperimentPlan, l: usize, coupling: f64, l_index: usize, sample: usize) -> Result<RunMetrics> {
    let lattice = Lattice::shared(plan.dim, l)?;
    let realization = sample_potential::<f64>(&plan.disorder, lattice.clone(), l_index as u64, sample as u64);
    let h = HamiltonianOperator::periodic(&realization);
    let eig_seed = realization.provenance.rng(Stream::EigenStart).next_u64();
    let eig = lowest_eigenpairs(&h, 2, plan.tol_eig, eig_seed)?;
    let problem = GpProblem::new(&h, coupling)?;
    let opts = GpOptions {
        g_tol: plan.tol_gp,
        eig_tol: plan.tol_eig,
        seed: realization.provenance.rng(Stream::GpStart).next_u64(),
        ..GpOptions::default()
    };
    let gp = minimize_gp(&problem, Some(eig.ground_state()), &opts)?;
    if !gp.converged {
        return Err(Error::NotConverged {
            iterations: gp.iterations,
            worst_residual: gp.gradient_norm,
            tolerance: plan.tol_gp,
            residuals: vec![gp.gradient_norm],
        });
    }
    let cert = certificate(&problem, &eig, &gp)?;
    let go = gap_and_overlap(&lattice, &eig, &gp)?;
    let loc0 = localization_center(&lattice, &eig.vectors[0])?;
    let loc1 = localization_center(&lattice, &eig.vectors[1])?;
    let d = plan.dim;
    Ok(RunMetrics {
        e0: eig.values[0],
        e1: eig.values[1],
        e_gp: gp.energy,
        overlap: go.overlap,
        gap: go.gap,
        ground_four_norm4: go.ground_four_norm4,
        flatness: go.flatness,
        certificate_valid: cert.valid,
        certificate_margin: cert.margin,
        parallel_norm: cert.parallel_norm,
        orthogonal_norm: cert.orthogonal_norm,
        center0: loc0.center_coords[..d].to_vec(),
        center1: loc1.center_coords[..d].to_vec(),
        center_distance: lattice.torus_distance(loc0.center, loc1.center),
        decay0: loc0.decay_rate,
        decay1: loc1.decay_rate,
        eig_matvecs: eig.iterations,
        gp_iterations: gp.iterations,
        gp_gradient_norm: gp.gradient_norm,
    })
}

/// All records of a plan, in `(L, sample)` order.
pub fn run_records(plan: &ExperimentPlan, workers: usize) -> Result<Vec<RunRecord>> {
    plan.validate()?;
    let tasks = tasks(plan);
    parallel_map(workers, &tasks, |&(li, s)| run_sample(plan, li, s))
}

fn expect_kind(plan: &ExperimentPlan, kind: ExperimentKind) -> Result<()> {
    if plan.kind != kind {
        return Err(Error::InvalidParameter(format!("plan is a {} experiment, expected {kind}", plan.kind)));
    }
    Ok(())
}

pub fn run_condensation(plan: &ExperimentPlan, workers: usize) -> Result<(Vec<RunRecord>, CondensationSummary)> {
    expect_kind(plan, ExperimentKind::Condense)?;
    let records = run_records(plan, workers)?;
    let summary = CondensationSummary::from_records(plan, &records)?;
    Ok((records, summary))
}

pub fn run_groundstate_scaling(plan: &ExperimentPlan, workers: usize) -> Result<(Vec<RunRecord>, ScalingSummary)> {
    expect_kind(plan, ExperimentKind::Scaling)?;
    let records = run_records(plan, workers)?;
    let summary = ScalingSummary::from_records(plan, &records);
    Ok((records, summary))
}

pub fn run_spectrum(plan: &ExperimentPlan, workers: usize) -> Result<(Vec<RunRecord>, SpectrumSummary)> {
    expect_kind(plan, ExperimentKind::Spectrum)?;
    let records = run_records(plan, workers)?;
    let summary = SpectrumSummary::from_records(plan, &records)?;
    Ok((records, summary))
}

/// Compares two record sets as multisets of content (wall time ignored).
pub fn same_record_multiset(a: &[RunRecord], b: &[RunRecord]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let key = |r: &RunRecord| (r.provenance.l_index, r.provenance.sample_index);
    let mut a: Vec<&RunRecord> = a.iter().collect();
    let mut b: Vec<&RunRecord> = b.iter().collect();
    a.sort_by_key(|r| key(r));
    b.sort_by_key(|r| key(r));
    a.iter().zip(&b).all(|(x, y)| x.same_content(y))
}
