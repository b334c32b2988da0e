use std::fmt;

use serde::{Deserialize, Serialize};

use super::plan::{ExperimentKind, ExperimentPlan};
use super::stats::{log_log_slope, non_increasing, origin_fit, Series};
use super::parallel_map;
use crate::disorder::{restrict_hamiltonian, sample_potential, Boundary, Region};
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::spectral::{dense_eigenvalues, HamiltonianOperator, DENSE_LIMIT};

/// Interval sweeps of the spectral statistics run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatesConfig {
    /// Center of the eigenvalue-count intervals; `None` picks `2d + v_max/2`.
    pub wegner_center: Option<f64>,
    pub wegner_widths: Vec<f64>,
    /// Energy window tiled by disjoint intervals of each width for the
    /// two-eigenvalue probability.
    pub minami_window: (f64, f64),
    pub minami_widths: Vec<f64>,
    /// Sub-box sides for the low-eigenvalue probability `P[E₀^N ≤ ℓ^{-2}]`.
    pub lifshitz_sides: Vec<usize>,
    /// `η` values of the small-gap probability `P[E₁ - E₀ ≤ η L^{-d}]`.
    pub gap_etas: Vec<f64>,
}

impl Default for EstimatesConfig {
    fn default() -> Self {
        Self {
            wegner_center: None,
            wegner_widths: vec![0.02, 0.04, 0.08],
            minami_window: (0.0, 0.4),
            minami_widths: vec![0.01, 0.02, 0.04],
            lifshitz_sides: vec![4, 6, 8, 10],
            gap_etas: vec![0.05, 0.1, 0.2, 0.4],
        }
    }
}

#[derive(Debug, Clone, Default)]
struct Tally {
    wegner: Vec<usize>,
    minami_hits: Vec<usize>,
    minami_slots: Vec<usize>,
    gap_hits: Vec<usize>,
    lifshitz_hits: Vec<usize>,
    lifshitz_boxes: Vec<usize>,
}

impl Tally {
    fn add(&mut self, other: &Tally) {
        let acc = |a: &mut Vec<usize>, b: &[usize]| {
            if a.is_empty() {
                a.resize(b.len(), 0);
            }
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        };
        acc(&mut self.wegner, &other.wegner);
        acc(&mut self.minami_hits, &other.minami_hits);
        acc(&mut self.minami_slots, &other.minami_slots);
        acc(&mut self.gap_hits, &other.gap_hits);
        acc(&mut self.lifshitz_hits, &other.lifshitz_hits);
        acc(&mut self.lifshitz_boxes, &other.lifshitz_boxes);
    }
}

fn count_in(ev: &[f64], lo: f64, hi: f64) -> usize {
    ev.iter().filter(|&&e| e >= lo && e < hi).count()
}

fn tally_sample(
    plan: &ExperimentPlan,
    cfg: &EstimatesConfig,
    center: f64,
    lattice: &std::sync::Arc<Lattice>,
    l_index: usize,
    sample: usize,
) -> Result<Tally> {
    let d = plan.dim;
    let l = lattice.half_side();
    let real = sample_potential::<f64>(&plan.disorder, lattice.clone(), l_index as u64, sample as u64);
    let h = HamiltonianOperator::periodic(&real);
    let ev = dense_eigenvalues(&h)?;
    let mut t = Tally::default();
    t.wegner = cfg
        .wegner_widths
        .iter()
        .map(|&w| count_in(&ev, center - w / 2.0, center + w / 2.0))
        .collect();
    let (a, b) = cfg.minami_window;
    for &w in &cfg.minami_widths {
        let slots = ((b - a) / w + 1e-9).floor() as usize;
        let hits = (0..slots)
            .filter(|&j| {
                let lo = a + j as f64 * w;
                count_in(&ev, lo, lo + w) >= 2
            })
            .count();
        t.minami_hits.push(hits);
        t.minami_slots.push(slots);
    }
    let gap = ev[1] - ev[0];
    let vol = (l as f64).powi(d as i32);
    t.gap_hits = cfg.gap_etas.iter().map(|&e| usize::from(gap <= e / vol)).collect();
    for &side in &cfg.lifshitz_sides {
        let per_axis = lattice.side() / side;
        let boxes = per_axis.pow(d as u32);
        let mut hits = 0;
        for b in 0..boxes {
            let mut lower = [0i64; 3];
            let mut rem = b;
            for axis in (0..d).rev() {
                lower[axis] = -(l as i64) + (side * (rem % per_axis)) as i64;
                rem /= per_axis;
            }
            let region = Region::new(&lower[..d], &vec![side; d], Boundary::Neumann);
            let hb = restrict_hamiltonian(&real, &region)?;
            let e0 = dense_eigenvalues(&hb)?[0];
            if e0 <= (side as f64).powi(-2) {
                hits += 1;
            }
        }
        t.lifshitz_hits.push(hits);
        t.lifshitz_boxes.push(boxes);
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatesLevel {
    pub dim: usize,
    pub l: usize,
    pub samples: usize,
    pub wegner_center: f64,
    /// `(|I|, mean eigenvalue count)`
    pub wegner: Vec<(f64, f64)>,
    /// Slope of the least-squares line through the origin.
    pub wegner_slope: f64,
    /// Largest `|count - slope |I|| / (slope |I|)`.
    pub wegner_max_relative_deviation: f64,
    /// `(|I|, P[≥ 2 eigenvalues in I])`, averaged over tiled positions
    pub minami: Vec<(f64, f64)>,
    pub minami_slope: Option<f64>,
    /// `(ℓ, P[E₀^N ≤ ℓ^{-2}], sub-boxes)`
    pub lifshitz: Vec<(usize, f64, usize)>,
    pub lifshitz_non_increasing: bool,
    /// `(η, P[E₁ - E₀ ≤ η L^{-d}])`
    pub gap_law: Vec<(f64, f64)>,
    pub gap_law_slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatesSummary {
    pub levels: Vec<EstimatesLevel>,
}

pub fn run_spectral_estimates(plan: &ExperimentPlan, cfg: &EstimatesConfig, workers: usize) -> Result<EstimatesSummary> {
    if plan.kind != ExperimentKind::Estimates {
        return Err(Error::InvalidParameter(format!("plan is a {} experiment, expected estimates", plan.kind)));
    }
    plan.validate()?;
    if cfg.minami_widths.iter().chain(&cfg.wegner_widths).any(|&w| !(w > 0.0))
        || !(cfg.minami_window.1 > cfg.minami_window.0)
    {
        return Err(Error::InvalidParameter("interval widths and window must be positive".into()));
    }
    let d = plan.dim;
    let center = cfg
        .wegner_center
        .unwrap_or(2.0 * d as f64 + plan.disorder.v_max / 2.0);
    let mut levels = vec![];
    for (li, &l) in plan.l_grid.iter().enumerate() {
        let lattice = Lattice::shared(d, l)?;
        if lattice.n_sites() > DENSE_LIMIT {
            return Err(Error::Oversize {
                sites: lattice.n_sites(),
                limit: DENSE_LIMIT,
            });
        }
        let cfg_l = EstimatesConfig {
            lifshitz_sides: cfg
                .lifshitz_sides
                .iter()
                .copied()
                .filter(|&s| s >= 1 && s <= lattice.side())
                .collect(),
            ..cfg.clone()
        };
        let samples: Vec<usize> = (0..plan.samples).collect();
        let tallies = parallel_map(workers, &samples, |&s| tally_sample(plan, &cfg_l, center, &lattice, li, s))?;
        let mut total = Tally::default();
        for t in tallies {
            total.add(&t?);
        }
        let n = plan.samples as f64;
        let wegner: Vec<(f64, f64)> = cfg_l
            .wegner_widths
            .iter()
            .zip(&total.wegner)
            .map(|(&w, &c)| (w, c as f64 / n))
            .collect();
        let wegner_slope = origin_fit(&wegner).unwrap_or(f64::NAN);
        let wegner_max_relative_deviation = wegner
            .iter()
            .map(|&(w, c)| ((c - wegner_slope * w) / (wegner_slope * w)).abs())
            .fold(0.0, f64::max);
        let minami: Vec<(f64, f64)> = cfg_l
            .minami_widths
            .iter()
            .zip(total.minami_hits.iter().zip(&total.minami_slots))
            .map(|(&w, (&h, &s))| (w, h as f64 / (s as f64 * n)))
            .collect();
        let lifshitz: Vec<(usize, f64, usize)> = cfg_l
            .lifshitz_sides
            .iter()
            .zip(total.lifshitz_hits.iter().zip(&total.lifshitz_boxes))
            .map(|(&side, (&h, &b))| (side, h as f64 / b as f64, b))
            .collect();
        let gap_law: Vec<(f64, f64)> = cfg_l
            .gap_etas
            .iter()
            .zip(&total.gap_hits)
            .map(|(&e, &h)| (e, h as f64 / n))
            .collect();
        levels.push(EstimatesLevel {
            dim: d,
            l,
            samples: plan.samples,
            wegner_center: center,
            wegner_slope,
            wegner_max_relative_deviation,
            wegner,
            minami_slope: log_log_slope(&minami),
            minami,
            lifshitz_non_increasing: non_increasing(&lifshitz.iter().map(|x| x.1).collect::<Vec<_>>()),
            lifshitz,
            gap_law_slope: log_log_slope(&gap_law),
            gap_law,
        });
    }
    Ok(EstimatesSummary { levels })
}

impl EstimatesSummary {
    pub fn series(&self) -> Vec<Series> {
        let mut out = vec![];
        for v in &self.levels {
            let mut w = Series::new(&format!("wegner_L{}", v.l), &["width", "mean_count", "fit"]);
            for &(x, y) in &v.wegner {
                w.push(vec![x, y, v.wegner_slope * x]);
            }
            let mut m = Series::new(&format!("minami_L{}", v.l), &["width", "probability"]);
            for &(x, y) in &v.minami {
                m.push(vec![x, y]);
            }
            let mut s = Series::new(&format!("lifshitz_L{}", v.l), &["side", "volume", "probability", "boxes"]);
            for &(side, p, b) in &v.lifshitz {
                s.push(vec![side as f64, (side as f64).powi(v.dim as i32), p, b as f64]);
            }
            let mut g = Series::new(&format!("gap_law_L{}", v.l), &["eta", "probability"]);
            for &(x, y) in &v.gap_law {
                g.push(vec![x, y]);
            }
            out.extend([w, m, s, g]);
        }
        out
    }
}

impl fmt::Display for EstimatesSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.levels {
            writeln!(f, "L = {} ({} samples)", v.l, v.samples)?;
            writeln!(f, "  eigenvalue count around E = {:.3}:", v.wegner_center)?;
            for &(w, c) in &v.wegner {
                writeln!(f, "    |I| = {w:<8} mean count {c:.5}  linear fit {:.5}", v.wegner_slope * w)?;
            }
            writeln!(f, "    max relative deviation from linear fit {:.4}", v.wegner_max_relative_deviation)?;
            writeln!(f, "  probability of two eigenvalues in I:")?;
            for &(w, p) in &v.minami {
                writeln!(f, "    |I| = {w:<8} P = {p:.5e}")?;
            }
            writeln!(f, "    log-log slope {}", fmt_opt(v.minami_slope))?;
            writeln!(f, "  P[E0 Neumann sub-box <= side^-2]:")?;
            for &(s, p, b) in &v.lifshitz {
                writeln!(f, "    side {s:<4} P = {p:.5e} over {b} boxes")?;
            }
            writeln!(f, "    non-increasing in side: {}", v.lifshitz_non_increasing)?;
            writeln!(f, "  P[gap <= eta L^-d]:")?;
            for &(e, p) in &v.gap_law {
                writeln!(f, "    eta = {e:<6} P = {p:.5}")?;
            }
            writeln!(f, "    log-log slope {}", fmt_opt(v.gap_law_slope))?;
        }
        Ok(())
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".into(), |v| format!("{v:.4}"))
}
