use std::fmt;

use serde::{Deserialize, Serialize};

use super::plan::{eta, ExperimentPlan};
use super::records::RunRecord;
use super::stats::{non_decreasing, Quantiles, Series, BAND_COLUMNS};
use super::INVARIANT_SLACK;
use crate::error::Result;

fn ok_records<'a>(records: &'a [RunRecord], l: usize) -> impl Iterator<Item = &'a super::RunMetrics> + 'a {
    records.iter().filter(move |r| r.l == l).filter_map(|r| r.metrics.as_ref())
}

fn failures(records: &[RunRecord], l: usize) -> usize {
    records.iter().filter(|r| r.l == l && r.metrics.is_none()).count()
}

fn violations(records: &[RunRecord], l: usize) -> usize {
    records
        .iter()
        .filter(|r| r.l == l && !r.violations(INVARIANT_SLACK).is_empty())
        .count()
}

fn band_columns(x: &str) -> Vec<&str> {
    std::iter::once(x).chain(BAND_COLUMNS).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondensationLevel {
    pub l: usize,
    pub coupling: f64,
    pub eta: f64,
    pub completed: usize,
    pub failed: usize,
    pub overlap: Quantiles,
    pub gap: Quantiles,
    /// Fraction of completed samples with overlap `≥ 1 - η(L)`.
    pub fraction_within_eta: f64,
    pub median_one_minus_overlap: f64,
    pub certificate_valid: usize,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondensationSummary {
    pub levels: Vec<CondensationLevel>,
    pub median_overlap_non_decreasing: bool,
    pub fraction_non_decreasing: bool,
    pub failed: usize,
    pub violations: usize,
}

impl CondensationSummary {
    pub fn from_records(plan: &ExperimentPlan, records: &[RunRecord]) -> Result<Self> {
        let mut levels = vec![];
        for (li, &l) in plan.l_grid.iter().enumerate() {
            let coupling = plan.coupling(li)?;
            let eta = eta(coupling, plan.dim, l)?;
            let ms: Vec<_> = ok_records(records, l).collect();
            let within = ms.iter().filter(|m| m.overlap >= 1.0 - eta).count();
            let overlap = Quantiles::of(ms.iter().map(|m| m.overlap));
            levels.push(CondensationLevel {
                l,
                coupling,
                eta,
                completed: ms.len(),
                failed: failures(records, l),
                overlap,
                gap: Quantiles::of(ms.iter().map(|m| m.gap)),
                fraction_within_eta: if ms.is_empty() { f64::NAN } else { within as f64 / ms.len() as f64 },
                median_one_minus_overlap: 1.0 - overlap.median,
                certificate_valid: ms.iter().filter(|m| m.certificate_valid).count(),
                violations: violations(records, l),
            });
        }
        let medians: Vec<f64> = levels.iter().map(|v| v.overlap.median).collect();
        let fractions: Vec<f64> = levels.iter().map(|v| v.fraction_within_eta).collect();
        Ok(Self {
            median_overlap_non_decreasing: non_decreasing(&medians),
            fraction_non_decreasing: non_decreasing(&fractions),
            failed: levels.iter().map(|v| v.failed).sum(),
            violations: levels.iter().map(|v| v.violations).sum(),
            levels,
        })
    }

    pub fn series(&self) -> Vec<Series> {
        let mut overlap = Series::new("overlap", &band_columns("L"));
        let mut gap = Series::new("gap", &band_columns("L"));
        let mut frac = Series::new("fraction_within_eta", &["L", "fraction", "eta", "median_one_minus_overlap"]);
        for v in &self.levels {
            let l = v.l as f64;
            overlap.push(std::iter::once(l).chain(v.overlap.band()).collect());
            gap.push(std::iter::once(l).chain(v.gap.band()).collect());
            frac.push(vec![l, v.fraction_within_eta, v.eta, v.median_one_minus_overlap]);
        }
        vec![overlap, gap, frac]
    }
}

impl fmt::Display for CondensationSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>6} {:>11} {:>8} {:>5} {:>4} {:>10} {:>10} {:>10} {:>10} {:>9} {:>5}",
            "L", "U", "eta", "ok", "fail", "ov_q10", "ov_median", "ov_q90", "gap_med", "frac_eta", "viol"
        )?;
        for v in &self.levels {
            writeln!(
                f,
                "{:>6} {:>11.4e} {:>8.4} {:>5} {:>4} {:>10.6} {:>10.6} {:>10.6} {:>10.3e} {:>9.4} {:>5}",
                v.l,
                v.coupling,
                v.eta,
                v.completed,
                v.failed,
                v.overlap.q10,
                v.overlap.median,
                v.overlap.q90,
                v.gap.median,
                v.fraction_within_eta,
                v.violations
            )?;
        }
        writeln!(
            f,
            "median overlap non-decreasing: {}; fraction within eta non-decreasing: {}",
            self.median_overlap_non_decreasing, self.fraction_non_decreasing
        )?;
        write!(f, "failed samples: {}; invariant violations: {}", self.failed, self.violations)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingLevel {
    pub l: usize,
    pub completed: usize,
    pub failed: usize,
    pub e0: Quantiles,
    /// `E₀ (log L)^{2/d}`
    pub normalized: Quantiles,
    pub flatness_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingSummary {
    pub levels: Vec<ScalingLevel>,
    /// Smallest and largest per-L median of the normalized statistic.
    pub normalized_min: f64,
    pub normalized_max: f64,
    pub band_ratio: f64,
    pub failed: usize,
    pub violations: usize,
}

impl ScalingSummary {
    pub fn from_records(plan: &ExperimentPlan, records: &[RunRecord]) -> Self {
        let d = plan.dim as f64;
        let mut levels = vec![];
        for &l in &plan.l_grid {
            let ms: Vec<_> = ok_records(records, l).collect();
            let scale = (l as f64).ln().powf(2.0 / d);
            levels.push(ScalingLevel {
                l,
                completed: ms.len(),
                failed: failures(records, l),
                e0: Quantiles::of(ms.iter().map(|m| m.e0)),
                normalized: Quantiles::of(ms.iter().map(|m| m.e0 * scale)),
                flatness_violations: ms.iter().filter(|m| m.flatness > m.e0 + INVARIANT_SLACK).count(),
            });
        }
        let meds: Vec<f64> = levels.iter().map(|v| v.normalized.median).collect();
        let normalized_min = meds.iter().copied().fold(f64::INFINITY, f64::min);
        let normalized_max = meds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self {
            normalized_min,
            normalized_max,
            band_ratio: normalized_max / normalized_min,
            failed: levels.iter().map(|v| v.failed).sum(),
            violations: plan.l_grid.iter().map(|&l| violations(records, l)).sum(),
            levels,
        }
    }

    pub fn series(&self) -> Vec<Series> {
        let mut e0 = Series::new("e0", &band_columns("L"));
        let mut norm = Series::new("e0_normalized", &band_columns("L"));
        for v in &self.levels {
            let l = v.l as f64;
            e0.push(std::iter::once(l).chain(v.e0.band()).collect());
            norm.push(std::iter::once(l).chain(v.normalized.band()).collect());
        }
        vec![e0, norm]
    }
}

impl fmt::Display for ScalingSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>6} {:>5} {:>4} {:>11} {:>11} {:>11} {:>11} {:>6}",
            "L", "ok", "fail", "E0_median", "norm_q10", "norm_med", "norm_q90", "flat!"
        )?;
        for v in &self.levels {
            writeln!(
                f,
                "{:>6} {:>5} {:>4} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e} {:>6}",
                v.l,
                v.completed,
                v.failed,
                v.e0.median,
                v.normalized.q10,
                v.normalized.median,
                v.normalized.q90,
                v.flatness_violations
            )?;
        }
        write!(
            f,
            "normalized median band [{:.4e}, {:.4e}], ratio {:.3}; failed {}; invariant violations {}",
            self.normalized_min, self.normalized_max, self.band_ratio, self.failed, self.violations
        )
    }
}

/// Gap statistics split by the distance of the two lowest localization
/// centers, `close` meaning `|x₀ - x₁| ≤ λ log L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumLevel {
    pub l: usize,
    pub completed: usize,
    pub failed: usize,
    /// `(E₁ - E₀) L^d`
    pub scaled_gap: Quantiles,
    pub close_centers: usize,
    pub scaled_gap_close: Quantiles,
    pub scaled_gap_far: Quantiles,
    pub center_distance: Quantiles,
    pub decay_rate: Quantiles,
    /// `(η, P[gap ≤ η L^{-d}])`
    pub small_gap_probability: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub lambda: f64,
    pub levels: Vec<SpectrumLevel>,
    pub failed: usize,
    pub violations: usize,
}

pub const SPECTRUM_ETAS: [f64; 5] = [0.05, 0.1, 0.2, 0.4, 0.8];

impl SpectrumSummary {
    pub fn from_records(plan: &ExperimentPlan, records: &[RunRecord]) -> Result<Self> {
        let d = plan.dim as i32;
        let mut levels = vec![];
        for &l in &plan.l_grid {
            let ms: Vec<_> = ok_records(records, l).collect();
            let vol = (l as f64).powi(d);
            let threshold = plan.lambda * (l as f64).ln();
            let (close, far): (Vec<&&super::RunMetrics>, Vec<&&super::RunMetrics>) = ms.iter().partition(|m| m.center_distance as f64 <= threshold);
            let probs = SPECTRUM_ETAS
                .iter()
                .map(|&e| {
                    let hit = ms.iter().filter(|m| m.gap * vol <= e).count();
                    (e, hit as f64 / ms.len().max(1) as f64)
                })
                .collect();
            levels.push(SpectrumLevel {
                l,
                completed: ms.len(),
                failed: failures(records, l),
                scaled_gap: Quantiles::of(ms.iter().map(|m| m.gap * vol)),
                close_centers: close.len(),
                scaled_gap_close: Quantiles::of(close.iter().map(|m| m.gap * vol)),
                scaled_gap_far: Quantiles::of(far.iter().map(|m| m.gap * vol)),
                center_distance: Quantiles::of(ms.iter().map(|m| m.center_distance as f64)),
                decay_rate: Quantiles::of(ms.iter().filter_map(|m| m.decay0)),
                small_gap_probability: probs,
            });
        }
        Ok(Self {
            lambda: plan.lambda,
            failed: levels.iter().map(|v| v.failed).sum(),
            violations: plan.l_grid.iter().map(|&l| violations(records, l)).sum(),
            levels,
        })
    }

    pub fn series(&self) -> Vec<Series> {
        let mut gap = Series::new("scaled_gap", &band_columns("L"));
        let mut dist = Series::new("center_distance", &band_columns("L"));
        let mut cols = vec!["L".to_string()];
        cols.extend(SPECTRUM_ETAS.iter().map(|e| format!("P_eta_{e}")));
        let col_refs: Vec<&str> = cols.iter().map(|s| s.as_str()).collect();
        let mut probs = Series::new("small_gap_probability", &col_refs);
        for v in &self.levels {
            let l = v.l as f64;
            gap.push(std::iter::once(l).chain(v.scaled_gap.band()).collect());
            dist.push(std::iter::once(l).chain(v.center_distance.band()).collect());
            probs.push(std::iter::once(l).chain(v.small_gap_probability.iter().map(|p| p.1)).collect());
        }
        vec![gap, dist, probs]
    }
}

impl fmt::Display for SpectrumSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>6} {:>5} {:>4} {:>11} {:>6} {:>11} {:>11} {:>9} {:>9}",
            "L", "ok", "fail", "gapL^d_med", "close", "close_med", "far_med", "dist_med", "alpha_med"
        )?;
        for v in &self.levels {
            writeln!(
                f,
                "{:>6} {:>5} {:>4} {:>11.4e} {:>6} {:>11.4e} {:>11.4e} {:>9.1} {:>9.4}",
                v.l,
                v.completed,
                v.failed,
                v.scaled_gap.median,
                v.close_centers,
                v.scaled_gap_close.median,
                v.scaled_gap_far.median,
                v.center_distance.median,
                v.decay_rate.median
            )?;
        }
        write!(
            f,
            "close means |x0 - x1| <= {} log L; failed {}; invariant violations {}",
            self.lambda, self.failed, self.violations
        )
    }
}
