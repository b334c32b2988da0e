use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::disorder::Provenance;
use crate::error::{Error, Result};

/// Numbers measured on one successful sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub e0: f64,
    pub e1: f64,
    pub e_gp: f64,
    pub overlap: f64,
    pub gap: f64,
    /// `‖φ₀‖₄⁴`
    pub ground_four_norm4: f64,
    /// `‖∇φ₀‖²`
    pub flatness: f64,
    pub certificate_valid: bool,
    pub certificate_margin: f64,
    pub parallel_norm: f64,
    pub orthogonal_norm: f64,
    pub center0: Vec<i64>,
    pub center1: Vec<i64>,
    pub center_distance: usize,
    pub decay0: Option<f64>,
    pub decay1: Option<f64>,
    pub eig_matvecs: usize,
    pub gp_iterations: usize,
    pub gp_gradient_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub provenance: Provenance,
    pub dim: usize,
    pub l: usize,
    pub coupling: f64,
    pub metrics: Option<RunMetrics>,
    pub failure: Option<String>,
    pub wall_time_s: f64,
}

impl RunRecord {
    pub fn is_ok(&self) -> bool {
        self.metrics.is_some()
    }

    /// Equality of everything except the wall-clock time.
    pub fn same_content(&self, other: &Self) -> bool {
        self.provenance == other.provenance
            && self.dim == other.dim
            && self.l == other.l
            && self.coupling.to_bits() == other.coupling.to_bits()
            && self.failure == other.failure
            && match (&self.metrics, &other.metrics) {
                (Some(a), Some(b)) => metrics_bits_equal(a, b),
                (None, None) => true,
                _ => false,
            }
    }

    /// Names of the per-record invariants this record breaks at `slack`.
    pub fn violations(&self, slack: f64) -> Vec<&'static str> {
        let Some(m) = &self.metrics else {
            return vec![];
        };
        let mut out = vec![];
        if m.e_gp < m.e0 - slack {
            out.push("E_gp below E0");
        }
        if m.e_gp > m.e0 + self.coupling * m.ground_four_norm4 + slack {
            out.push("E_gp above E0 + U|phi0|_4^4");
        }
        if m.flatness > m.e0 + slack {
            out.push("flatness above E0");
        }
        if m.certificate_valid && m.certificate_margin < -slack {
            out.push("certificate inequality");
        }
        out
    }
}

fn metrics_bits_equal(a: &RunMetrics, b: &RunMetrics) -> bool {
    let f = |x: f64, y: f64| x.to_bits() == y.to_bits();
    let o = |x: Option<f64>, y: Option<f64>| match (x, y) {
        (Some(x), Some(y)) => f(x, y),
        (None, None) => true,
        _ => false,
    };
    f(a.e0, b.e0)
        && f(a.e1, b.e1)
        && f(a.e_gp, b.e_gp)
        && f(a.overlap, b.overlap)
        && f(a.gap, b.gap)
        && f(a.ground_four_norm4, b.ground_four_norm4)
        && f(a.flatness, b.flatness)
        && a.certificate_valid == b.certificate_valid
        && f(a.certificate_margin, b.certificate_margin)
        && f(a.parallel_norm, b.parallel_norm)
        && f(a.orthogonal_norm, b.orthogonal_norm)
        && a.center0 == b.center0
        && a.center1 == b.center1
        && a.center_distance == b.center_distance
        && o(a.decay0, b.decay0)
        && o(a.decay1, b.decay1)
        && a.eig_matvecs == b.eig_matvecs
        && a.gp_iterations == b.gp_iterations
        && f(a.gp_gradient_norm, b.gp_gradient_norm)
}

/// Appends records as JSON lines.
pub fn write_records(path: &Path, records: &[RunRecord]) -> Result<()> {
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| Error::Record(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BadLine {
    /// 1-based line number
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReadOutcome {
    pub records: Vec<RunRecord>,
    pub bad_lines: Vec<BadLine>,
}

/// Reads every parseable record; lines that fail to parse (for example a
/// truncated tail) are reported instead of aborting the read.
pub fn read_records(path: &Path) -> Result<ReadOutcome> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = vec![];
    let mut bad_lines = vec![];
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<RunRecord>(&line) {
            Ok(r) => records.push(r),
            Err(e) => bad_lines.push(BadLine {
                line: i + 1,
                message: e.to_string(),
            }),
        }
    }
    Ok(ReadOutcome { records, bad_lines })
}
