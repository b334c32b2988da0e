use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::scale_f;
use crate::disorder::{DisorderSpec, Distribution};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Condense,
    Spectrum,
    Scaling,
    Estimates,
    Shells,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ExperimentKind::Condense => "condense",
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::Scaling => "scaling",
            ExperimentKind::Estimates => "estimates",
            ExperimentKind::Shells => "shells",
        };
        f.write_str(s)
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "condense" => ExperimentKind::Condense,
            "spectrum" => ExperimentKind::Spectrum,
            "scaling" => ExperimentKind::Scaling,
            "estimates" => ExperimentKind::Estimates,
            "shells" => ExperimentKind::Shells,
            other => return Err(Error::InvalidParameter(format!("unknown experiment {other:?}"))),
        })
    }
}

/// Coupling `U(L)` as a function of the box size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CouplingSchedule {
    /// `U(L) = c L^{-d} [1 + (log L)^{d-2/d}]^{-1} f_d(log L)^{-1} (log L)^{-1}`
    Theorem { c: f64 },
    /// One value per grid entry, or a single value used for every `L`.
    Explicit(Vec<f64>),
}

/// `1 + (log L)^{d - 2/d}`, the bracket shared by the admissible coupling and
/// the gap estimate in the discrete setting.
pub fn log_bracket(dim: usize, l: usize) -> f64 {
    let d = dim as f64;
    1.0 + (l as f64).ln().powf(d - 2.0 / d)
}

pub fn theorem_coupling(c: f64, dim: usize, l: usize) -> Result<f64> {
    let log_l = (l as f64).ln();
    if !(log_l > 0.0) {
        return Err(Error::InvalidParameter(format!("theorem schedule needs L ≥ 2, got {l}")));
    }
    let f = scale_f(dim, log_l)?;
    Ok(c * (l as f64).powi(-(dim as i32)) / log_bracket(dim, l) / f / log_l)
}

/// `η(L) = √|U L^d [1 + (log L)^{d-2/d}] f_d(log L)|`
pub fn eta(coupling: f64, dim: usize, l: usize) -> Result<f64> {
    let f = scale_f(dim, (l as f64).ln())?;
    Ok((coupling * (l as f64).powi(dim as i32) * log_bracket(dim, l) * f).abs().sqrt())
}

impl CouplingSchedule {
    pub fn coupling(&self, dim: usize, l: usize, l_index: usize) -> Result<f64> {
        match self {
            CouplingSchedule::Theorem { c } => theorem_coupling(*c, dim, l),
            CouplingSchedule::Explicit(values) => match values.len() {
                0 => Err(Error::InvalidParameter("empty coupling list".into())),
                1 => Ok(values[0]),
                _ => values.get(l_index).copied().ok_or_else(|| {
                    Error::InvalidParameter(format!("no coupling given for grid entry {l_index}"))
                }),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub kind: ExperimentKind,
    pub dim: usize,
    pub l_grid: Vec<usize>,
    pub schedule: CouplingSchedule,
    pub samples: usize,
    pub disorder: DisorderSpec,
    pub tol_eig: f64,
    pub tol_gp: f64,
    pub out: Option<PathBuf>,
    /// Threshold multiplier for "close" localization centers,
    /// `|x₀ - x₁| ≤ λ log L`.
    pub lambda: f64,
}

impl ExperimentPlan {
    pub fn new(kind: ExperimentKind, dim: usize, l_grid: Vec<usize>, samples: usize, seed: u64) -> Self {
        Self {
            kind,
            dim,
            l_grid,
            schedule: CouplingSchedule::Theorem { c: 1.0 },
            samples,
            disorder: DisorderSpec::uniform(1.0, seed),
            tol_eig: 1e-10,
            tol_gp: 1e-9,
            out: None,
            lambda: 8.0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.disorder.seed
    }

    pub fn with_schedule(mut self, schedule: CouplingSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_distribution(mut self, distribution: Distribution, v_max: f64) -> Self {
        self.disorder.distribution = distribution;
        self.disorder.v_max = v_max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(Error::UnsupportedDimension(self.dim));
        }
        if self.l_grid.is_empty() {
            return Err(Error::InvalidParameter("empty L grid".into()));
        }
        if self.l_grid[0] < 1 || self.l_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!(
                "L grid must be positive and strictly increasing, got {:?}",
                self.l_grid
            )));
        }
        if self.samples < 1 {
            return Err(Error::InvalidParameter("samples must be at least 1".into()));
        }
        if !(self.tol_eig > 0.0 && self.tol_gp > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        if let CouplingSchedule::Explicit(v) = &self.schedule {
            if v.iter().any(|&u| !(u >= 0.0)) {
                return Err(Error::InvalidParameter("couplings must be nonnegative".into()));
            }
            if v.len() > 1 && v.len() != self.l_grid.len() {
                return Err(Error::InvalidParameter(format!(
                    "{} couplings for {} grid entries",
                    v.len(),
                    self.l_grid.len()
                )));
            }
        }
        self.disorder.validate()
    }

    pub fn coupling(&self, l_index: usize) -> Result<f64> {
        self.schedule.coupling(self.dim, self.l_grid[l_index], l_index)
    }

    /// Reads a `key = value` config file. Blank lines and `#` comments are
    /// ignored; unknown keys are errors.
    pub fn from_config_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_config_str(&text, path)
    }

    pub fn from_config_str(text: &str, path: &Path) -> Result<Self> {
        let mut plan = Self::new(ExperimentKind::Condense, 1, vec![], 1, 0);
        let mut c = None;
        let mut seed_seen = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Config {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            plan.set(key, value).map_err(|e| err(e.to_string()))?;
            match key {
                "c" => c = Some(value.parse::<f64>().map_err(|e| err(e.to_string()))?),
                "seed" => seed_seen = true,
                _ => {}
            }
        }
        if let (Some(c), CouplingSchedule::Theorem { .. }) = (c, &plan.schedule) {
            plan.schedule = CouplingSchedule::Theorem { c };
        }
        if !seed_seen {
            return Err(Error::Config {
                path: path.to_path_buf(),
                line: 0,
                message: "missing mandatory key `seed`".into(),
            });
        }
        Ok(plan)
    }

    /// Applies one config key; the same keys back the command line flags.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let num = |v: &str| -> Result<f64> {
            v.parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("{key}: {v:?} is not a number")))
        };
        let int = |v: &str| -> Result<usize> {
            v.parse::<usize>()
                .map_err(|_| Error::InvalidParameter(format!("{key}: {v:?} is not a nonnegative integer")))
        };
        match key {
            "dim" => self.dim = int(value)?,
            "l_grid" => {
                self.l_grid = value
                    .split(',')
                    .map(|s| int(s.trim()))
                    .collect::<Result<Vec<_>>>()?
            }
            "schedule" => {
                self.schedule = match value {
                    "theorem" => CouplingSchedule::Theorem {
                        c: match self.schedule {
                            CouplingSchedule::Theorem { c } => c,
                            _ => 1.0,
                        },
                    },
                    "zero" => CouplingSchedule::Explicit(vec![0.0]),
                    list => CouplingSchedule::Explicit(
                        list.trim_start_matches("explicit:")
                            .split(',')
                            .map(|s| num(s.trim()))
                            .collect::<Result<Vec<_>>>()?,
                    ),
                }
            }
            "c" => {
                let c = num(value)?;
                if let CouplingSchedule::Theorem { .. } = self.schedule {
                    self.schedule = CouplingSchedule::Theorem { c };
                }
            }
            "samples" => self.samples = int(value)?,
            "seed" => {
                self.disorder.seed = value
                    .parse::<u64>()
                    .map_err(|_| Error::InvalidParameter(format!("seed: {value:?} is not a u64")))?
            }
            "out" => self.out = Some(PathBuf::from(value)),
            "tol_eig" => self.tol_eig = num(value)?,
            "tol_gp" => self.tol_gp = num(value)?,
            "distribution" => self.disorder.distribution = value.parse()?,
            "v_max" => self.disorder.v_max = num(value)?,
            "experiment" => self.kind = value.parse()?,
            "lambda" => self.lambda = num(value)?,
            other => return Err(Error::InvalidParameter(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Serializes to the config format understood by [`Self::from_config_str`].
    pub fn to_config_string(&self) -> String {
        let grid: Vec<String> = self.l_grid.iter().map(|l| l.to_string()).collect();
        let mut lines = vec![
            format!("experiment = {}", self.kind),
            format!("dim = {}", self.dim),
            format!("l_grid = {}", grid.join(",")),
        ];
        match &self.schedule {
            CouplingSchedule::Theorem { c } => {
                lines.push("schedule = theorem".into());
                lines.push(format!("c = {c:?}"));
            }
            CouplingSchedule::Explicit(v) => {
                let v: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
                lines.push(format!("schedule = {}", v.join(",")));
            }
        }
        lines.push(format!("samples = {}", self.samples));
        lines.push(format!("seed = {}", self.disorder.seed));
        lines.push(format!("distribution = {}", self.disorder.distribution));
        lines.push(format!("v_max = {:?}", self.disorder.v_max));
        lines.push(format!("tol_eig = {:e}", self.tol_eig));
        lines.push(format!("tol_gp = {:e}", self.tol_gp));
        lines.push(format!("lambda = {:?}", self.lambda));
        if let Some(out) = &self.out {
            lines.push(format!("out = {}", out.display()));
        }
        lines.join("\n") + "\n"
    }
}
