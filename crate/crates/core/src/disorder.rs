//! Random potentials `V_ω ≥ 0` and sub-box restrictions of `-Δ + V_ω`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Coord, Lattice, MAX_DIM};
use crate::scalar::Real;
use crate::spectral::HamiltonianOperator;

/// Single-site law of the iid potential.
#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    /// Uniform on `[0, v_max]`.
    Uniform,
    /// `v_max` with probability `p`, otherwise 0.
    Bernoulli { p: f64 },
    /// Uniform over the listed levels, each in `[0, v_max]`.
    Levels(Vec<f64>),
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distribution::Uniform => write!(f, "uniform"),
            Distribution::Bernoulli { p } => write!(f, "bernoulli:{p}"),
            Distribution::Levels(levels) => {
                let parts: Vec<String> = levels.iter().map(|v| v.to_string()).collect();
                write!(f, "levels:{}", parts.join(","))
            }
        }
    }
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |msg: &str| Error::InvalidParameter(format!("distribution {s:?}: {msg}"));
        if s == "uniform" {
            return Ok(Distribution::Uniform);
        }
        if let Some(p) = s.strip_prefix("bernoulli:") {
            let p: f64 = p.trim().parse().map_err(|_| bad("probability is not a number"))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(bad("probability outside [0, 1]"));
            }
            return Ok(Distribution::Bernoulli { p });
        }
        if let Some(list) = s.strip_prefix("levels:") {
            let levels = list
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad("level is not a number"))?;
            if levels.is_empty() {
                return Err(bad("no levels"));
            }
            return Ok(Distribution::Levels(levels));
        }
        Err(bad("expected uniform, bernoulli:<p> or levels:<v1,v2,...>"))
    }
}

impl Serialize for Distribution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Distribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderSpec {
    pub distribution: Distribution,
    pub v_max: f64,
    pub seed: u64,
}

impl Default for DisorderSpec {
    fn default() -> Self {
        Self {
            distribution: Distribution::Uniform,
            v_max: 1.0,
            seed: 0,
        }
    }
}

impl DisorderSpec {
    pub fn uniform(v_max: f64, seed: u64) -> Self {
        Self {
            distribution: Distribution::Uniform,
            v_max,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_max > 0.0 && self.v_max.is_finite()) {
            return Err(Error::InvalidParameter(format!("v_max must be positive, got {}", self.v_max)));
        }
        if let Distribution::Levels(levels) = &self.distribution {
            if levels.iter().any(|&v| !(0.0..=self.v_max).contains(&v)) {
                return Err(Error::InvalidParameter(format!(
                    "levels {levels:?} must lie in [0, {}]",
                    self.v_max
                )));
            }
        }
        Ok(())
    }

    /// Nondegenerate law with 0 in its support, the regime in which the
    /// Wegner, Minami and Lifshitz estimates are known to hold.
    pub fn is_admissible(&self) -> bool {
        match &self.distribution {
            Distribution::Uniform => true,
            Distribution::Bernoulli { p } => *p > 0.0 && *p < 1.0,
            Distribution::Levels(levels) => {
                levels.contains(&0.0) && levels.iter().any(|&v| v != levels[0])
            }
        }
    }

    fn draw(&self, rng: &mut ChaCha20Rng) -> f64 {
        match &self.distribution {
            Distribution::Uniform => self.v_max * unit_f64(rng),
            Distribution::Bernoulli { p } => {
                if unit_f64(rng) < *p {
                    self.v_max
                } else {
                    0.0
                }
            }
            Distribution::Levels(levels) => levels[(rng.next_u64() % levels.len() as u64) as usize],
        }
    }
}

/// Identifies one realization inside an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub master_seed: u64,
    pub l_index: u64,
    pub sample_index: u64,
}

/// Independent random streams derived from one provenance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Potential = 0,
    EigenStart = 1,
    GpStart = 2,
    Auxiliary = 3,
}

impl Provenance {
    pub fn new(master_seed: u64, l_index: u64, sample_index: u64) -> Self {
        Self {
            master_seed,
            l_index,
            sample_index,
        }
    }

    /// Counter-based generator keyed by the provenance triple. The keystream
    /// position plays the role of the per-site counter, so no state is shared
    /// between realizations.
    pub fn rng(&self, stream: Stream) -> ChaCha20Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.master_seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.l_index.to_le_bytes());
        key[16..24].copy_from_slice(&self.sample_index.to_le_bytes());
        key[24..].copy_from_slice(b"andrsnGP");
        let mut rng = ChaCha20Rng::from_seed(key);
        rng.set_stream(stream as u64);
        rng
    }
}

/// Uniform in `[0, 1)` with 53 random bits.
pub fn unit_f64<R: RngCore>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal via Box-Muller.
pub fn standard_normal<R: RngCore>(rng: &mut R) -> f64 {
    let u1 = 1.0 - unit_f64(rng);
    let u2 = unit_f64(rng);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[derive(Debug, Clone)]
pub struct DisorderRealization<T: Real = f64> {
    pub lattice: Arc<Lattice>,
    pub potential: Vec<T>,
    pub provenance: Provenance,
}

impl<T: Real> DisorderRealization<T> {
    /// Zero potential, handy for clean-lattice checks.
    pub fn free(lattice: Arc<Lattice>) -> Self {
        let n = lattice.n_sites();
        Self {
            lattice,
            potential: vec![T::zero(); n],
            provenance: Provenance::new(0, 0, 0),
        }
    }

    pub fn from_potential(lattice: Arc<Lattice>, potential: Vec<T>) -> Result<Self> {
        lattice.check_len(potential.len())?;
        if potential.iter().any(|v| !(*v >= T::zero())) {
            return Err(Error::InvalidParameter("potential must be nonnegative".into()));
        }
        Ok(Self {
            lattice,
            potential,
            provenance: Provenance::new(0, 0, 0),
        })
    }
}

/// Draws `V_ω` site by site from the provenance-keyed stream.
pub fn sample_potential<T: Real>(
    spec: &DisorderSpec,
    lattice: Arc<Lattice>,
    l_index: u64,
    sample_index: u64,
) -> DisorderRealization<T> {
    let provenance = Provenance::new(spec.seed, l_index, sample_index);
    let mut rng = provenance.rng(Stream::Potential);
    let potential = (0..lattice.n_sites())
        .map(|_| T::lit(spec.draw(&mut rng)))
        .collect();
    DisorderRealization {
        lattice,
        potential,
        provenance,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Boundary {
    Periodic,
    Neumann,
    Dirichlet,
}

/// Axis-aligned box `I_1 × ... × I_d` inside `[-L, L]^d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub lower: Coord,
    pub extent: [usize; MAX_DIM],
    pub boundary: Boundary,
}

impl Region {
    /// The whole torus with periodic boundary conditions.
    pub fn torus(lattice: &Lattice) -> Self {
        let l = lattice.half_side() as i64;
        let mut lower = [0; MAX_DIM];
        let mut extent = [1; MAX_DIM];
        for j in 0..lattice.dim() {
            lower[j] = -l;
            extent[j] = lattice.side();
        }
        Self {
            lower,
            extent,
            boundary: Boundary::Periodic,
        }
    }

    pub fn new(lower: &[i64], extent: &[usize], boundary: Boundary) -> Self {
        let mut lo = [0; MAX_DIM];
        let mut ex = [1; MAX_DIM];
        lo[..lower.len()].copy_from_slice(lower);
        ex[..extent.len()].copy_from_slice(extent);
        Self {
            lower: lo,
            extent: ex,
            boundary,
        }
    }

    pub fn with_boundary(&self, boundary: Boundary) -> Self {
        Self {
            boundary,
            ..self.clone()
        }
    }

    pub fn n_sites(&self, dim: usize) -> usize {
        self.extent[..dim].iter().product()
    }

    pub fn contains(&self, dim: usize, c: &Coord) -> bool {
        (0..dim).all(|j| c[j] >= self.lower[j] && c[j] < self.lower[j] + self.extent[j] as i64)
    }

    /// Global site indices in lexicographic order of local coordinates.
    pub fn sites(&self, lattice: &Lattice) -> Vec<usize> {
        let dim = lattice.dim();
        let n = self.n_sites(dim);
        let mut out = Vec::with_capacity(n);
        let mut c = [0i64; MAX_DIM];
        for local in 0..n {
            let mut rem = local;
            for j in (0..dim).rev() {
                c[j] = self.lower[j] + (rem % self.extent[j]) as i64;
                rem /= self.extent[j];
            }
            out.push(lattice.site(&c));
        }
        out
    }

    fn check_inside(&self, lattice: &Lattice) -> Result<()> {
        let dim = lattice.dim();
        if self.extent[..dim].contains(&0) {
            return Err(Error::EmptyRegion);
        }
        let l = lattice.half_side() as i64;
        for j in 0..dim {
            let hi = self.lower[j] + self.extent[j] as i64 - 1;
            if self.lower[j] < -l || hi > l {
                return Err(Error::RegionOutOfBounds(format!(
                    "axis {j}: [{}, {hi}] not within [{}, {l}]",
                    self.lower[j], -l
                )));
            }
        }
        Ok(())
    }
}

/// Splits `2L + 1` sites into `max(1, ⌊2L/ℓ⌋)` consecutive intervals whose
/// lengths differ by at most one, longer ones first.
pub fn split_axis(half_side: usize, target: usize) -> Vec<usize> {
    let n = 2 * half_side + 1;
    let parts = ((2 * half_side) / target).max(1);
    let base = n / parts;
    let rem = n % parts;
    (0..parts).map(|i| base + usize::from(i < rem)).collect()
}

/// Partition of `Λ_L` into boxes with every side length in `[ℓ/2, 2ℓ]`.
/// Boxes carry the Neumann tag; use [`Region::with_boundary`] to switch.
pub fn partition_into_boxes(lattice: &Lattice, target: usize) -> Result<Vec<Region>> {
    let n = lattice.side();
    if target < 1 || target > n {
        return Err(Error::InvalidParameter(format!(
            "box side {target} outside [1, {n}]"
        )));
    }
    let dim = lattice.dim();
    let l = lattice.half_side() as i64;
    let axis: Vec<(i64, usize)> = {
        let mut start = -l;
        split_axis(lattice.half_side(), target)
            .into_iter()
            .map(|len| {
                let s = start;
                start += len as i64;
                (s, len)
            })
            .collect()
    };
    let per_axis = axis.len();
    let total = per_axis.pow(dim as u32);
    let mut regions = Vec::with_capacity(total);
    for idx in 0..total {
        let mut rem = idx;
        let mut lower = [0i64; MAX_DIM];
        let mut extent = [1usize; MAX_DIM];
        for j in (0..dim).rev() {
            let (s, len) = axis[rem % per_axis];
            lower[j] = s;
            extent[j] = len;
            rem /= per_axis;
        }
        regions.push(Region {
            lower,
            extent,
            boundary: Boundary::Neumann,
        });
    }
    Ok(regions)
}

/// `-Δ + V_ω` restricted to `region`.
///
/// Periodic: the whole torus only. Dirichlet: couplings leaving the box are
/// dropped and the diagonal stays `2d + V_x`. Neumann: couplings leaving the
/// box are dropped and the diagonal becomes `deg_region(x) + V_x`, so the kinetic
/// rows sum to zero.
pub fn restrict_hamiltonian<T: Real>(
    realization: &DisorderRealization<T>,
    region: &Region,
) -> Result<HamiltonianOperator<T>> {
    let lattice = &realization.lattice;
    let dim = lattice.dim();
    if region.extent[..dim].contains(&0) {
        return Err(Error::EmptyRegion);
    }
    if region.boundary == Boundary::Periodic {
        if *region != Region::torus(lattice) {
            return Err(Error::InvalidParameter(
                "periodic boundary conditions are only defined on the whole torus".into(),
            ));
        }
        return Ok(HamiltonianOperator::periodic(realization));
    }
    region.check_inside(lattice)?;

    let sites = region.sites(lattice);
    let n = sites.len();
    let mut offsets = Vec::with_capacity(n + 1);
    let mut adjacency = Vec::with_capacity(n * 2 * dim);
    let mut diag = Vec::with_capacity(n);
    let mut potential = Vec::with_capacity(n);
    offsets.push(0);
    // local strides, axis 0 most significant
    let mut strides = [1usize; MAX_DIM];
    for j in (0..dim.saturating_sub(1)).rev() {
        strides[j] = strides[j + 1] * region.extent[j + 1];
    }
    for (local, &global) in sites.iter().enumerate() {
        let mut degree = 0usize;
        for j in 0..dim {
            let pos = (local / strides[j]) % region.extent[j];
            if pos > 0 {
                adjacency.push(local - strides[j]);
                degree += 1;
            }
            if pos + 1 < region.extent[j] {
                adjacency.push(local + strides[j]);
                degree += 1;
            }
        }
        offsets.push(adjacency.len());
        let v = realization.potential[global];
        potential.push(v);
        let kinetic = match region.boundary {
            Boundary::Dirichlet => 2 * dim,
            Boundary::Neumann => degree,
            Boundary::Periodic => unreachable!(),
        };
        diag.push(T::from_count(kinetic) + v);
    }
    Ok(HamiltonianOperator::from_parts(
        Arc::clone(lattice),
        region.clone(),
        sites,
        potential,
        diag,
        offsets,
        adjacency,
    ))
}
