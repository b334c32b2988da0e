//! Lattice laboratory for Bose condensation in the random Anderson model.
//!
//! Builds the periodic Anderson Hamiltonian `-Δ + V_ω` on the torus
//! `[-L, L]^d`, computes the bottom of its spectrum, minimizes the
//! Gross-Pitaevskii energy over the unit sphere and measures how close the
//! minimizer stays to the single-particle ground state across disorder
//! ensembles.
//!
//! Numerical code is generic over [`Real`] (`f32`, `f64`); the aliases below
//! fix the double-precision instantiation used by the ensemble runner and the
//! command line tool.

pub mod analysis;
pub mod disorder;
pub mod ensemble;
pub mod error;
pub mod gp;
pub mod lattice;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use lattice::Lattice;
pub use scalar::Real;

pub type Hamiltonian = spectral::HamiltonianOperator<f64>;
pub type Hamiltonian32 = spectral::HamiltonianOperator<f32>;
pub type Eigen = spectral::EigenSolution<f64>;
pub type Eigen32 = spectral::EigenSolution<f32>;
pub type Realization = disorder::DisorderRealization<f64>;
pub type Realization32 = disorder::DisorderRealization<f32>;
pub type GpSolution = gp::GpResult<f64>;
pub type GpSolution32 = gp::GpResult<f32>;
pub type Certificate = gp::CondensationCertificate<f64>;
pub type Shells = analysis::ShellDecomposition<f64>;
