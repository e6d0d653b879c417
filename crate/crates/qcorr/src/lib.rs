//! Two-qubit correlation toolkit: von Neumann and measurement-induced
//! entropies, quantum discord, the measurement-maximized classical mutual
//! information, and the gap between total and classical correlations, plus
//! the state families, source pipeline and tomography used to map out the
//! boundary curves in the entropy and discord planes.
//!
//! Batch work (parameter sweeps, random-state scatters, envelope searches,
//! tomography Monte Carlo) runs data-parallel through [`exec`] when the
//! default `parallel` feature is enabled and sequentially otherwise; results
//! are byte-identical either way because every batch item derives its own
//! RNG seed.

pub mod error;
pub mod exec;
pub mod frontier;
pub mod linalg;
pub mod measures;
pub mod optim;
pub mod source;
pub mod tomography;
pub mod states;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, ComplexVector, HermitianSpectrum};
pub use states::DensityMatrix;
