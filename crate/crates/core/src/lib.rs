//! Exact-diagonalization toolkit for the blockaded Rydberg chain.
//!
//! The pipeline mirrors a quantum quench experiment:
//!
//! 1. [`basis`] enumerates the blockaded Hilbert space on a periodic ring and
//!    [`sector`] splits it into momentum / reflection-parity blocks.
//! 2. [`operators`] builds the post-quench PXP Hamiltonian, the pre-quench
//!    detuning + next-nearest-neighbour Hamiltonian and local observables.
//! 3. [`spectra`] diagonalizes them, either whole or sector by sector.
//! 4. [`groundstate`] selects the physical pre-quench ground state, breaking
//!    degeneracies with an infinitesimal staggered field.
//! 5. [`quench`] evaluates overlaps, the effective dimension, the Loschmidt
//!    probability and observable dynamics.
//! 6. [`scan`] sweeps the pre-quench couplings to minimize the effective
//!    dimension and studies its growth with chain length.
//!
//! Units: `hbar = 1`, `Omega = 1`; times are in units of `1/Omega`.

pub mod basis;
pub mod error;
pub mod groundstate;
pub mod io;
pub mod operators;
pub mod quench;
pub mod scan;
pub mod sector;
pub mod spectra;

pub use basis::{ConstrainedBasis, SpinConfiguration};
pub use error::{Error, Result};
pub use groundstate::{GroundResolution, ParityClass};
pub use operators::{Axis, HamiltonianMatrix, ObservableMatrix, PrequenchParams};
pub use quench::{OverlapDistribution, PostQuench, Route, TimeSeries};
pub use scan::{ScanGrid, ScanResult};
pub use sector::{Parity, SectorBasis};
pub use spectra::{EigenSystem, SpectralDecomposition};

/// Default strength of the uniform z-field added to the post-quench
/// Hamiltonian to split its exact zero-energy degeneracy.
pub const DEFAULT_ZFIELD_EPS: f64 = 1e-9;

/// Package version, echoed in every output header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
