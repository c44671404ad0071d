//! Sparse exact diagonalization for a four-species fermionic chain with
//! spin-orbital coupling and a correlated pair-exchange term, plus the
//! analysis layer built on top of it: spectra tracked across a coupling
//! sweep, reduced density matrices, entanglement and mutual-information
//! diagnostics, parity signatures, and a Landau-Zener ramp analysis of the
//! avoided crossing between the lowest states.

pub mod eig;
pub mod error;
pub mod fock;
pub mod model;
pub mod obs;
pub mod sweep;

pub use eig::{dense_all, lowest_k, AffineOp, EigenResult, LinearOp, DEFAULT_TOL};
pub use error::{Error, Result};
pub use fock::{FockState, ModeIndex, OpKind, ParitySector, SectorBasis, Species};
pub use model::{MatrixFreeHamiltonian, ModelParams, SparseHamiltonian, SymmetryReport};
pub use obs::{
    green_function, green_general, mutual_information, rdm, region_entropy,
    ReducedDensityMatrix, RegionSpec,
};
pub use sweep::{
    cubic_shift_fit, find_avoided_crossing, landau_zener, locate_crossing, run_sweep,
    CrossingReport, CubicFit, LandauZenerReport, RefineOpts, SlopeWindows, SweepGrid,
    SweepPoint, SweepResult,
};
