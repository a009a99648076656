//! Numerical laboratory for a charged particle around a confined magnetic flux.
//!
//! The flux-threaded plane with `α = −qΦ/2π` and the punctured plane with
//! representation label β share, sector by sector, the radial operator
//! `−(ħ²/2M)[∂²_ρ + ρ⁻¹∂_ρ − (m+β)²/ρ²]`. This crate assembles both
//! ([`hamiltonian`]), checks the algebra of the punctured plane's generators
//! ([`algebra`]), computes disk spectra against a Bessel-zero oracle
//! ([`spectral`]) and propagates wavepackets to observe the flux-periodic
//! interference shift ([`dynamics`]).
//!
//! Units are natural (ħ = M = 1) unless a function takes them explicitly.

// `!(x > 0.0)` is used on purpose so that NaN fails the test.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod algebra;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod hamiltonian;
pub mod spectral;
pub mod tridiag;

pub use algebra::{Generator, LieElement, MomentumMap, StructureTable, TruncatedRep};
pub use dynamics::{ExperimentGeometry, FringeRecord, Timing, WavePacket};
pub use error::{Error, Result};
pub use grid::{InnerBoundary, RadialGrid, Spacing};
pub use hamiltonian::{FluxConfig, SectorOperator, SectorRoute};
pub use spectral::{SpectrumEntry, SpectrumResult};
