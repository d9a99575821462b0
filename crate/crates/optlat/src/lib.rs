//! Spin-dependent optical lattices for alkali atoms: potential design,
//! band structure, stimulated Raman couplings, resolved-sideband cooling,
//! and coherent double-well dynamics.
//!
//! The crate works throughout in recoil units — energies in units of the
//! photon recoil energy E_R = ħ²k²/2M of the lattice light, lengths in 1/k,
//! times in ħ/E_R, with ħ = k = 1.  Laser detunings are quoted in natural
//! linewidths, magnetic fields as Larmor energies in recoil units.
//!
//! Layering, bottom to top:
//!
//! * [`halfint`], [`angular`], [`atom`] — exact spin bookkeeping, coupling
//!   coefficients, and atomic line data;
//! * [`linalg`] — dense Hermitian eigensolver and block-tridiagonal solves,
//!   self-contained (no BLAS/LAPACK);
//! * [`operator`], [`fields`], [`polarizability`] — laser geometries, the
//!   atomic polarizability tensor, and the resulting spin-dependent lattice
//!   operator as a sum of spatial harmonics;
//! * [`bands`] — coupled spinor band structure in a plane-wave basis;
//! * [`coupling`] — Raman coupling strengths and cooling figures of merit;
//! * [`cooling`] — master-equation simulation of resolved-sideband cooling;
//! * [`doublewell`], [`propagator`] — double-well potentials, tunneling
//!   splittings, and unitary time evolution with ramps and intensity noise;
//! * [`config`], [`output`] — TOML run configuration and deterministic
//!   file output for the command-line driver.

pub mod angular;
pub mod atom;
pub mod bands;
pub mod config;
pub mod cooling;
pub mod coupling;
pub mod doublewell;
pub mod error;
pub mod fields;
pub mod halfint;
pub mod linalg;
pub mod operator;
pub mod output;
pub mod polarizability;
pub mod propagator;

pub use error::{LatticeError, Result};
