//! Error taxonomy for lattice construction, diagonalization, and dynamics.
//!
//! Physics code fails in characteristic ways: a laser detuning lands on a
//! hyperfine resonance, a level pair that must remain split collapses to
//! degeneracy, a basis truncation proves too small for the requested state.
//! Each failure mode gets its own variant so callers (and the CLI) can map
//! them to meaningful exit behavior instead of panicking.

use thiserror::Error;

/// Unified error type for the crate.
#[derive(Debug, Error)]
pub enum LatticeError {
    /// Parameters outside the domain of validity (negative depth, bad spin,
    /// mismatched dimensions ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A detuning coincides with, or sits dangerously close to, a resonance.
    #[error("resonance pole: {0}")]
    Pole(String),

    /// Levels that the calculation must resolve are degenerate at working
    /// precision, so the requested labeling is meaningless.
    #[error("degenerate levels: {0}")]
    Degenerate(String),

    /// A basis or ladder truncation is demonstrably too small for the
    /// requested accuracy.
    #[error("truncation: {0}")]
    Truncation(String),

    /// An iterative numerical routine failed to converge or produced
    /// non-finite values.
    #[error("numerical failure: {0}")]
    Numeric(String),

    /// A structurally unsupported combination (e.g. a two-dimensional field
    /// handed to the one-dimensional band solver).
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Configuration problems: syntax errors, unknown keys, missing or
    /// inconsistent sections.
    #[error("config: {0}")]
    Config(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, LatticeError>;

impl LatticeError {
    /// Process exit code the CLI should use for this error class.
    ///
    /// User-fixable problems (bad input, bad config) exit with 2; runtime
    /// numerical failures exit with 3.
    pub fn exit_code(&self) -> i32 {
        match self {
            LatticeError::InvalidInput(_) | LatticeError::Config(_) => 2,
            _ => 3,
        }
    }
}
