//! Link-level simulation and analytical validation for the uplink of a
//! multi-RIS-aided multi-user wireless system.
//!
//! The crate is organized along the processing chain:
//!
//! - [`channel`]: i.n.i.d. Nakagami-m channel realizations under the
//!   circular-cell topology and its path-loss models, with optional
//!   per-surface full correlation.
//! - [`schemes`]: the reflection schemes (ideal bound, opportunistic
//!   reflection, OMUR and its random-phase variant, the opportunistic
//!   beamforming baseline, single-user bound) and the SIC sum capacity.
//! - [`optimize`]: the joint-reflection benchmark, a monotone coordinate
//!   ascent over unit-modulus phase shifts.
//! - [`analysis`]: moment-matched Gamma statistics of the end-to-end
//!   magnitude, closed-form outage probabilities, and the sampled
//!   ideal-reflection upper bound.
//! - [`simkit`]: the deterministic Monte-Carlo harness (counter-based
//!   per-trial streams, Wilson intervals, analytical overlays).
//! - [`config`]: the TOML experiment description consumed by the CLI.

pub mod analysis;
pub mod channel;
pub mod config;
pub mod optimize;
pub mod rng;
pub mod schemes;
pub mod simkit;
pub mod special;

use thiserror::Error as ThisError;

/// Crate-wide error classes.
#[derive(Debug, ThisError)]
pub enum Error {
    /// An argument left the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The experiment description is inconsistent or incomplete.
    #[error("configuration error: {0}")]
    Config(String),
    /// An iterative numerical routine failed to converge.
    #[error("convergence failure: {0}")]
    Convergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
