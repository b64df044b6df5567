//! Information measures for coded modulation (CM) and bit-interleaved coded
//! modulation (BICM) over complex Gaussian-noise channels.
//!
//! The channel model is `y = sqrt(snr) * x + z` with `z ~ CN(0, 1)` and `x`
//! drawn uniformly from a finite complex constellation. This crate computes
//!
//! - the CM mutual information and its derivative in snr (the MMSE of the
//!   constellation input),
//! - the BICM mutual information, both as a sum over binary subchannels and
//!   as a difference of CM terms over the labeling subsets,
//! - the derivative of the BICM mutual information, a linear combination of
//!   MMSE functions over the constellation and its labeling subsets,
//! - the low-snr limits of these quantities in closed form.
//!
//! Expectations over the Gaussian noise are evaluated with tensorized
//! Gauss-Hermite quadrature ([`quadrature`]); every quadrature-based quantity
//! has a Monte Carlo counterpart in [`montecarlo`] for independent
//! verification. [`powerfill`] uses the derivative as the marginal utility
//! for allocating a power budget across parallel channels.
//!
//! All information quantities are in nats. SNR is linear; dB conversions
//! happen only at I/O boundaries.

pub mod constellation;
pub mod infotheory;
pub mod montecarlo;
pub mod powerfill;
pub mod quadrature;

pub use constellation::{Constellation, Family, Labeling, SubConstellation};
pub use infotheory::{Curve, CurveKind, Snr};
pub use montecarlo::McEstimate;
pub use powerfill::{Allocation, Channel, ChannelInput, ParallelChannelSet};
pub use quadrature::QuadratureRule;

use thiserror::Error;

/// Errors produced by any module in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("quadrature order {0} out of range 1..=128")]
    InvalidQuadratureOrder(usize),

    #[error("integrand returned non-finite value {value} at node ({re}, {im})")]
    NonFiniteIntegrand { re: f64, im: f64, value: f64 },

    #[error("non-finite intermediate value in {0}")]
    NonFinite(&'static str),

    #[error("point set is empty")]
    EmptySet,

    #[error("bit position {position} out of range 1..={bits}")]
    BitPositionOutOfRange { position: usize, bits: usize },

    #[error("bit value {0} is not 0 or 1")]
    InvalidBitValue(u8),

    #[error("unsupported constellation: {0}")]
    UnsupportedConstellation(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("constellation has zero mean energy")]
    ZeroEnergy,

    #[error("snr must be finite and non-negative, got {0}")]
    InvalidSnr(f64),

    #[error("snr grid must be strictly increasing and match the value count")]
    InvalidGrid,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "failed to bracket the water level: marginal utilities span [{lo}, {hi}] \
         but cannot absorb budget {budget}"
    )]
    BracketFailure { lo: f64, hi: f64, budget: f64 },

    #[error("allocation did not converge: {0}")]
    AllocationFailure(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
