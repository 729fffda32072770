//! Simulation and certification toolkit for an energy-bounded
//! semi-device-independent quantum random number generator.
//!
//! The source encodes a uniformly random bit `x` into one of two coherent
//! states `|α⟩`, `|−α⟩` (BPSK) and a homodyne receiver outputs the sign of the
//! measured quadrature as `b`. Randomness is certified from the observed
//! conditional frequencies `p(b|x)` together with a bound on the mean photon
//! number of the emitted pulses; nothing else about the devices is trusted.
//!
//! Module map:
//!
//! * [`physics`]: coherent-state overlaps, homodyne and Helstrom behaviours,
//!   the white-noise model and a seeded time-domain round simulator.
//! * [`certify`]: the energy-constrained feasible set, the entropy bound
//!   (a small linear program over extremal strategies), linear witnesses
//!   and the finite-size min-entropy bound.
//! * [`protocol`]: block accumulation, energy verification, threshold test
//!   and session accounting.
//! * [`extract`]: Toeplitz-hashing strong extractor.
//! * [`cli`]: configuration, file formats and the command implementations
//!   behind the `sdiqrng` binary.

// `!(x > 0.0)` guards are written that way so they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod cli;
pub mod error;
pub mod extract;
pub mod physics;
pub mod protocol;

pub use error::{Error, Result};
