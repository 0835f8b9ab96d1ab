//! Asymptotic key rates for decoy-state BB84 with a passively biased
//! receiver.
//!
//! The receiver chooses its measurement basis with a beam splitter instead of
//! an active switch; threshold detectors with dark counts make the passive
//! and active setups inequivalent, and multi-photon pulses can leak into the
//! sifted key through simultaneous clicks on both basis lines. This crate
//! models that receiver exactly on small photon-number subspaces, derives the
//! decoy-state bounds and key-rate formulas that account for the leak, and
//! provides an analytic channel model plus a Monte Carlo simulator to drive
//! them.
//!
//! Module map:
//! - [`model`]: parameter types and validation.
//! - [`splitter_povm`]: Fock-space measurement operators, sifting, alpha.
//! - [`decoy`]: vacuum/single-photon yield and error bounds from decoy data.
//! - [`keyrate`]: secret-key rate variants (passive, virtual, active).
//! - [`channel`]: analytic fiber-channel statistics.
//! - [`montecarlo`]: seeded sampling of the same statistics.
//! - [`sweep`]: parameter optimization over length grids.
//! - [`cli`]: command-line front end.

pub mod model;
pub mod channel;
pub mod cli;
pub mod decoy;
pub mod keyrate;
pub mod montecarlo;
pub mod splitter_povm;
pub mod sweep;
