//! Fault-tolerant syndrome extraction on CSS codes.
//!
//! The crate models extraction gadgets `(Θ, Λ, Γ, H̃)` that interpolate
//! between Shor-style and Steane-style extraction, builds the toric-code
//! partition gadgets with aligned and offset schedules, and decodes the
//! resulting spacetime syndrome histories with minimum-weight perfect
//! matching or a weighted union-find decoder using overlapping recovery.
//! A Pauli-frame simulator provides circuit-level Monte Carlo estimates of
//! logical error rates and thresholds.
//!
//! Module layout, bottom up:
//!
//! * [`f2core`]: labelled GF(2) vectors and sparse matrices.
//! * [`css`]: CSS codes and the toric lattice.
//! * [`gadget`]: extraction gadgets and their constructions.
//! * [`toric_partition`]: m×m patch partitions and round schedules.
//! * [`spacetime`]: error histories, syndrome differences and projection.
//! * [`circuit_noise`]: Pauli-frame circuit simulation.
//! * [`decoder`]: decoder graphs, MWPM, union-find, brute-force oracles.
//! * [`recovery`]: overlapping windowed recovery.
//! * [`experiment`]: Monte Carlo harness, thresholds and the CLI.

pub mod circuit_noise;
pub mod css;
pub mod decoder;
pub mod error;
pub mod experiment;
pub mod f2core;
pub mod gadget;
pub mod recovery;
pub mod spacetime;
pub mod toric_partition;

pub use error::{Error, Result};
pub use f2core::{F2Vector, Label, SparseF2Matrix, Universe};
