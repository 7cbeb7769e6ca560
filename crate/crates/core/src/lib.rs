//! Entanglement routing over a linear chain of quantum repeaters.
//!
//! Werner-state links are joined by Bell-state measurements and purified
//! by stabilizer-code distillation. The crate provides:
//!
//! * [`werner`]: closed-form Werner arithmetic (swapping, chains, hashing yield),
//! * [`pauli`]: GF(4) / Pauli-string algebra shared by the decoders,
//! * [`toric`] and [`matching`]: the toric code with a minimum-weight
//!   perfect-matching decoder,
//! * [`conv`]: the `[[3,1,3]]` quantum convolutional code with a syndrome
//!   Viterbi decoder,
//! * [`distill`]: Monte-Carlo fidelity transfer maps and break-even points,
//! * [`schedule`]: snapshot sampling and exhaustive composition scheduling,
//! * [`resources`]: latency formulas and memory-occupancy traces.

pub mod conv;
pub mod distill;
pub mod error;
pub mod gf2;
pub mod matching;
pub mod pauli;
pub mod resources;
pub mod rng;
pub mod schedule;
pub mod toric;
pub mod werner;

mod format;

pub use error::{Error, Result};
pub use format::fmt_sig10;
