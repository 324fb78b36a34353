//! Exact simulation of entangled coherent state (ECS) generation in
//! dispersive cavity QED.
//!
//! States are kept as finite superpositions of atom-word ⊗ multimode coherent
//! products ([`HybridState`]); every norm, probability and fidelity is computed
//! from closed-form coherent-state overlaps. A truncated Fock backend
//! ([`fock`]) provides the full Jaynes–Cummings propagator and the numeric
//! oracles used to check the algebra.

pub mod analysis;
pub mod coherent;
pub mod decoherence;
pub mod error;
pub mod fock;
pub(crate) mod linalg;
pub mod protocol;
pub mod serde_util;

pub use coherent::{
    branch_overlap, fidelity_pure, overlap, AtomWord, Branch, DensityHybrid, HybridState, Ket, Level, C64,
    DEFAULT_PRUNE_TOL, ZERO_NORM_TOL,
};
pub use error::{EcsError, Result};
pub use fock::{coherent_fock, FockVector};
pub use protocol::{DispersiveParams, Outcome, ProtocolResult, Sign};
