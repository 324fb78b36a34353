//! Truncated Fock-space backend.
//!
//! Dense amplitude vectors over (atomic levels) ⊗ (photon numbers per mode),
//! the exact block-diagonal Jaynes–Cummings propagator, and a fixed-step
//! Lindblad integrator for single-mode photon loss. Everything here exists to
//! cross-check the coherent-state algebra in [`crate::coherent`].

mod jc;
mod lindblad;
mod validate;
mod vector;

pub use jc::{
    jc_evolve, jc_interaction_propagator, phase_compensated_fidelity, sector_compensated_fidelity, JCBlockPropagator,
    PhaseFidelity,
};
pub use lindblad::{lindblad_damp_converged, lindblad_damp_oracle};
pub use validate::{validate_transits, DispersiveCheck};
pub use vector::{
    coherent_fock, cutoff_for, density_to_fock, hybrid_to_fock, poisson_tail, FockVector, DEFAULT_TAIL_EPS,
};
