//! Exact Jaynes–Cummings transits compared with the dispersive prediction.

use serde::Serialize;

use super::{
    cutoff_for, hybrid_to_fock, jc_evolve, jc_interaction_propagator, sector_compensated_fidelity, PhaseFidelity,
};
use crate::coherent::HybridState;
use crate::error::{EcsError, Result};
use crate::protocol::{dispersive_transit, DispersiveParams};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DispersiveCheck {
    pub detuning_ratio: f64,
    pub params: DispersiveParams,
    pub cutoff: usize,
    /// Truncation bound on the norm missing from the exact evolution.
    pub tail_bound: f64,
    pub fidelity: PhaseFidelity,
}

/// Runs each `(atom, mode)` transit of `initial` twice: through the exact
/// propagator with `g = 1`, `δ = ratio` and `τ = θ/λ`, and through the
/// dispersive map with phase θ. Returns the fidelity of the two results,
/// raw and with one free phase per atom word.
pub fn validate_transits(
    initial: &HybridState,
    transits: &[(usize, usize)],
    theta: f64,
    ratio: f64,
    tail_eps: f64,
) -> Result<DispersiveCheck> {
    if !(ratio > 0.0) || !ratio.is_finite() {
        return Err(EcsError::InvalidArgument(format!(
            "detuning ratio must be positive, got {ratio}"
        )));
    }
    if !(tail_eps > 0.0) {
        return Err(EcsError::InvalidArgument("tail tolerance must be positive".into()));
    }
    let params = DispersiveParams::for_phase(1.0, ratio, theta)?;
    let state = initial.normalize()?;
    let mut predicted = state.clone();
    for &(atom, mode) in transits {
        predicted = dispersive_transit(&predicted, atom, mode, theta)?;
    }
    let max_amp = state
        .branches()
        .iter()
        .chain(predicted.branches())
        .flat_map(|b| b.modes.iter().map(|a| a.norm()))
        .fold(0.0, f64::max);
    let per_mode = tail_eps / (state.n_modes().max(1) * state.branches().len().max(1)).pow(2) as f64;
    let cutoff = cutoff_for(max_amp, per_mode).max(1);
    let prop = jc_interaction_propagator(params.g, params.delta, params.tau, cutoff)?;
    let mut exact = hybrid_to_fock(&state, cutoff);
    for &(atom, mode) in transits {
        exact = jc_evolve(&exact, atom, mode, &prop)?;
    }
    let reference = hybrid_to_fock(&predicted, cutoff);
    Ok(DispersiveCheck {
        detuning_ratio: ratio,
        params,
        cutoff,
        tail_bound: exact.tail_bound().max(reference.tail_bound()),
        fidelity: sector_compensated_fidelity(&exact, &reference)?,
    })
}
