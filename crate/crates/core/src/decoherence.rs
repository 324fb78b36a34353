//! Photon loss on coherent-product density operators, and the timescale
//! feasibility report.
//!
//! Amplitude damping with `η = e^{−κt}` maps `|α⟩⟨β|` to
//! `⟨β|α⟩^{1−η} |√η α⟩⟨√η β|`. The prefactor is evaluated through its
//! exponent `(1−η)(β̄α − (|α|²+|β|²)/2)`, never as a complex power.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::coherent::{DensityHybrid, HybridState, Ket, C64};
use crate::error::{check_index, EcsError, Result};

fn check_rate(kappa: f64, t: f64) -> Result<()> {
    if !(kappa >= 0.0) || !(t >= 0.0) || !kappa.is_finite() || !t.is_finite() {
        return Err(EcsError::InvalidArgument(format!(
            "damping needs κ ≥ 0 and t ≥ 0, got κ={kappa}, t={t}"
        )));
    }
    Ok(())
}

/// Amplitude damping of one mode for time `t` at rate `kappa`.
pub fn damp(rho: &DensityHybrid, mode: usize, kappa: f64, t: f64) -> Result<DensityHybrid> {
    check_index("mode", mode, rho.n_modes())?;
    check_rate(kappa, t)?;
    let eta = (-kappa * t).exp();
    let loss = 1.0 - eta;
    let kets = rho.kets();
    let coeffs = DMatrix::from_fn(kets.len(), kets.len(), |k, l| {
        let (a, b) = (kets[k].modes[mode], kets[l].modes[mode]);
        let exponent = (b.conj() * a - (a.norm_sqr() + b.norm_sqr()) / 2.0) * loss;
        rho.coeffs()[(k, l)] * exponent.exp()
    });
    let scale = eta.sqrt();
    let new_kets = kets
        .iter()
        .map(|k| {
            let mut modes = k.modes.clone();
            modes[mode] *= scale;
            Ket {
                atoms: k.atoms.clone(),
                modes,
            }
        })
        .collect();
    Ok(DensityHybrid::from_parts(
        rho.n_atoms(),
        rho.n_modes(),
        new_kets,
        coeffs,
    ))
}

/// Same `(κ, t)` damping on every mode.
pub fn damp_all(rho: &DensityHybrid, kappa: f64, t: f64) -> Result<DensityHybrid> {
    (0..rho.n_modes()).try_fold(rho.clone(), |acc, m| damp(&acc, m, kappa, t))
}

/// `⟨ψ|ρ|ψ⟩` for a normalized target.
pub fn damped_fidelity(rho: &DensityHybrid, psi: &HybridState) -> Result<f64> {
    rho.expectation(psi)
}

/// Scales the amplitudes of `modes` by `√η`, the coherent part of the damped
/// state.
pub fn rescale_amplitudes(psi: &HybridState, modes: &[usize], kappa: f64, t: f64) -> Result<HybridState> {
    check_rate(kappa, t)?;
    for &m in modes {
        check_index("mode", m, psi.n_modes())?;
    }
    let scale = (-kappa * t / 2.0).exp();
    let branches = psi
        .branches()
        .iter()
        .map(|b| {
            let mut amps = b.modes.clone();
            for &m in modes {
                amps[m] *= scale;
            }
            crate::coherent::Branch::new(b.atoms.clone(), b.coeff, amps)
        })
        .collect();
    HybridState::new(psi.n_atoms(), psi.n_modes(), branches)
}

/// Fidelity of a pure state damped on `modes` to its own amplitude-rescaled
/// ideal.
pub fn storage_fidelity_on(psi: &HybridState, modes: &[usize], kappa: f64, t: f64) -> Result<f64> {
    let rho = modes
        .iter()
        .try_fold(psi.to_density(), |acc, &m| damp(&acc, m, kappa, t))?;
    let target = rescale_amplitudes(psi, modes, kappa, t)?.normalize()?;
    damped_fidelity(&rho, &target)
}

/// [`storage_fidelity_on`] with every mode damped.
pub fn storage_fidelity(psi: &HybridState, kappa: f64, t: f64) -> Result<f64> {
    let all: Vec<usize> = (0..psi.n_modes()).collect();
    storage_fidelity_on(psi, &all, kappa, t)
}

/// Multiplier applied to the `|α⟩⟨β|` coherence of one mode.
pub fn coherence_factor(alpha: C64, beta: C64, kappa: f64, t: f64) -> C64 {
    let loss = 1.0 - (-kappa * t).exp();
    ((beta.conj() * alpha - (alpha.norm_sqr() + beta.norm_sqr()) / 2.0) * loss).exp()
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct TimescaleParams {
    /// Atomic radiative lifetime (s).
    pub t_atom: f64,
    /// Cavity field lifetime (s).
    pub t_cavity: f64,
    /// Atom transit time through one cavity (s).
    pub transit: f64,
    pub quality_factor: f64,
    /// Atomic transition frequency (Hz).
    pub nu0: f64,
}

impl TimescaleParams {
    /// Circular Rydberg atoms in a superconducting microwave cavity:
    /// 30 ms atomic lifetime, 1 ms cavity lifetime (Q = 3·10⁸), 0.1 ms transit,
    /// 51 GHz transition.
    pub fn rydberg_microwave() -> Self {
        TimescaleParams {
            t_atom: 30e-3,
            t_cavity: 1e-3,
            transit: 1e-4,
            quality_factor: 3e8,
            nu0: 51e9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.t_atom, self.t_cavity, self.transit, self.quality_factor, self.nu0];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(EcsError::InvalidArgument(
                "timescale parameters must be positive".into(),
            ))
        }
    }
}

/// A transit is considered short when both lifetime ratios are below this.
pub const TIMESCALE_RATIO_LIMIT: f64 = 0.15;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimescaleReport {
    pub params: TimescaleParams,
    pub transit_over_atomic_lifetime: f64,
    pub transit_over_cavity_lifetime: f64,
    /// κt for one transit, with κ = 1/T_r.
    pub kappa_t_per_transit: f64,
    /// Q / (2πν₀).
    pub cavity_lifetime_from_q: f64,
    pub ratio_limit: f64,
    pub pass: bool,
}

pub fn timescale_report(p: &TimescaleParams) -> Result<TimescaleReport> {
    p.validate()?;
    let ra = p.transit / p.t_atom;
    let rc = p.transit / p.t_cavity;
    Ok(TimescaleReport {
        params: *p,
        transit_over_atomic_lifetime: ra,
        transit_over_cavity_lifetime: rc,
        kappa_t_per_transit: p.transit / p.t_cavity,
        cavity_lifetime_from_q: p.quality_factor / (2.0 * PI * p.nu0),
        ratio_limit: TIMESCALE_RATIO_LIMIT,
        pass: ra < TIMESCALE_RATIO_LIMIT && rc < TIMESCALE_RATIO_LIMIT,
    })
}
