use serde::Serialize;

use super::FockVector;
use crate::coherent::{Level, C64};
use crate::error::{check_index, EcsError, Result};

type Block = [[C64; 2]; 2];

/// Interaction-picture Jaynes–Cummings propagator `U_I(t) = e^{iH₀t} e^{−iHt}`
/// stored block-wise. Block `n` acts on `{|e,n⟩, |g,n+1⟩}`; `|g,0⟩` only picks
/// up `ground_phase`. The cavity frequency drops out, leaving `(g, δ, t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct JCBlockPropagator {
    pub g: f64,
    pub delta: f64,
    pub t: f64,
    pub cutoff: usize,
    pub blocks: Vec<Block>,
    pub ground_phase: C64,
}

/// Builds the exact propagator for photon blocks `0..=cutoff`.
///
/// In block `n`, with `G = g√(n+1)`, the Hamiltonian minus a multiple of the
/// identity is `M = [[δ/2, G], [G, −δ/2]]` and the free part is
/// `D = diag(δ/2, −δ/2)`, so `U_I = e^{iDt} e^{−iMt}` with
/// `e^{−iMt} = cos(Ωt/2) − i sin(Ωt/2)/(Ω/2) · M`, `Ω = √(δ² + 4G²)`.
pub fn jc_interaction_propagator(g: f64, delta: f64, t: f64, cutoff: usize) -> Result<JCBlockPropagator> {
    if cutoff < 1 {
        return Err(EcsError::InvalidArgument("propagator cutoff must be at least 1".into()));
    }
    if !(t >= 0.0) || !g.is_finite() || !delta.is_finite() {
        return Err(EcsError::InvalidArgument(format!(
            "invalid JC parameters g={g} δ={delta} t={t}"
        )));
    }
    let i = C64::new(0.0, 1.0);
    let blocks = (0..=cutoff)
        .map(|n| {
            let coupling = g * ((n + 1) as f64).sqrt();
            let half = 0.5 * (delta * delta + 4.0 * coupling * coupling).sqrt();
            let cos = (half * t).cos();
            let sinc = if half * t == 0.0 { t } else { (half * t).sin() / half };
            let e00 = cos - i * sinc * (delta / 2.0);
            let e11 = cos + i * sinc * (delta / 2.0);
            let off = -i * sinc * coupling;
            let pe = C64::from_polar(1.0, delta * t / 2.0);
            let pg = pe.conj();
            [[pe * e00, pe * off], [pg * off, pg * e11]]
        })
        .collect();
    Ok(JCBlockPropagator {
        g,
        delta,
        t,
        cutoff,
        blocks,
        ground_phase: C64::new(1.0, 0.0),
    })
}

/// Applies the propagator to one atom–mode pair of a multimode vector.
///
/// `|e,cutoff⟩` couples to `|g,cutoff+1⟩`, which is outside the truncated
/// space; the amplitude that would leave is added to the tail bound.
pub fn jc_evolve(v: &FockVector, atom: usize, mode: usize, prop: &JCBlockPropagator) -> Result<FockVector> {
    check_index("atom", atom, v.n_atoms())?;
    check_index("mode", mode, v.n_modes())?;
    let cutoff = v.cutoff();
    if prop.cutoff < cutoff {
        return Err(EcsError::ShapeMismatch(format!(
            "propagator cutoff {} below vector cutoff {cutoff}",
            prop.cutoff
        )));
    }
    let src = v.amplitudes();
    let mut out = src.to_vec();
    let sa = v.atom_stride(atom);
    let sm = v.mode_stride(mode);
    let mut leaked = 0.0;
    for base in 0..src.len() {
        if v.atom_level(base, atom) != Level::E || v.photon_number(base, mode) != 0 {
            continue;
        }
        let g_base = base + sa;
        for n in 0..cutoff {
            let (ie, ig) = (base + n * sm, g_base + (n + 1) * sm);
            let u = &prop.blocks[n];
            out[ie] = u[0][0] * src[ie] + u[0][1] * src[ig];
            out[ig] = u[1][0] * src[ie] + u[1][1] * src[ig];
        }
        let top = base + cutoff * sm;
        let u = &prop.blocks[cutoff];
        out[top] = u[0][0] * src[top];
        leaked += (u[1][0] * src[top]).norm_sqr();
        out[g_base] = prop.ground_phase * src[g_base];
    }
    let tail = (v.tail_bound().sqrt() + leaked.sqrt()).powi(2);
    Ok(v.map_amplitudes(out, tail))
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct PhaseFidelity {
    pub raw: f64,
    pub compensated: f64,
}

/// Fidelity of `v` to `reference`, raw and maximized over a relative phase
/// between the e- and g-sectors of `atom`:
/// `max_φ |⟨ref|(e^{iφ}P_e + P_g)|v⟩|² = (|⟨ref_e|v_e⟩| + |⟨ref_g|v_g⟩|)²`.
pub fn phase_compensated_fidelity(v: &FockVector, reference: &FockVector, atom: usize) -> Result<PhaseFidelity> {
    v.check_same_shape(reference)?;
    check_index("atom", atom, v.n_atoms())?;
    let mut sectors = [C64::new(0.0, 0.0); 2];
    for (i, (r, a)) in reference.amplitudes().iter().zip(v.amplitudes()).enumerate() {
        sectors[v.atom_level(i, atom).index()] += r.conj() * a;
    }
    Ok(PhaseFidelity {
        raw: (sectors[0] + sectors[1]).norm_sqr(),
        compensated: (sectors[0].norm() + sectors[1].norm()).powi(2),
    })
}

/// Like [`phase_compensated_fidelity`] but with an independent phase per
/// atom word; for registers with at most one excited atom per word this is
/// the same as one Stark phase per atom.
pub fn sector_compensated_fidelity(v: &FockVector, reference: &FockVector) -> Result<PhaseFidelity> {
    v.check_same_shape(reference)?;
    let dim = v.field_dim();
    let sectors: Vec<C64> = reference
        .amplitudes()
        .chunks(dim)
        .zip(v.amplitudes().chunks(dim))
        .map(|(r, a)| r.iter().zip(a).map(|(x, y)| x.conj() * y).sum())
        .collect();
    Ok(PhaseFidelity {
        raw: sectors.iter().sum::<C64>().norm_sqr(),
        compensated: sectors.iter().map(|z| z.norm()).sum::<f64>().powi(2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherent::{AtomWord, HybridState};
    use approx::assert_relative_eq;

    fn mat_mul(a: &Block, b: &Block) -> Block {
        let mut out = [[C64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        out
    }

    fn diag(p: C64) -> Block {
        [[p, C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), p.conj()]]
    }

    fn max_diff(a: &Block, b: &Block) -> f64 {
        (0..4)
            .map(|k| (a[k / 2][k % 2] - b[k / 2][k % 2]).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn blocks_are_unitary() {
        let p = jc_interaction_propagator(1.3, -4.0, 2.7, 30).unwrap();
        for u in &p.blocks {
            let adj = [[u[0][0].conj(), u[1][0].conj()], [u[0][1].conj(), u[1][1].conj()]];
            let id = mat_mul(&adj, u);
            assert!(max_diff(&id, &diag(C64::new(1.0, 0.0))) < 1e-12);
        }
    }

    #[test]
    fn zero_coupling_is_identity() {
        let p = jc_interaction_propagator(0.0, 3.0, 5.0, 10).unwrap();
        for u in &p.blocks {
            assert!(max_diff(u, &diag(C64::new(1.0, 0.0))) < 1e-14);
        }
    }

    #[test]
    fn resonant_rabi_oscillation() {
        let g = 0.7;
        for t in [0.1, 0.9, 2.5] {
            let p = jc_interaction_propagator(g, 0.0, t, 6).unwrap();
            for (n, u) in p.blocks.iter().enumerate() {
                let expect = (g * ((n + 1) as f64).sqrt() * t).cos().powi(2);
                assert_relative_eq!(u[0][0].norm_sqr(), expect, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn interaction_picture_composition() {
        // U_I(t1+t2) = e^{iD t1} U_I(t2) e^{-iD t1} U_I(t1), D = diag(δ/2, −δ/2)
        let (g, delta, t1, t2) = (0.9, 2.3, 0.4, 1.1);
        let a = jc_interaction_propagator(g, delta, t1, 8).unwrap();
        let b = jc_interaction_propagator(g, delta, t2, 8).unwrap();
        let ab = jc_interaction_propagator(g, delta, t1 + t2, 8).unwrap();
        let shift = C64::from_polar(1.0, delta * t1 / 2.0);
        for n in 0..=8 {
            let composed = mat_mul(
                &mat_mul(&mat_mul(&diag(shift), &b.blocks[n]), &diag(shift.conj())),
                &a.blocks[n],
            );
            assert!(max_diff(&composed, &ab.blocks[n]) < 1e-10);
        }
    }

    #[test]
    fn identity_propagator_leaves_vector() {
        let s = HybridState::product("e".parse().unwrap(), vec![C64::new(0.8, 0.1)]).unwrap();
        let v = FockVector::from_hybrid(&s, 12);
        let p = jc_interaction_propagator(0.0, 1.0, 1.0, 12).unwrap();
        let w = jc_evolve(&v, 0, 0, &p).unwrap();
        assert_eq!(w.amplitudes(), v.amplitudes());
    }

    #[test]
    fn rejects_short_propagator() {
        let v = FockVector::from_hybrid(
            &HybridState::product("e".parse().unwrap(), vec![C64::new(0.5, 0.0)]).unwrap(),
            10,
        );
        let p = jc_interaction_propagator(1.0, 1.0, 1.0, 5).unwrap();
        assert!(matches!(jc_evolve(&v, 0, 0, &p), Err(EcsError::ShapeMismatch(_))));
    }

    #[test]
    fn norm_drift_over_repeated_transits() {
        let alpha = C64::new(1.0, 0.0);
        let cutoff = 30;
        let s = HybridState::product(AtomWord::empty(), vec![alpha, alpha])
            .unwrap()
            .with_atoms(&[
                ("e".parse().unwrap(), C64::new(0.6, 0.0)),
                ("g".parse().unwrap(), C64::new(0.0, 0.8)),
            ])
            .unwrap();
        let mut v = FockVector::from_hybrid(&s, cutoff);
        let n0 = v.norm2();
        let p = jc_interaction_propagator(1.0, 20.0, 3.0, cutoff).unwrap();
        for k in 0..10 {
            v = jc_evolve(&v, 0, k % 2, &p).unwrap();
        }
        assert!((v.norm2() - n0).abs() < 1e-10);
    }

    #[test]
    fn compensation_removes_sector_phase() {
        let alpha = C64::new(0.9, 0.0);
        let chi = 1.1;
        let make = |phase: C64| {
            let s = HybridState::product(AtomWord::empty(), vec![alpha])
                .unwrap()
                .with_atoms(&[
                    ("e".parse().unwrap(), phase * std::f64::consts::FRAC_1_SQRT_2),
                    ("g".parse().unwrap(), C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)),
                ])
                .unwrap();
            FockVector::from_hybrid(&s, 25)
        };
        let reference = make(C64::new(1.0, 0.0));
        let same = phase_compensated_fidelity(&reference, &reference, 0).unwrap();
        assert_relative_eq!(same.raw, 1.0, epsilon = 1e-10);
        assert_relative_eq!(same.compensated, 1.0, epsilon = 1e-10);
        let shifted = phase_compensated_fidelity(&make(C64::from_polar(1.0, chi)), &reference, 0).unwrap();
        assert_relative_eq!(shifted.compensated, 1.0, epsilon = 1e-10);
        assert_relative_eq!(shifted.raw, (chi / 2.0).cos().powi(2), epsilon = 1e-10);
    }
}
