//! Entanglement of ±β coherent-state superpositions.
//!
//! Each mode whose amplitudes are restricted to `{β, −β}` lives in a
//! two-dimensional space. Expanding in the orthonormal cat basis
//! `|±⟩ = (|β⟩ ± |−β⟩)/√(2(1 ± e^{−2|β|²}))` gives
//! `|±β⟩ = c₊|+⟩ ± c₋|−⟩` with `c± = √((1 ± e^{−2|β|²})/2)`, an exact
//! isometry onto qubits. Entropies and negativities are then computed on a
//! small dense state vector.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::coherent::{HybridState, C64, ZERO_NORM_TOL};
use crate::error::{EcsError, Result};
use crate::linalg;
use crate::protocol::{reference_ghz, reference_w, Sign};
use crate::serde_util;

/// Amplitudes within this (per component) count as `±β`.
pub const GRID_TOL: f64 = 1e-10;

/// Eigenvalues above `-EIGEN_CLIP` and below zero are treated as zero.
pub const EIGEN_CLIP: f64 = 1e-12;

/// Dense qubit image of a ±β state. Qubits are the atoms (e → 0, g → 1)
/// followed by the modes (|+⟩ → 0, |−⟩ → 1), first qubit most significant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QubitizedState {
    pub n_atoms: usize,
    pub n_modes: usize,
    #[serde(serialize_with = "serde_util::complex_vec")]
    pub amplitudes: Vec<C64>,
    #[serde(serialize_with = "serde_util::complex")]
    pub beta_ref: C64,
}

impl QubitizedState {
    pub fn n_qubits(&self) -> usize {
        self.n_atoms + self.n_modes
    }

    pub fn norm2(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &QubitizedState) -> Result<C64> {
        if self.amplitudes.len() != other.amplitudes.len() {
            return Err(EcsError::ShapeMismatch("qubitized states differ in size".into()));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    fn normalized_amplitudes(&self) -> Result<Vec<C64>> {
        let n2 = self.norm2();
        if n2 <= ZERO_NORM_TOL {
            return Err(EcsError::ZeroNorm { norm2: n2 });
        }
        let s = 1.0 / n2.sqrt();
        Ok(self.amplitudes.iter().map(|a| a * s).collect())
    }

    fn check_subset(&self, subset: &[usize]) -> Result<()> {
        let n = self.n_qubits();
        for (k, &q) in subset.iter().enumerate() {
            if q >= n {
                return Err(EcsError::IndexOutOfRange {
                    what: "qubit",
                    index: q,
                    len: n,
                });
            }
            if subset[..k].contains(&q) {
                return Err(EcsError::InvalidArgument(format!("qubit {q} listed twice")));
            }
        }
        Ok(())
    }
}

/// Cat-basis coefficients `(c₊, c₋)`.
pub fn cat_coefficients(beta: C64) -> (f64, f64) {
    let x = (-2.0 * beta.norm_sqr()).exp();
    (((1.0 + x) / 2.0).sqrt(), ((1.0 - x) / 2.0).sqrt())
}

pub fn qubitize(s: &HybridState, beta: C64) -> Result<QubitizedState> {
    let (cp, cm) = cat_coefficients(beta);
    let n_q = s.n_atoms() + s.n_modes();
    let mut amplitudes = vec![C64::new(0.0, 0.0); 1usize << n_q];
    let near = |a: C64, b: C64| (a.re - b.re).abs() <= GRID_TOL && (a.im - b.im).abs() <= GRID_TOL;
    for b in s.branches() {
        let mut vec = vec![b.coeff];
        for &alpha in &b.modes {
            let odd = if near(alpha, beta) {
                cm
            } else if near(alpha, -beta) {
                -cm
            } else {
                return Err(EcsError::AmplitudeOffGrid {
                    re: alpha.re,
                    im: alpha.im,
                });
            };
            vec = vec.iter().flat_map(|&v| [v * cp, v * odd]).collect();
        }
        let offset = b.atoms.index() << s.n_modes();
        for (slot, v) in amplitudes[offset..offset + vec.len()].iter_mut().zip(vec) {
            *slot += v;
        }
    }
    Ok(QubitizedState {
        n_atoms: s.n_atoms(),
        n_modes: s.n_modes(),
        amplitudes,
        beta_ref: beta,
    })
}

fn bit(index: usize, qubit: usize, n: usize) -> usize {
    (index >> (n - 1 - qubit)) & 1
}

/// Reduced density matrix on `keep` (in the listed order).
pub fn reduced_density(q: &QubitizedState, keep: &[usize]) -> Result<DMatrix<C64>> {
    q.check_subset(keep)?;
    let amps = q.normalized_amplitudes()?;
    let n = q.n_qubits();
    let rest: Vec<usize> = (0..n).filter(|k| !keep.contains(k)).collect();
    let gather = |i: usize, qubits: &[usize]| qubits.iter().fold(0, |acc, &k| (acc << 1) | bit(i, k, n));
    let mut m = DMatrix::<C64>::zeros(1 << keep.len(), 1 << rest.len());
    for (i, &a) in amps.iter().enumerate() {
        m[(gather(i, keep), gather(i, &rest))] = a;
    }
    Ok(&m * m.adjoint())
}

/// Von Neumann entropy (bits) of the reduced state on `subset`.
pub fn reduced_entropy(q: &QubitizedState, subset: &[usize]) -> Result<f64> {
    let rho = reduced_density(q, subset)?;
    Ok(linalg::entropy_bits(&linalg::hermitian_eigenvalues(&rho), EIGEN_CLIP))
}

/// Sum of |negative eigenvalues| of the partial transpose over `part`.
pub fn negativity(q: &QubitizedState, part: &[usize]) -> Result<f64> {
    q.check_subset(part)?;
    let amps = q.normalized_amplitudes()?;
    let n = q.n_qubits();
    let mask = part.iter().fold(0usize, |acc, &k| acc | (1 << (n - 1 - k)));
    let dim = amps.len();
    let pt = DMatrix::from_fn(dim, dim, |i, j| {
        // swap the `part` bits between row and column
        let (i2, j2) = ((i & !mask) | (j & mask), (j & !mask) | (i & mask));
        amps[i2] * amps[j2].conj()
    });
    Ok(linalg::hermitian_eigenvalues(&pt)
        .into_iter()
        .filter(|&v| v < -EIGEN_CLIP)
        .map(|v| -v)
        .sum())
}

#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    GhzPlus,
    GhzMinus,
    W { signs: Vec<Sign> },
}

impl Family {
    pub fn label(&self) -> String {
        match self {
            Family::GhzPlus => "ghz-plus".into(),
            Family::GhzMinus => "ghz-minus".into(),
            Family::W { signs } => format!("w{}", signs.iter().map(|s| s.symbol()).collect::<String>()),
        }
    }

    pub fn state(&self, n: usize, beta: C64) -> Result<HybridState> {
        match self {
            Family::GhzPlus => reference_ghz(n, beta, Sign::Plus),
            Family::GhzMinus => reference_ghz(n, beta, Sign::Minus),
            Family::W { signs } => {
                if signs.len() != n {
                    return Err(EcsError::ShapeMismatch(format!("{} signs for {n} modes", signs.len())));
                }
                reference_w(beta, signs, None)
            }
        }
    }
}

/// Each bipartition once: subsets containing qubit 0, excluding the full set.
pub fn bipartitions(n: usize) -> Vec<Vec<usize>> {
    if n < 2 {
        return Vec::new();
    }
    (0..(1usize << (n - 1)) - 1)
        .map(|mask| {
            std::iter::once(0)
                .chain((1..n).filter(|k| mask >> (k - 1) & 1 == 1))
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub beta: f64,
    pub bipartition: Vec<usize>,
    pub entropy: f64,
    pub negativity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Constancy {
    pub bipartition: Vec<usize>,
    pub entropy_constant: bool,
    pub negativity_constant: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepTable {
    pub family: String,
    pub n: usize,
    pub rows: Vec<SweepRow>,
    pub constancy: Vec<Constancy>,
}

/// Tolerance for flagging a measure as constant over the grid.
pub const CONSTANCY_TOL: f64 = 1e-6;

/// Entropy and negativity of `family` on `n` modes over a grid of real β.
pub fn entanglement_sweep(family: &Family, n: usize, betas: &[f64]) -> Result<SweepTable> {
    let cuts = bipartitions(n);
    let mut rows = Vec::with_capacity(betas.len() * cuts.len());
    for &b in betas {
        let beta = C64::new(b, 0.0);
        let q = qubitize(&family.state(n, beta)?, beta)?;
        for cut in &cuts {
            rows.push(SweepRow {
                beta: b,
                bipartition: cut.clone(),
                entropy: reduced_entropy(&q, cut)?,
                negativity: negativity(&q, cut)?,
            });
        }
    }
    let constancy = cuts
        .iter()
        .map(|cut| {
            let mine: Vec<&SweepRow> = rows.iter().filter(|r| &r.bipartition == cut).collect();
            let spread = |f: fn(&SweepRow) -> f64| {
                let vals: Vec<f64> = mine.iter().map(|r| f(r)).collect();
                let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                hi - lo <= CONSTANCY_TOL
            };
            Constancy {
                bipartition: cut.clone(),
                entropy_constant: spread(|r| r.entropy),
                negativity_constant: spread(|r| r.negativity),
            }
        })
        .collect();
    Ok(SweepTable {
        family: family.label(),
        n,
        rows,
        constancy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn standard_ghz(n: usize) -> QubitizedState {
        let mut amplitudes = vec![c(0.0, 0.0); 1 << n];
        amplitudes[0] = c(FRAC_1_SQRT_2, 0.0);
        amplitudes[(1 << n) - 1] = c(FRAC_1_SQRT_2, 0.0);
        QubitizedState {
            n_atoms: 0,
            n_modes: n,
            amplitudes,
            beta_ref: c(0.0, 0.0),
        }
    }

    #[test]
    fn product_state_has_no_entanglement() {
        let s = HybridState::product(Default::default(), vec![c(0.7, 0.0), c(-0.7, 0.0), c(0.7, 0.0)]).unwrap();
        let q = qubitize(&s, c(0.7, 0.0)).unwrap();
        assert!(reduced_entropy(&q, &[0]).unwrap() < 1e-10);
        assert!(negativity(&q, &[0]).unwrap() < 1e-12);
    }

    #[test]
    fn textbook_ghz_values() {
        let q = standard_ghz(3);
        for k in 0..3 {
            assert_relative_eq!(reduced_entropy(&q, &[k]).unwrap(), 1.0, epsilon = 1e-12);
        }
        assert_relative_eq!(negativity(&q, &[0]).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn vacuum_limit_is_product() {
        let s = reference_ghz(3, c(0.0, 0.0), Sign::Plus).unwrap();
        let q = qubitize(&s, c(0.0, 0.0)).unwrap();
        assert_relative_eq!(q.amplitudes[0].norm(), 1.0, epsilon = 1e-15);
        assert!(reduced_entropy(&q, &[1]).unwrap() < 1e-10);
    }

    #[test]
    fn off_grid_amplitude_rejected() {
        let s = HybridState::product(Default::default(), vec![c(0.5, 0.0)]).unwrap();
        assert!(matches!(
            qubitize(&s, c(0.7, 0.0)),
            Err(EcsError::AmplitudeOffGrid { .. })
        ));
    }

    #[test]
    fn bipartition_enumeration() {
        assert_eq!(bipartitions(3), vec![vec![0], vec![0, 1], vec![0, 2]]);
        assert_eq!(bipartitions(4).len(), 7);
        assert!(bipartitions(1).is_empty());
    }

    #[test]
    fn subset_errors() {
        let q = standard_ghz(2);
        assert!(reduced_entropy(&q, &[2]).is_err());
        assert!(negativity(&q, &[0, 0]).is_err());
    }
}
