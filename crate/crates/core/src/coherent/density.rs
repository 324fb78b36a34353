use nalgebra::DMatrix;
use serde::Serialize;

use super::{modes_overlap, AtomWord, HybridState, C64};
use crate::error::{EcsError, Result};
use crate::linalg;
use crate::serde_util;

/// Coefficient-free branch ket `|atoms⟩|modes…⟩`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ket {
    pub atoms: AtomWord,
    #[serde(serialize_with = "serde_util::complex_vec")]
    pub modes: Vec<C64>,
}

impl Ket {
    pub fn overlap(&self, other: &Ket) -> C64 {
        if self.atoms != other.atoms {
            return C64::new(0.0, 0.0);
        }
        modes_overlap(&self.modes, &other.modes)
    }
}

/// Mixed state `Σ_kl C_kl |ket_k⟩⟨ket_l|` over coherent-product kets.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityHybrid {
    n_atoms: usize,
    n_modes: usize,
    kets: Vec<Ket>,
    #[serde(serialize_with = "serde_util::complex_matrix")]
    coeffs: DMatrix<C64>,
}

impl DensityHybrid {
    pub fn new(n_atoms: usize, n_modes: usize, kets: Vec<Ket>, coeffs: DMatrix<C64>) -> Result<Self> {
        if coeffs.nrows() != kets.len() || coeffs.ncols() != kets.len() {
            return Err(EcsError::ShapeMismatch(format!(
                "{} kets but {}x{} coefficient matrix",
                kets.len(),
                coeffs.nrows(),
                coeffs.ncols()
            )));
        }
        if kets
            .iter()
            .any(|k| k.atoms.len() != n_atoms || k.modes.len() != n_modes)
        {
            return Err(EcsError::ShapeMismatch(
                "ket shape differs from (n_atoms, n_modes)".into(),
            ));
        }
        let scale = coeffs.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let dev = linalg::max_hermitian_deviation(&coeffs);
        if dev > 1e-12 * scale {
            return Err(EcsError::NotHermitian(dev));
        }
        Ok(Self::from_parts(n_atoms, n_modes, kets, coeffs))
    }

    pub(crate) fn from_parts(n_atoms: usize, n_modes: usize, kets: Vec<Ket>, coeffs: DMatrix<C64>) -> Self {
        DensityHybrid {
            n_atoms,
            n_modes,
            kets,
            coeffs,
        }
    }

    /// `|ψ⟩⟨ψ|` with `C_kl = c_k · conj(c_l)`.
    pub fn from_pure(s: &HybridState) -> Self {
        let kets = s
            .branches()
            .iter()
            .map(|b| Ket {
                atoms: b.atoms.clone(),
                modes: b.modes.clone(),
            })
            .collect();
        let c: Vec<C64> = s.branches().iter().map(|b| b.coeff).collect();
        let k = c.len();
        let coeffs = DMatrix::from_fn(k, k, |i, j| c[i] * c[j].conj());
        Self::from_parts(s.n_atoms(), s.n_modes(), kets, coeffs)
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn kets(&self) -> &[Ket] {
        &self.kets
    }

    pub fn coeffs(&self) -> &DMatrix<C64> {
        &self.coeffs
    }

    /// Gram matrix `G_ij = ⟨ket_i|ket_j⟩`.
    pub fn gram(&self) -> DMatrix<C64> {
        let k = self.kets.len();
        DMatrix::from_fn(k, k, |i, j| self.kets[i].overlap(&self.kets[j]))
    }

    /// `Tr ρ = Σ_kl C_kl ⟨ket_l|ket_k⟩`.
    pub fn trace(&self) -> f64 {
        let g = self.gram();
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..self.kets.len() {
            for l in 0..self.kets.len() {
                acc += self.coeffs[(k, l)] * g[(l, k)];
            }
        }
        acc.re
    }

    /// Spectrum of the operator on the span of the kets, ascending.
    ///
    /// ρ = K C K† with K the ket matrix, so its nonzero eigenvalues are those
    /// of G^½ C G^½ with G = K†K.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let root = linalg::psd_sqrt(&self.gram());
        let m = &root * &self.coeffs * &root;
        // symmetrize away rounding noise before the Hermitian solver
        let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        linalg::hermitian_eigenvalues(&m)
    }

    /// ⟨ψ|ρ|ψ⟩.
    pub fn expectation(&self, psi: &HybridState) -> Result<f64> {
        if psi.n_atoms() != self.n_atoms || psi.n_modes() != self.n_modes {
            return Err(EcsError::ShapeMismatch(
                "state and density operator shapes differ".into(),
            ));
        }
        // amp[k] = ⟨ψ|ket_k⟩
        let amp: Vec<C64> = self
            .kets
            .iter()
            .map(|k| {
                psi.branches()
                    .iter()
                    .filter(|b| b.atoms == k.atoms)
                    .map(|b| b.coeff.conj() * modes_overlap(&b.modes, &k.modes))
                    .sum()
            })
            .collect();
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..amp.len() {
            for l in 0..amp.len() {
                acc += self.coeffs[(k, l)] * amp[k] * amp[l].conj();
            }
        }
        Ok(acc.re)
    }
}
