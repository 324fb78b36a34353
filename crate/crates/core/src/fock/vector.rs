use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;

use crate::coherent::{DensityHybrid, HybridState, Level, C64};
use crate::error::{check_index, EcsError, Result};

/// Default truncated probability mass when a cutoff is chosen automatically.
pub const DEFAULT_TAIL_EPS: f64 = 1e-10;

/// Truncated coherent state: `a_n = e^{−|α|²/2} αⁿ/√(n!)` for `n ≤ cutoff`,
/// together with the probability mass beyond the cutoff.
pub fn coherent_fock(alpha: C64, cutoff: usize) -> (Vec<C64>, f64) {
    let mut amps = Vec::with_capacity(cutoff + 1);
    let mut a = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    amps.push(a);
    for n in 0..cutoff {
        a = a * alpha / ((n + 1) as f64).sqrt();
        amps.push(a);
    }
    (amps, poisson_tail(alpha.norm_sqr(), cutoff))
}

/// Poisson(mean) mass strictly above `cutoff`, summed term by term from the
/// top of the retained range (more accurate than `1 − Σ p_n`).
pub fn poisson_tail(mean: f64, cutoff: usize) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    // log p_cutoff, accumulated without factorials
    let mut log_p = -mean;
    for n in 1..=cutoff {
        log_p += (mean / n as f64).ln();
    }
    let mut p = log_p.exp();
    let mut n = cutoff;
    let mut tail = 0.0;
    loop {
        p *= mean / (n + 1) as f64;
        n += 1;
        tail += p;
        let ratio = mean / (n + 1) as f64;
        if ratio < 0.5 {
            let rest = p * ratio / (1.0 - ratio);
            if rest <= tail * 1e-17 || p == 0.0 {
                return tail + rest;
            }
        }
    }
}

/// Smallest cutoff whose Poisson tail for amplitude magnitude `alpha_abs` is
/// below `eps`.
pub fn cutoff_for(alpha_abs: f64, eps: f64) -> usize {
    let mean = alpha_abs * alpha_abs;
    (0..)
        .find(|&n| poisson_tail(mean, n) < eps)
        .expect("Poisson tail vanishes")
}

/// Dense amplitudes over `2^n_atoms · (cutoff+1)^n_modes` basis states.
///
/// Index layout: atom word index (atom 0 most significant, e = 0) times the
/// field dimension, plus the photon-number digits with mode 0 most
/// significant.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    n_atoms: usize,
    n_modes: usize,
    cutoff: usize,
    amplitudes: Vec<C64>,
    tail_bound: f64,
}

impl FockVector {
    pub fn new(n_atoms: usize, n_modes: usize, cutoff: usize, amplitudes: Vec<C64>, tail_bound: f64) -> Result<Self> {
        let dim = (1usize << n_atoms) * (cutoff + 1).pow(n_modes as u32);
        if amplitudes.len() != dim {
            return Err(EcsError::ShapeMismatch(format!(
                "expected {dim} amplitudes, got {}",
                amplitudes.len()
            )));
        }
        if !(tail_bound >= 0.0) {
            return Err(EcsError::InvalidArgument("tail bound must be non-negative".into()));
        }
        Ok(FockVector {
            n_atoms,
            n_modes,
            cutoff,
            amplitudes,
            tail_bound,
        })
    }

    /// Truncated Fock image of a hybrid state. The tail bound is a union bound
    /// over branches and modes on the discarded squared norm.
    pub fn from_hybrid(s: &HybridState, cutoff: usize) -> Self {
        let field_dim = (cutoff + 1).pow(s.n_modes() as u32);
        let mut amplitudes = vec![C64::new(0.0, 0.0); (1usize << s.n_atoms()) * field_dim];
        let mut err_amp = 0.0;
        for b in s.branches() {
            let mut product = vec![b.coeff];
            let mut branch_tail = 0.0;
            for &alpha in &b.modes {
                let (arr, tail) = coherent_fock(alpha, cutoff);
                branch_tail += tail;
                product = product.iter().flat_map(|&p| arr.iter().map(move |&a| p * a)).collect();
            }
            let offset = b.atoms.index() * field_dim;
            for (slot, v) in amplitudes[offset..offset + field_dim].iter_mut().zip(product) {
                *slot += v;
            }
            err_amp += b.coeff.norm() * branch_tail.min(1.0).sqrt();
        }
        FockVector {
            n_atoms: s.n_atoms(),
            n_modes: s.n_modes(),
            cutoff,
            amplitudes,
            tail_bound: err_amp * err_amp,
        }
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn field_dim(&self) -> usize {
        (self.cutoff + 1).pow(self.n_modes as u32)
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub(crate) fn atom_stride(&self, atom: usize) -> usize {
        (1usize << (self.n_atoms - 1 - atom)) * self.field_dim()
    }

    pub(crate) fn mode_stride(&self, mode: usize) -> usize {
        (self.cutoff + 1).pow((self.n_modes - 1 - mode) as u32)
    }

    pub(crate) fn atom_level(&self, index: usize, atom: usize) -> Level {
        Level::from_index((index / self.atom_stride(atom)) & 1)
    }

    pub(crate) fn photon_number(&self, index: usize, mode: usize) -> usize {
        (index / self.mode_stride(mode)) % (self.cutoff + 1)
    }

    pub(crate) fn map_amplitudes(&self, amplitudes: Vec<C64>, tail_bound: f64) -> Self {
        FockVector {
            n_atoms: self.n_atoms,
            n_modes: self.n_modes,
            cutoff: self.cutoff,
            amplitudes,
            tail_bound,
        }
    }

    pub(crate) fn check_same_shape(&self, other: &FockVector) -> Result<()> {
        if self.n_atoms != other.n_atoms || self.n_modes != other.n_modes || self.cutoff != other.cutoff {
            return Err(EcsError::ShapeMismatch(format!(
                "Fock vectors ({}, {}, {}) vs ({}, {}, {})",
                self.n_atoms, self.n_modes, self.cutoff, other.n_atoms, other.n_modes, other.cutoff
            )));
        }
        Ok(())
    }

    pub fn norm2(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &FockVector) -> Result<C64> {
        self.check_same_shape(other)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn mean_photon_number(&self, mode: usize) -> Result<f64> {
        check_index("mode", mode, self.n_modes)?;
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| self.photon_number(i, mode) as f64 * a.norm_sqr())
            .sum())
    }

    /// ⟨(−1)^{a†a}⟩ on one mode.
    pub fn parity(&self, mode: usize) -> Result<f64> {
        check_index("mode", mode, self.n_modes)?;
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let sign = if self.photon_number(i, mode).is_multiple_of(2) {
                    1.0
                } else {
                    -1.0
                };
                sign * a.norm_sqr()
            })
            .sum())
    }

    /// Probability weight of each atom word, indexed by word index.
    pub fn word_probabilities(&self) -> Vec<f64> {
        self.amplitudes
            .chunks(self.field_dim())
            .map(|chunk| chunk.iter().map(|a| a.norm_sqr()).sum())
            .collect()
    }

    /// `exp(−iθ a†a σ_z)` on one atom–mode pair: the dispersive interaction
    /// applied directly in the number basis.
    pub fn dispersive_phase(&self, atom: usize, mode: usize, theta: f64) -> Result<Self> {
        check_index("atom", atom, self.n_atoms)?;
        check_index("mode", mode, self.n_modes)?;
        let amps = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                let n = self.photon_number(i, mode) as f64;
                let sz = match self.atom_level(i, atom) {
                    Level::E => 1.0,
                    Level::G => -1.0,
                };
                a * C64::from_polar(1.0, -theta * n * sz)
            })
            .collect();
        Ok(self.map_amplitudes(amps, self.tail_bound))
    }

    /// Ramsey π/2 pulse, |e⟩ → (|e⟩+|g⟩)/√2, |g⟩ → (|g⟩−|e⟩)/√2.
    pub fn ramsey(&self, atom: usize) -> Result<Self> {
        check_index("atom", atom, self.n_atoms)?;
        let stride = self.atom_stride(atom);
        let mut amps = self.amplitudes.clone();
        for i in 0..amps.len() {
            if self.atom_level(i, atom) != Level::E {
                continue;
            }
            let (ae, ag) = (self.amplitudes[i], self.amplitudes[i + stride]);
            amps[i] = (ae - ag) * FRAC_1_SQRT_2;
            amps[i + stride] = (ae + ag) * FRAC_1_SQRT_2;
        }
        Ok(self.map_amplitudes(amps, self.tail_bound))
    }

    /// Reduced density matrix over `keep` modes (atoms and all other modes
    /// traced out), in the product number basis of the kept modes.
    pub fn reduced_mode_density(&self, keep: &[usize]) -> Result<DMatrix<C64>> {
        for &m in keep {
            check_index("mode", m, self.n_modes)?;
        }
        let d = self.cutoff + 1;
        let kept_dim = d.pow(keep.len() as u32);
        let rest_dim = self.len() / kept_dim;
        let traced: Vec<usize> = (0..self.n_modes).filter(|m| !keep.contains(m)).collect();
        let mut mat = DMatrix::<C64>::zeros(kept_dim, rest_dim);
        for (i, &a) in self.amplitudes.iter().enumerate() {
            let row = keep.iter().fold(0, |acc, &m| acc * d + self.photon_number(i, m));
            let col = traced
                .iter()
                .fold(i / self.field_dim(), |acc, &m| acc * d + self.photon_number(i, m));
            mat[(row, col)] = a;
        }
        Ok(&mat * mat.adjoint())
    }
}

pub fn hybrid_to_fock(s: &HybridState, cutoff: usize) -> FockVector {
    FockVector::from_hybrid(s, cutoff)
}

/// Dense number-basis matrix `K C K†` of a mixed hybrid state.
pub fn density_to_fock(rho: &DensityHybrid, cutoff: usize) -> DMatrix<C64> {
    let columns: Vec<Vec<C64>> = rho
        .kets()
        .iter()
        .map(|k| {
            let s = HybridState::product(k.atoms.clone(), k.modes.clone()).expect("ket shape");
            FockVector::from_hybrid(&s, cutoff).amplitudes
        })
        .collect();
    let dim = columns.first().map(|c| c.len()).unwrap_or(1);
    let kmat = DMatrix::from_fn(dim, columns.len(), |i, j| columns[j][i]);
    &kmat * rho.coeffs() * kmat.adjoint()
}
