//! Superpositions of atom-word ⊗ multimode coherent products.
//!
//! A [`HybridState`] is a finite sum of [`Branch`]es. Branch kets are not
//! orthogonal (coherent states never are), so every norm, probability and
//! fidelity goes through the Gram matrix of pairwise overlaps
//! ⟨α|β⟩ = exp(−(|α|²+|β|²)/2 + ᾱβ). Overlaps are always assembled in the
//! exponent and exponentiated once.

mod density;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::error::{check_index, EcsError, Result};
use crate::serde_util;

pub use density::{DensityHybrid, Ket};

pub type C64 = Complex64;

/// Squared norms at or below this are treated as exactly zero.
pub const ZERO_NORM_TOL: f64 = 1e-24;

pub const DEFAULT_PRUNE_TOL: f64 = 1e-12;

/// Atomic basis letter.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Level {
    #[serde(rename = "e")]
    E,
    #[serde(rename = "g")]
    G,
}

impl Level {
    /// Basis index used by the dense backends: e → 0, g → 1.
    pub fn index(self) -> usize {
        match self {
            Level::E => 0,
            Level::G => 1,
        }
    }

    pub fn from_index(i: usize) -> Level {
        if i == 0 {
            Level::E
        } else {
            Level::G
        }
    }

    pub fn letter(self) -> char {
        match self {
            Level::E => 'e',
            Level::G => 'g',
        }
    }

    pub fn flipped(self) -> Level {
        match self {
            Level::E => Level::G,
            Level::G => Level::E,
        }
    }
}

impl TryFrom<char> for Level {
    type Error = EcsError;

    fn try_from(c: char) -> Result<Level> {
        match c {
            'e' | 'E' => Ok(Level::E),
            'g' | 'G' => Ok(Level::G),
            other => Err(EcsError::InvalidArgument(format!(
                "atomic letter must be 'e' or 'g', got {other:?}"
            ))),
        }
    }
}

/// Basis word of an atom register, atom 0 first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomWord(Vec<Level>);

impl AtomWord {
    pub fn new(levels: Vec<Level>) -> Self {
        AtomWord(levels)
    }

    pub fn empty() -> Self {
        AtomWord(Vec::new())
    }

    pub fn uniform(level: Level, n: usize) -> Self {
        AtomWord(vec![level; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn levels(&self) -> &[Level] {
        &self.0
    }

    pub fn get(&self, i: usize) -> Level {
        self.0[i]
    }

    pub fn count(&self, level: Level) -> usize {
        self.0.iter().filter(|&&l| l == level).count()
    }

    pub fn with(&self, i: usize, level: Level) -> Self {
        let mut v = self.0.clone();
        v[i] = level;
        AtomWord(v)
    }

    pub fn without(&self, i: usize) -> Self {
        let mut v = self.0.clone();
        v.remove(i);
        AtomWord(v)
    }

    pub fn concat(&self, other: &AtomWord) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        AtomWord(v)
    }

    pub fn complement(&self) -> Self {
        AtomWord(self.0.iter().map(|l| l.flipped()).collect())
    }

    /// Dense index with atom 0 as the most significant bit.
    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, l| (acc << 1) | l.index())
    }

    pub fn from_index(index: usize, n: usize) -> Self {
        AtomWord((0..n).map(|k| Level::from_index((index >> (n - 1 - k)) & 1)).collect())
    }

    /// All 2ⁿ words in dense-index order (`e…e` first).
    pub fn all(n: usize) -> Vec<AtomWord> {
        (0..1usize << n).map(|i| AtomWord::from_index(i, n)).collect()
    }
}

impl fmt::Display for AtomWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.0 {
            write!(f, "{}", l.letter())?;
        }
        Ok(())
    }
}

impl FromStr for AtomWord {
    type Err = EcsError;

    fn from_str(s: &str) -> Result<Self> {
        s.chars().map(Level::try_from).collect::<Result<Vec<_>>>().map(AtomWord)
    }
}

impl Serialize for AtomWord {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// One term of a [`HybridState`]: `coeff · |atoms⟩ ⊗ |modes[0]⟩ ⊗ …`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Branch {
    pub atoms: AtomWord,
    #[serde(serialize_with = "serde_util::complex")]
    pub coeff: C64,
    #[serde(serialize_with = "serde_util::complex_vec")]
    pub modes: Vec<C64>,
}

impl Branch {
    pub fn new(atoms: AtomWord, coeff: C64, modes: Vec<C64>) -> Self {
        Branch { atoms, coeff, modes }
    }
}

/// ⟨α|β⟩ for single-mode coherent states.
pub fn overlap(alpha: C64, beta: C64) -> C64 {
    overlap_exponent(alpha, beta).exp()
}

/// Logarithm of ⟨α|β⟩, computed directly from the amplitudes.
pub fn overlap_exponent(alpha: C64, beta: C64) -> C64 {
    -(alpha.norm_sqr() + beta.norm_sqr()) / 2.0 + alpha.conj() * beta
}

/// Overlap of two coefficient-free kets; zero when the atom words differ.
pub(crate) fn ket_overlap(atoms_a: &AtomWord, modes_a: &[C64], atoms_b: &AtomWord, modes_b: &[C64]) -> C64 {
    if atoms_a != atoms_b {
        return C64::new(0.0, 0.0);
    }
    modes_overlap(modes_a, modes_b)
}

pub(crate) fn modes_overlap(modes_a: &[C64], modes_b: &[C64]) -> C64 {
    modes_a
        .iter()
        .zip(modes_b)
        .map(|(&a, &b)| overlap_exponent(a, b))
        .sum::<C64>()
        .exp()
}

/// ⟨b1|b2⟩ including both coefficients.
pub fn branch_overlap(b1: &Branch, b2: &Branch) -> Result<C64> {
    if b1.atoms.len() != b2.atoms.len() || b1.modes.len() != b2.modes.len() {
        return Err(EcsError::ShapeMismatch(format!(
            "branches ({}, {}) vs ({}, {})",
            b1.atoms.len(),
            b1.modes.len(),
            b2.atoms.len(),
            b2.modes.len()
        )));
    }
    Ok(b1.coeff.conj() * b2.coeff * ket_overlap(&b1.atoms, &b1.modes, &b2.atoms, &b2.modes))
}

/// Pure atom–field state as a finite sum of coherent-product branches.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HybridState {
    n_atoms: usize,
    n_modes: usize,
    branches: Vec<Branch>,
}

impl HybridState {
    pub fn new(n_atoms: usize, n_modes: usize, branches: Vec<Branch>) -> Result<Self> {
        for (k, b) in branches.iter().enumerate() {
            if b.atoms.len() != n_atoms || b.modes.len() != n_modes {
                return Err(EcsError::ShapeMismatch(format!(
                    "branch {k} has shape ({}, {}), expected ({n_atoms}, {n_modes})",
                    b.atoms.len(),
                    b.modes.len()
                )));
            }
            if !is_finite(b.coeff) || !b.modes.iter().all(|&z| is_finite(z)) {
                return Err(EcsError::NonFinite("branch"));
            }
        }
        Ok(HybridState {
            n_atoms,
            n_modes,
            branches,
        })
    }

    /// Vacuum on `n_modes` cavities, no atoms.
    pub fn vacuum(n_modes: usize) -> Self {
        HybridState {
            n_atoms: 0,
            n_modes,
            branches: vec![Branch::new(
                AtomWord::empty(),
                C64::new(1.0, 0.0),
                vec![C64::new(0.0, 0.0); n_modes],
            )],
        }
    }

    /// Single normalized product `|atoms⟩|modes…⟩`.
    pub fn product(atoms: AtomWord, modes: Vec<C64>) -> Result<Self> {
        let (na, nm) = (atoms.len(), modes.len());
        HybridState::new(na, nm, vec![Branch::new(atoms, C64::new(1.0, 0.0), modes)])
    }

    /// Unnormalized sum `Σ c_k |modes_k⟩` over field-only products.
    pub fn field_superposition(terms: &[(C64, Vec<C64>)]) -> Result<Self> {
        let n_modes = terms
            .first()
            .map(|(_, m)| m.len())
            .ok_or_else(|| EcsError::InvalidArgument("empty superposition".into()))?;
        HybridState::new(
            0,
            n_modes,
            terms
                .iter()
                .map(|(c, m)| Branch::new(AtomWord::empty(), *c, m.clone()))
                .collect(),
        )
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn into_branches(self) -> Vec<Branch> {
        self.branches
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    /// Rebuilds the state from transformed branches of the given shape.
    pub(crate) fn with_branches(&self, n_atoms: usize, branches: Vec<Branch>) -> Self {
        HybridState {
            n_atoms,
            n_modes: self.n_modes,
            branches,
        }
    }

    /// Appends an atom register `Σ c_w |w⟩` after the existing atoms.
    pub fn with_atoms(&self, register: &[(AtomWord, C64)]) -> Result<Self> {
        let width = register.first().map(|(w, _)| w.len()).unwrap_or(0);
        if register.iter().any(|(w, _)| w.len() != width) {
            return Err(EcsError::ShapeMismatch("atom register words differ in length".into()));
        }
        let mut branches = Vec::with_capacity(self.branches.len() * register.len());
        for b in &self.branches {
            for (w, c) in register {
                branches.push(Branch::new(b.atoms.concat(w), b.coeff * c, b.modes.clone()));
            }
        }
        HybridState::new(self.n_atoms + width, self.n_modes, branches)
    }

    pub fn scaled(&self, factor: C64) -> Self {
        let branches = self
            .branches
            .iter()
            .map(|b| Branch::new(b.atoms.clone(), b.coeff * factor, b.modes.clone()))
            .collect();
        self.with_branches(self.n_atoms, branches)
    }

    fn check_shape(&self, other: &HybridState) -> Result<()> {
        if self.n_atoms != other.n_atoms || self.n_modes != other.n_modes {
            return Err(EcsError::ShapeMismatch(format!(
                "({}, {}) vs ({}, {})",
                self.n_atoms, self.n_modes, other.n_atoms, other.n_modes
            )));
        }
        Ok(())
    }

    /// Coefficient-free Gram matrix of the branch kets.
    pub fn gram(&self) -> DMatrix<C64> {
        let k = self.branches.len();
        DMatrix::from_fn(k, k, |i, j| {
            let (a, b) = (&self.branches[i], &self.branches[j]);
            ket_overlap(&a.atoms, &a.modes, &b.atoms, &b.modes)
        })
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &HybridState) -> Result<C64> {
        self.check_shape(other)?;
        let mut acc = C64::new(0.0, 0.0);
        for a in &self.branches {
            for b in &other.branches {
                if a.atoms == b.atoms {
                    acc += a.coeff.conj() * b.coeff * modes_overlap(&a.modes, &b.modes);
                }
            }
        }
        Ok(acc)
    }

    pub fn norm2(&self) -> f64 {
        let mut acc = 0.0;
        for (i, a) in self.branches.iter().enumerate() {
            acc += a.coeff.norm_sqr();
            for b in &self.branches[i + 1..] {
                if a.atoms == b.atoms {
                    acc += 2.0 * (a.coeff.conj() * b.coeff * modes_overlap(&a.modes, &b.modes)).re;
                }
            }
        }
        acc.max(0.0)
    }

    pub fn normalize(&self) -> Result<Self> {
        let n2 = self.norm2();
        if n2 <= ZERO_NORM_TOL {
            return Err(EcsError::ZeroNorm { norm2: n2 });
        }
        Ok(self.scaled(C64::new(1.0 / n2.sqrt(), 0.0)))
    }

    /// Merges branches that agree in atom word and (per component, within
    /// `tol`) in every mode amplitude, then drops branches with |coeff| < tol.
    pub fn prune(&self, tol: f64) -> Self {
        let mut out: Vec<Branch> = Vec::with_capacity(self.branches.len());
        for b in &self.branches {
            match out
                .iter_mut()
                .find(|x| x.atoms == b.atoms && amplitudes_close(&x.modes, &b.modes, tol))
            {
                Some(x) => x.coeff += b.coeff,
                None => out.push(b.clone()),
            }
        }
        out.retain(|b| b.coeff.norm() >= tol);
        self.with_branches(self.n_atoms, out)
    }

    pub fn to_density(&self) -> DensityHybrid {
        DensityHybrid::from_pure(self)
    }

    /// Keeps only branches whose atom `atom` is in `level`, and removes that
    /// atom from every word.
    pub(crate) fn project_atom(&self, atom: usize, level: Level) -> Result<Self> {
        check_index("atom", atom, self.n_atoms)?;
        let branches = self
            .branches
            .iter()
            .filter(|b| b.atoms.get(atom) == level)
            .map(|b| Branch::new(b.atoms.without(atom), b.coeff, b.modes.clone()))
            .collect();
        Ok(self.with_branches(self.n_atoms - 1, branches))
    }

    /// Reduced density operator on `keep` modes; all atoms and the remaining
    /// modes are traced out using branch overlaps.
    pub fn reduce_to_modes(&self, keep: &[usize]) -> Result<DensityHybrid> {
        for &m in keep {
            check_index("mode", m, self.n_modes)?;
        }
        let traced: Vec<usize> = (0..self.n_modes).filter(|m| !keep.contains(m)).collect();
        let kets: Vec<Ket> = self
            .branches
            .iter()
            .map(|b| Ket {
                atoms: AtomWord::empty(),
                modes: keep.iter().map(|&m| b.modes[m]).collect(),
            })
            .collect();
        let k = self.branches.len();
        let coeffs = DMatrix::from_fn(k, k, |i, j| {
            let (a, b) = (&self.branches[i], &self.branches[j]);
            if a.atoms != b.atoms {
                return C64::new(0.0, 0.0);
            }
            // Tr_rest |rest_i⟩⟨rest_j| = ⟨rest_j|rest_i⟩
            let env: C64 = traced
                .iter()
                .map(|&m| overlap_exponent(b.modes[m], a.modes[m]))
                .sum::<C64>()
                .exp();
            a.coeff * b.coeff.conj() * env
        });
        Ok(DensityHybrid::from_parts(0, keep.len(), kets, coeffs))
    }
}

/// |⟨a|b⟩|² / (‖a‖²‖b‖²).
pub fn fidelity_pure(a: &HybridState, b: &HybridState) -> Result<f64> {
    let (na, nb) = (a.norm2(), b.norm2());
    if na <= ZERO_NORM_TOL {
        return Err(EcsError::ZeroNorm { norm2: na });
    }
    if nb <= ZERO_NORM_TOL {
        return Err(EcsError::ZeroNorm { norm2: nb });
    }
    Ok(a.inner(b)?.norm_sqr() / (na * nb))
}

pub(crate) fn is_finite(z: C64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

fn amplitudes_close(a: &[C64], b: &[C64], tol: f64) -> bool {
    a.iter()
        .zip(b)
        .all(|(x, y)| (x.re - y.re).abs() <= tol && (x.im - y.im).abs() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn field(terms: &[(f64, Vec<C64>)]) -> HybridState {
        HybridState::field_superposition(&terms.iter().map(|(w, m)| (c(*w, 0.0), m.clone())).collect::<Vec<_>>())
            .unwrap()
    }

    #[test]
    fn vacuum_self_overlap() {
        assert_eq!(overlap(c(0.0, 0.0), c(0.0, 0.0)), c(1.0, 0.0));
    }

    #[test]
    fn opposite_amplitudes_overlap() {
        let b = c(1.0, 0.0);
        assert_relative_eq!(overlap(b, -b).re, (-2.0f64).exp(), epsilon = 1e-15);
        assert!((overlap(b, -b).re - 0.135335).abs() < 1e-6);
    }

    #[test]
    fn atom_words_orthogonal() {
        let m = vec![c(0.3, 0.1), c(-1.0, 0.2)];
        let b1 = Branch::new("eg".parse().unwrap(), c(1.0, 0.0), m.clone());
        let b2 = Branch::new("ge".parse().unwrap(), c(1.0, 0.0), m);
        assert_eq!(branch_overlap(&b1, &b2).unwrap(), c(0.0, 0.0));
        assert_eq!(branch_overlap(&b1, &b1).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn branch_shape_mismatch() {
        let b1 = Branch::new(AtomWord::empty(), c(1.0, 0.0), vec![c(0.0, 0.0)]);
        let b2 = Branch::new(AtomWord::empty(), c(1.0, 0.0), vec![]);
        assert!(matches!(branch_overlap(&b1, &b2), Err(EcsError::ShapeMismatch(_))));
    }

    #[test]
    fn word_index_roundtrip() {
        for w in AtomWord::all(4) {
            assert_eq!(AtomWord::from_index(w.index(), 4), w);
        }
        assert_eq!(
            AtomWord::all(2).iter().map(|w| w.to_string()).collect::<Vec<_>>(),
            ["ee", "eg", "ge", "gg"]
        );
        assert!("exg".parse::<AtomWord>().is_err());
    }

    #[test]
    fn two_branch_gram() {
        let b = 0.8;
        let s = field(&[(1.0, vec![c(b, 0.0)]), (1.0, vec![c(-b, 0.0)])]);
        let g = s.gram();
        let x = (-2.0 * b * b).exp();
        assert_relative_eq!(g[(0, 1)].re, x, epsilon = 1e-15);
        assert_relative_eq!(g[(1, 0)].re, x, epsilon = 1e-15);
        assert_relative_eq!(g[(0, 0)].re, 1.0);
        assert_eq!(HybridState::vacuum(2).gram().shape(), (1, 1));
    }

    #[test]
    fn ghz_bracket_norm() {
        for b in [0.0, 0.5, 1.0, 2.0] {
            let beta = c(b, 0.0);
            let s = field(&[(1.0, vec![beta; 3]), (1.0, vec![-beta; 3])]);
            assert_relative_eq!(s.norm2(), 2.0 * (1.0 + (-6.0 * b * b).exp()), epsilon = 1e-13);
        }
    }

    #[test]
    fn normalize_rejects_zero() {
        let beta = c(0.0, 0.0);
        let s = field(&[(1.0, vec![beta; 3]), (-1.0, vec![-beta; 3])]);
        assert!(matches!(s.normalize(), Err(EcsError::ZeroNorm { .. })));
    }

    #[test]
    fn normalize_scaled_coherent() {
        let s = field(&[(2.0, vec![c(0.4, -0.3)])]);
        let n = s.normalize().unwrap();
        assert_relative_eq!(n.norm2(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(n.branches()[0].coeff.re, 1.0, epsilon = 1e-15);
        let again = n.normalize().unwrap();
        assert!((again.branches()[0].coeff - n.branches()[0].coeff).norm() < 1e-15);
    }

    #[test]
    fn normalize_ghz_at_minus_two_i() {
        let beta = c(0.0, -2.0);
        let s = field(&[(1.0, vec![beta; 3]), (1.0, vec![-beta; 3])]);
        let n = s.normalize().unwrap();
        let expect = 1.0 / (2.0 * (1.0 + (-24.0f64).exp())).sqrt();
        for b in n.branches() {
            assert_relative_eq!(b.coeff.re, expect, epsilon = 1e-15);
        }
    }

    #[test]
    fn fidelity_of_opposite_coherent_states() {
        let b = c(1.0, 0.0);
        let f = fidelity_pure(&field(&[(1.0, vec![b])]), &field(&[(1.0, vec![-b])])).unwrap();
        // |⟨β|−β⟩|² = e^{−4|β|²}
        assert_relative_eq!(f, (-4.0f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn even_and_odd_ghz_orthogonal() {
        let b = c(1.0, 0.0);
        let plus = field(&[(1.0, vec![b; 3]), (1.0, vec![-b; 3])]);
        let minus = field(&[(1.0, vec![b; 3]), (-1.0, vec![-b; 3])]);
        assert!(fidelity_pure(&plus, &minus).unwrap() < 1e-30);
        assert_relative_eq!(fidelity_pure(&plus, &plus).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn prune_merges_and_drops() {
        let m = vec![c(0.5, 0.5)];
        let s = field(&[(0.5, m.clone()), (0.5, m.clone())]);
        let p = s.prune(DEFAULT_PRUNE_TOL);
        assert_eq!(p.branches().len(), 1);
        assert_relative_eq!(p.branches()[0].coeff.re, 1.0);

        let s = field(&[(1.0, m.clone()), (1e-18, vec![c(2.0, 0.0)])]);
        assert_eq!(s.prune(1e-12).branches().len(), 1);

        let s = field(&[(1.0, m.clone()), (-1.0, m)]);
        assert!(s.prune(1e-12).is_empty());
    }

    #[test]
    fn density_of_single_branch() {
        let s = field(&[(1.0, vec![c(0.2, 0.0)])]);
        let rho = s.to_density();
        assert_eq!(rho.coeffs().shape(), (1, 1));
        assert_relative_eq!(rho.coeffs()[(0, 0)].re, 1.0);
    }

    #[test]
    fn density_of_two_equal_branches() {
        let m = vec![c(0.7, 0.1)];
        let s = field(&[(0.5, m.clone()), (0.5, m)]);
        let rho = s.to_density();
        let cm = rho.coeffs();
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(cm[(i, j)].re, 0.25);
            }
        }
        assert_relative_eq!(rho.trace(), s.norm2(), epsilon = 1e-15);
        // rank one
        let ev = rho.eigenvalues();
        assert!(ev[0].abs() < 1e-14);
    }

    #[test]
    fn with_atoms_builds_product() {
        let s = HybridState::vacuum(1)
            .with_atoms(&[("e".parse().unwrap(), c(1.0, 0.0)), ("g".parse().unwrap(), c(0.0, 1.0))])
            .unwrap();
        assert_eq!(s.n_atoms(), 1);
        assert_relative_eq!(s.norm2(), 2.0);
    }

    #[test]
    fn reduced_state_of_product_is_pure() {
        let s = HybridState::product(AtomWord::empty(), vec![c(1.0, 0.0), c(-0.5, 0.3)]).unwrap();
        let rho = s.reduce_to_modes(&[1]).unwrap();
        let ev = rho.eigenvalues();
        assert_relative_eq!(ev[ev.len() - 1], 1.0, epsilon = 1e-14);
    }
}
