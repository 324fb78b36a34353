//! Protocol steps and the GHZ / W drivers.
//!
//! The elementary operations act branch-wise on a [`HybridState`]:
//! displacement of a cavity (`inject`), the dispersive conditional phase
//! rotation (`dispersive_transit`), Ramsey π/2 pulses and projective atomic
//! detection. A [`Program`] strings them together; measured atoms are removed
//! from the state.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Serialize, Serializer};

use crate::coherent::{fidelity_pure, AtomWord, Branch, HybridState, Level, C64, DEFAULT_PRUNE_TOL, ZERO_NORM_TOL};
use crate::error::{check_index, EcsError, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn from_value(v: f64) -> Sign {
        if v < 0.0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }

    pub fn parse_all(s: &str) -> Result<Vec<Sign>> {
        s.chars()
            .map(|c| match c {
                '+' => Ok(Sign::Plus),
                '-' => Ok(Sign::Minus),
                other => Err(EcsError::InvalidArgument(format!(
                    "sign must be '+' or '-', got {other:?}"
                ))),
            })
            .collect()
    }
}

impl Serialize for Sign {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_char(self.symbol())
    }
}

/// Dispersive-regime parameters: `λ = g²/δ`, `θ = λτ`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct DispersiveParams {
    pub g: f64,
    pub delta: f64,
    pub lambda: f64,
    pub tau: f64,
    pub theta: f64,
}

impl DispersiveParams {
    pub fn new(g: f64, delta: f64, tau: f64) -> Result<Self> {
        if delta == 0.0 || !delta.is_finite() {
            return Err(EcsError::InvalidArgument("detuning must be finite and non-zero".into()));
        }
        if !g.is_finite() || !(tau >= 0.0) || !tau.is_finite() {
            return Err(EcsError::InvalidArgument(format!(
                "invalid coupling {g} or transit time {tau}"
            )));
        }
        let lambda = g * g / delta;
        Ok(DispersiveParams {
            g,
            delta,
            lambda,
            tau,
            theta: lambda * tau,
        })
    }

    /// Chooses the transit time that produces phase `theta`.
    pub fn for_phase(g: f64, delta: f64, theta: f64) -> Result<Self> {
        if g == 0.0 {
            return Err(EcsError::InvalidArgument("zero coupling cannot produce a phase".into()));
        }
        let lambda = g * g / delta;
        let mut p = DispersiveParams::new(g, delta, (theta / lambda).abs())?;
        p.theta = theta;
        p.tau = theta / lambda;
        if p.tau < 0.0 {
            return Err(EcsError::InvalidArgument(
                "phase sign requires negative transit time".into(),
            ));
        }
        Ok(p)
    }

    pub fn is_dispersive(&self) -> bool {
        (self.delta / self.g).abs() >= 10.0
    }
}

/// Displaces `mode` by `gamma` in every branch:
/// `D(γ)|α⟩ = exp((γᾱ − γ̄α)/2) |α+γ⟩`.
pub fn inject(s: &HybridState, mode: usize, gamma: C64) -> Result<HybridState> {
    check_index("mode", mode, s.n_modes())?;
    let branches = s
        .branches()
        .iter()
        .map(|b| {
            let alpha = b.modes[mode];
            let phase = ((gamma * alpha.conj() - gamma.conj() * alpha) / 2.0).exp();
            let mut modes = b.modes.clone();
            modes[mode] = alpha + gamma;
            Branch::new(b.atoms.clone(), b.coeff * phase, modes)
        })
        .collect();
    Ok(s.with_branches(s.n_atoms(), branches))
}

/// Conditional rotation `|e⟩|α⟩ → |e⟩|αe^{−iθ}⟩`, `|g⟩|α⟩ → |g⟩|αe^{iθ}⟩`.
pub fn dispersive_transit(s: &HybridState, atom: usize, mode: usize, theta: f64) -> Result<HybridState> {
    check_index("atom", atom, s.n_atoms())?;
    check_index("mode", mode, s.n_modes())?;
    let rot_e = C64::from_polar(1.0, -theta);
    let rot_g = rot_e.conj();
    let branches = s
        .branches()
        .iter()
        .map(|b| {
            let mut modes = b.modes.clone();
            modes[mode] *= match b.atoms.get(atom) {
                Level::E => rot_e,
                Level::G => rot_g,
            };
            Branch::new(b.atoms.clone(), b.coeff, modes)
        })
        .collect();
    Ok(s.with_branches(s.n_atoms(), branches))
}

/// Ramsey π/2 pulse: `|e⟩ → (|e⟩+|g⟩)/√2`, `|g⟩ → (|g⟩−|e⟩)/√2`.
/// Branches are not merged; see [`HybridState::prune`].
pub fn ramsey(s: &HybridState, atom: usize) -> Result<HybridState> {
    check_index("atom", atom, s.n_atoms())?;
    let mut branches = Vec::with_capacity(2 * s.branches().len());
    for b in s.branches() {
        let (to_e, to_g) = match b.atoms.get(atom) {
            Level::E => (FRAC_1_SQRT_2, FRAC_1_SQRT_2),
            Level::G => (-FRAC_1_SQRT_2, FRAC_1_SQRT_2),
        };
        branches.push(Branch::new(
            b.atoms.with(atom, Level::E),
            b.coeff * to_e,
            b.modes.clone(),
        ));
        branches.push(Branch::new(
            b.atoms.with(atom, Level::G),
            b.coeff * to_g,
            b.modes.clone(),
        ));
    }
    Ok(s.with_branches(s.n_atoms(), branches))
}

/// Projective detection of `atom` in `outcome`. Returns the outcome
/// probability and the normalized post-measurement state with the atom
/// removed.
pub fn measure(s: &HybridState, atom: usize, outcome: Level) -> Result<(f64, HybridState)> {
    let total = s.norm2();
    if total <= ZERO_NORM_TOL {
        return Err(EcsError::ZeroNorm { norm2: total });
    }
    let projected = s.project_atom(atom, outcome)?.prune(DEFAULT_PRUNE_TOL);
    let n2 = projected.norm2();
    let probability = n2 / total;
    if probability < ZERO_NORM_TOL {
        return Err(EcsError::ZeroNorm { norm2: n2 });
    }
    Ok((probability, projected.normalize()?))
}

/// Probability and post-measurement field state for every word of the
/// remaining atoms. Impossible outcomes carry `None`.
pub fn tabulate(s: &HybridState) -> Result<Vec<(AtomWord, f64, Option<HybridState>)>> {
    let total = s.norm2();
    if total <= ZERO_NORM_TOL {
        return Err(EcsError::ZeroNorm { norm2: total });
    }
    AtomWord::all(s.n_atoms())
        .into_iter()
        .map(|word| {
            let branches: Vec<Branch> = s
                .branches()
                .iter()
                .filter(|b| b.atoms == word)
                .map(|b| Branch::new(AtomWord::empty(), b.coeff, b.modes.clone()))
                .collect();
            let projected = s.with_branches(0, branches).prune(DEFAULT_PRUNE_TOL);
            let probability = projected.norm2() / total;
            let post = if probability < ZERO_NORM_TOL {
                None
            } else {
                Some(projected.normalize()?)
            };
            Ok((word, probability, post))
        })
        .collect()
}

/// Normalized `c(|β…β⟩ ± |−β…−β⟩)` on `n` modes.
pub fn reference_ghz(n: usize, beta: C64, sign: Sign) -> Result<HybridState> {
    HybridState::field_superposition(&[
        (C64::new(1.0, 0.0), vec![beta; n]),
        (C64::new(sign.value(), 0.0), vec![-beta; n]),
    ])?
    .normalize()
}

/// Normalized `Σ_i s_i w_i |β…(−β)_i…β⟩`: slot `i` carries `−β`, every other
/// slot `β`. Weights default to 1.
pub fn reference_w(beta: C64, signs: &[Sign], weights: Option<&[C64]>) -> Result<HybridState> {
    let n = signs.len();
    if n == 0 {
        return Err(EcsError::InvalidArgument("W reference needs at least one mode".into()));
    }
    if let Some(w) = weights {
        if w.len() != n {
            return Err(EcsError::ShapeMismatch(format!("{} weights for {n} modes", w.len())));
        }
    }
    let terms: Vec<(C64, Vec<C64>)> = (0..n)
        .map(|i| {
            let weight = weights.map_or(C64::new(1.0, 0.0), |w| w[i]);
            let mut modes = vec![beta; n];
            modes[i] = -beta;
            (weight * signs[i].value(), modes)
        })
        .collect();
    HybridState::field_superposition(&terms)?
        .prune(DEFAULT_PRUNE_TOL)
        .normalize()
}

/// Relative signs of the field branches left behind when the W register is
/// detected in `word` after the Ramsey pulses: branch `i` (atom `i` excited)
/// carries `(−1)^{#e in word, excluding position i}`. Normalized so the
/// first sign is `+`.
pub fn w_outcome_signs(word: &AtomWord) -> Vec<Sign> {
    let excited = word.count(Level::E);
    let raw: Vec<f64> = (0..word.len())
        .map(|i| {
            let k = excited - usize::from(word.get(i) == Level::E);
            if k.is_multiple_of(2) {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    let first = raw.first().copied().unwrap_or(1.0);
    raw.into_iter().map(|v| Sign::from_value(v * first)).collect()
}

/// Outcomes `w` and its complement project onto the same W-type state; the
/// label lists the g-first word of the pair first.
pub fn w_group_label(word: &AtomWord) -> String {
    let comp = word.complement();
    let (a, b) = if word >= &comp { (word, &comp) } else { (&comp, word) };
    format!("{a}|{b}")
}

/// How each tabulated outcome is compared with an ideal state.
#[derive(Clone, Debug, PartialEq)]
pub enum ReferenceRule {
    None,
    /// One detected atom: `g` → even GHZ state, `e` → odd.
    Ghz {
        beta: C64,
    },
    /// One detected atom per mode; signs from [`w_outcome_signs`].
    W {
        beta: C64,
        weights: Option<Vec<C64>>,
    },
}

impl ReferenceRule {
    fn reference_for(
        &self,
        word: &AtomWord,
        n_modes: usize,
    ) -> Option<(Vec<Sign>, Option<String>, Result<HybridState>)> {
        match self {
            ReferenceRule::None => None,
            ReferenceRule::Ghz { beta } => {
                let sign = if word.levels() == [Level::G] {
                    Sign::Plus
                } else {
                    Sign::Minus
                };
                Some((vec![sign], None, reference_ghz(n_modes, *beta, sign)))
            }
            ReferenceRule::W { beta, weights } => {
                let signs = w_outcome_signs(word);
                let state = reference_w(*beta, &signs, weights.as_deref());
                Some((signs, Some(w_group_label(word)), state))
            }
        }
    }
}

/// A protocol step. Atom indices are labels into the initial register and
/// stay valid after other atoms are measured.
#[derive(Clone, Debug, PartialEq)]
pub enum Step {
    Inject { mode: usize, gamma: C64 },
    Transit { atom: usize, mode: usize, theta: f64 },
    Ramsey { atom: usize },
    Measure { atom: usize, outcome: Level },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    pub initial: HybridState,
    pub steps: Vec<Step>,
    /// Tabulate every remaining atom after the last step.
    pub tabulate: bool,
    pub reference: ReferenceRule,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PostSelection {
    pub atom: usize,
    pub outcome: Level,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Outcome {
    pub word: AtomWord,
    pub probability: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_signs: Option<Vec<Sign>>,
    pub fidelity: Option<f64>,
    pub state: Option<HybridState>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProtocolResult {
    /// Labels of the tabulated atoms, in word order.
    pub atoms: Vec<usize>,
    pub postselection: Vec<PostSelection>,
    pub outcomes: Vec<Outcome>,
    pub pre_measurement: HybridState,
}

impl ProtocolResult {
    pub fn outcome(&self, word: &str) -> Option<&Outcome> {
        self.outcomes.iter().find(|o| o.word.to_string() == word)
    }

    pub fn total_probability(&self) -> f64 {
        self.outcomes.iter().map(|o| o.probability).sum()
    }
}

impl Program {
    /// Runs all steps; returns the state before the final tabulation, the
    /// labels of the atoms still present and any post-selections made.
    pub fn evolve(&self) -> Result<(HybridState, Vec<usize>, Vec<PostSelection>)> {
        let mut state = self.initial.clone();
        let mut live: Vec<usize> = (0..state.n_atoms()).collect();
        let mut postselection = Vec::new();
        let position = |live: &[usize], label: usize| {
            live.iter().position(|&l| l == label).ok_or_else(|| {
                EcsError::InvalidArgument(format!(
                    "atom {label} is not present (already measured or out of range)"
                ))
            })
        };
        for step in &self.steps {
            state = match *step {
                Step::Inject { mode, gamma } => inject(&state, mode, gamma)?,
                Step::Transit { atom, mode, theta } => dispersive_transit(&state, position(&live, atom)?, mode, theta)?,
                Step::Ramsey { atom } => ramsey(&state, position(&live, atom)?)?,
                Step::Measure { atom, outcome } => {
                    let pos = position(&live, atom)?;
                    let (probability, post) = measure(&state, pos, outcome)?;
                    live.remove(pos);
                    postselection.push(PostSelection {
                        atom,
                        outcome,
                        probability,
                    });
                    post
                }
            }
            .prune(DEFAULT_PRUNE_TOL);
        }
        Ok((state, live, postselection))
    }

    pub fn run(&self) -> Result<ProtocolResult> {
        let (state, live, postselection) = self.evolve()?;
        let n_modes = state.n_modes();
        let raw = if self.tabulate {
            tabulate(&state)?
        } else {
            vec![(AtomWord::empty(), 1.0, Some(state.normalize()?))]
        };
        let outcomes = raw
            .into_iter()
            .map(|(word, probability, post)| {
                let (reference_signs, group, fidelity) = match self.reference.reference_for(&word, n_modes) {
                    None => (None, None, None),
                    Some((signs, group, reference)) => {
                        let fidelity = match (&post, reference) {
                            (Some(p), Ok(r)) => Some(fidelity_pure(p, &r)?),
                            _ => None,
                        };
                        (Some(signs), group, fidelity)
                    }
                };
                Ok(Outcome {
                    word,
                    probability,
                    group,
                    reference_signs,
                    fidelity,
                    state: post,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ProtocolResult {
            atoms: if self.tabulate { live } else { Vec::new() },
            postselection,
            outcomes,
            pre_measurement: state,
        })
    }
}

/// Single atom, `n` cavities: inject α everywhere, prepare the atom in
/// `(|e⟩+|g⟩)/√2` (excitation plus a Ramsey pulse), cross all cavities with
/// equal phase θ, apply a second Ramsey pulse and detect the atom.
pub fn ghz_program(n: usize, alpha: C64, theta: f64) -> Result<Program> {
    if n == 0 {
        return Err(EcsError::InvalidArgument(
            "GHZ protocol needs at least one cavity".into(),
        ));
    }
    let initial = HybridState::vacuum(n).with_atoms(&[(AtomWord::uniform(Level::E, 1), C64::new(1.0, 0.0))])?;
    let mut steps: Vec<Step> = (0..n).map(|mode| Step::Inject { mode, gamma: alpha }).collect();
    steps.push(Step::Ramsey { atom: 0 });
    steps.extend((0..n).map(|mode| Step::Transit { atom: 0, mode, theta }));
    steps.push(Step::Ramsey { atom: 0 });
    Ok(Program {
        initial,
        steps,
        tabulate: true,
        reference: ReferenceRule::Ghz {
            beta: alpha * C64::from_polar(1.0, -theta),
        },
    })
}

pub fn run_ghz(n: usize, alpha: C64, theta: f64) -> Result<ProtocolResult> {
    ghz_program(n, alpha, theta)?.run()
}

/// `Σ_i w_i |g…e_i…g⟩`, normalized; equal weights by default.
pub fn w_register(n: usize, weights: Option<&[C64]>) -> Result<Vec<(AtomWord, C64)>> {
    if let Some(w) = weights {
        if w.len() != n {
            return Err(EcsError::ShapeMismatch(format!("{} weights for {n} atoms", w.len())));
        }
    }
    let raw: Vec<C64> = (0..n).map(|i| weights.map_or(C64::new(1.0, 0.0), |w| w[i])).collect();
    let norm = raw.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm * norm <= ZERO_NORM_TOL {
        return Err(EcsError::ZeroNorm { norm2: norm * norm });
    }
    Ok((0..n)
        .map(|i| (AtomWord::uniform(Level::G, n).with(i, Level::E), raw[i] / norm))
        .collect())
}

/// `n` atoms sharing a W state, atom `i` crossing cavity `i` with phase θ,
/// one Ramsey pulse per atom, then detection of all atoms.
pub fn w_program(n: usize, alpha: C64, theta: f64, weights: Option<&[C64]>) -> Result<Program> {
    if n < 2 {
        return Err(EcsError::InvalidArgument("W protocol needs at least two atoms".into()));
    }
    let initial = HybridState::vacuum(n).with_atoms(&w_register(n, weights)?)?;
    let mut steps: Vec<Step> = (0..n).map(|mode| Step::Inject { mode, gamma: alpha }).collect();
    steps.extend((0..n).map(|i| Step::Transit {
        atom: i,
        mode: i,
        theta,
    }));
    steps.extend((0..n).map(|atom| Step::Ramsey { atom }));
    Ok(Program {
        initial,
        steps,
        tabulate: true,
        reference: ReferenceRule::W {
            // the excited atom's cavity ends at αe^{−iθ} = −(αe^{iθ}) when θ = π/2
            beta: alpha * C64::from_polar(1.0, theta),
            weights: weights.map(|w| w.to_vec()),
        },
    })
}

pub fn run_w(n: usize, alpha: C64, theta: f64) -> Result<ProtocolResult> {
    w_program(n, alpha, theta, None)?.run()
}

pub fn run_w_weighted(n: usize, alpha: C64, theta: f64, weights: &[C64]) -> Result<ProtocolResult> {
    w_program(n, alpha, theta, Some(weights))?.run()
}
