//! Declarative protocol description, read from TOML.
//!
//! ```toml
//! n_modes = 3
//! initial_alphas = ["0", "0", "0"]   # optional; vacuum by default
//!
//! [[atoms]]
//! kind = "word"                      # or "superposition" / "w"
//! word = "e"
//!
//! [[steps]]
//! op = "inject"
//! mode = 0
//! gamma = "1+1i"
//!
//! [[steps]]
//! op = "transit"
//! atom = 0
//! mode = 0
//! theta = "pi/2"                     # or g, delta, tau
//!
//! [[steps]]
//! op = "measure"
//! outcome = "tabulate"               # or atom = 0, outcome = "g"
//!
//! [reference]
//! kind = "ghz"
//! alpha = "1+1i"
//! theta = "pi/2"
//! ```

use std::path::Path;

use ecs_core::protocol::{DispersiveParams, Program, ReferenceRule, Step};
use ecs_core::{AtomWord, HybridState, Level, C64};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::value::{Amplitude, Angle};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSpec {
    pub n_modes: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub initial_alphas: Vec<Amplitude>,
    #[serde(default)]
    pub atoms: Vec<AtomBlock>,
    pub steps: Vec<StepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub damping: Option<DampingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceSpec>,
}

/// One factor of the initial atomic register; factors are tensored in order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AtomBlock {
    Word {
        word: String,
    },
    Superposition {
        terms: Vec<RegisterTerm>,
    },
    W {
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<Amplitude>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegisterTerm {
    pub word: String,
    pub amplitude: Amplitude,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StepSpec {
    Inject {
        mode: usize,
        gamma: Amplitude,
    },
    /// Either `theta`, or all of `g`, `delta`, `tau` with `θ = g²τ/δ`.
    Transit {
        atom: usize,
        mode: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        theta: Option<Angle>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        g: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tau: Option<f64>,
    },
    Ramsey {
        atom: usize,
    },
    Measure {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        atom: Option<usize>,
        outcome: MeasureOutcome,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureOutcome {
    E,
    G,
    Tabulate,
}

/// Photon loss applied to every tabulated field state after the protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DampingSpec {
    pub kappa: f64,
    pub t: f64,
    /// Defaults to every mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<usize>>,
}

/// Ideal states the tabulated outcomes are compared with. GHZ uses
/// `β = αe^{−iθ}`; W uses `β = αe^{iθ}` with `−β` in the excited atom's slot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ReferenceSpec {
    Ghz {
        alpha: Amplitude,
        theta: Angle,
    },
    W {
        alpha: Amplitude,
        theta: Angle,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<Amplitude>>,
    },
}

impl ReferenceSpec {
    pub fn beta(&self) -> C64 {
        match self {
            ReferenceSpec::Ghz { alpha, theta } => alpha.value() * C64::from_polar(1.0, -theta.value()),
            ReferenceSpec::W { alpha, theta, .. } => alpha.value() * C64::from_polar(1.0, theta.value()),
        }
    }
}

/// A consecutive run of transit steps, in register labels.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitBlock {
    /// Index of the first transit in `steps`.
    pub start: usize,
    pub transits: Vec<(usize, usize)>,
    /// Common phase, if all transits share one.
    pub theta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BuiltSpec {
    pub program: Program,
    pub damping: Option<(f64, f64, Vec<usize>)>,
    pub beta_ref: Option<C64>,
    pub transit_block: Option<TransitBlock>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn parse_word(w: &str) -> CliResult<AtomWord> {
    w.parse::<AtomWord>()
        .map_err(|_| invalid(format!("atom word {w:?} may only contain 'e' and 'g'")))
}

fn step_name(s: &StepSpec) -> &'static str {
    match s {
        StepSpec::Inject { .. } => "inject",
        StepSpec::Transit { .. } => "transit",
        StepSpec::Ramsey { .. } => "ramsey",
        StepSpec::Measure { .. } => "measure",
    }
}

impl ProtocolSpec {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| invalid(format!("spec file: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read spec {}: {e}", path.display())))?;
        ProtocolSpec::from_toml(&text)
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Tolerance(format!("cannot serialize spec: {e}")))
    }

    /// Single atom crossing `n` cavities between two Ramsey pulses.
    pub fn ghz(n: usize, alpha: Amplitude, theta: Angle) -> Self {
        let mut steps: Vec<StepSpec> = (0..n)
            .map(|mode| StepSpec::Inject {
                mode,
                gamma: alpha.clone(),
            })
            .collect();
        steps.push(StepSpec::Ramsey { atom: 0 });
        steps.extend((0..n).map(|mode| transit(0, mode, &theta)));
        steps.push(StepSpec::Ramsey { atom: 0 });
        steps.push(StepSpec::Measure {
            atom: None,
            outcome: MeasureOutcome::Tabulate,
        });
        ProtocolSpec {
            n_modes: n,
            initial_alphas: Vec::new(),
            atoms: vec![AtomBlock::Word { word: "e".into() }],
            steps,
            damping: None,
            reference: Some(ReferenceSpec::Ghz { alpha, theta }),
        }
    }

    /// `n` atoms in a W state, atom `i` crossing cavity `i`.
    pub fn w(n: usize, alpha: Amplitude, theta: Angle, weights: Option<Vec<Amplitude>>) -> Self {
        let mut steps: Vec<StepSpec> = (0..n)
            .map(|mode| StepSpec::Inject {
                mode,
                gamma: alpha.clone(),
            })
            .collect();
        steps.extend((0..n).map(|i| transit(i, i, &theta)));
        steps.extend((0..n).map(|atom| StepSpec::Ramsey { atom }));
        steps.push(StepSpec::Measure {
            atom: None,
            outcome: MeasureOutcome::Tabulate,
        });
        ProtocolSpec {
            n_modes: n,
            initial_alphas: Vec::new(),
            atoms: vec![AtomBlock::W {
                n,
                weights: weights.clone(),
            }],
            steps,
            damping: None,
            reference: Some(ReferenceSpec::W { alpha, theta, weights }),
        }
    }

    fn initial_state(&self) -> CliResult<HybridState> {
        if self.n_modes == 0 {
            return Err(invalid("n_modes must be at least 1"));
        }
        let alphas: Vec<C64> = if self.initial_alphas.is_empty() {
            vec![C64::new(0.0, 0.0); self.n_modes]
        } else if self.initial_alphas.len() == self.n_modes {
            self.initial_alphas.iter().map(Amplitude::value).collect()
        } else {
            return Err(invalid(format!(
                "initial_alphas has {} entries for {} modes",
                self.initial_alphas.len(),
                self.n_modes
            )));
        };
        let mut state = HybridState::product(AtomWord::empty(), alphas)?;
        for (k, block) in self.atoms.iter().enumerate() {
            let register = register_block(block).map_err(|e| e.context(&format!("atoms block {k}")))?;
            state = state.with_atoms(&register)?;
        }
        Ok(state)
    }

    /// Checks every rule and produces an executable program.
    pub fn build(&self) -> CliResult<BuiltSpec> {
        let initial = self.initial_state()?;
        let n_atoms = initial.n_atoms();
        let mut live: Vec<usize> = (0..n_atoms).collect();
        let mut steps = Vec::with_capacity(self.steps.len());
        let mut tabulate = false;
        let mut block: Option<TransitBlock> = None;
        let mut block_closed = false;
        for (k, s) in self.steps.iter().enumerate() {
            let at = format!("step {k} ({})", step_name(s));
            if tabulate {
                return Err(invalid(format!("{at}: nothing may follow the tabulating measurement")));
            }
            let check_atom = |atom: usize| -> CliResult<()> {
                if atom >= n_atoms {
                    Err(invalid(format!("{at}: atom {atom} out of range ({n_atoms} atoms)")))
                } else if !live.contains(&atom) {
                    Err(invalid(format!("{at}: atom {atom} was already measured")))
                } else {
                    Ok(())
                }
            };
            let check_mode = |mode: usize| -> CliResult<()> {
                if mode >= self.n_modes {
                    Err(invalid(format!(
                        "{at}: mode {mode} out of range ({} modes)",
                        self.n_modes
                    )))
                } else {
                    Ok(())
                }
            };
            let is_transit = matches!(s, StepSpec::Transit { .. });
            if !is_transit && block.is_some() {
                block_closed = true;
            }
            match s {
                StepSpec::Inject { mode, gamma } => {
                    check_mode(*mode)?;
                    steps.push(Step::Inject {
                        mode: *mode,
                        gamma: gamma.value(),
                    });
                }
                StepSpec::Transit {
                    atom,
                    mode,
                    theta,
                    g,
                    delta,
                    tau,
                } => {
                    check_atom(*atom)?;
                    check_mode(*mode)?;
                    let theta = match (theta, g, delta, tau) {
                        (Some(t), None, None, None) => t.value(),
                        (None, Some(g), Some(d), Some(tau)) => {
                            DispersiveParams::new(*g, *d, *tau)
                                .map_err(|e| CliError::from(e).context(&at))?
                                .theta
                        }
                        _ => return Err(invalid(format!("{at}: give either theta or all of g, delta, tau"))),
                    };
                    if block_closed {
                        block = None;
                        block_closed = false;
                    }
                    let b = block.get_or_insert(TransitBlock {
                        start: k,
                        transits: Vec::new(),
                        theta: Some(theta),
                    });
                    b.transits.push((*atom, *mode));
                    if b.theta != Some(theta) {
                        b.theta = None;
                    }
                    steps.push(Step::Transit {
                        atom: *atom,
                        mode: *mode,
                        theta,
                    });
                }
                StepSpec::Ramsey { atom } => {
                    check_atom(*atom)?;
                    steps.push(Step::Ramsey { atom: *atom });
                }
                StepSpec::Measure { atom, outcome } => match (atom, outcome) {
                    (None, MeasureOutcome::Tabulate) => tabulate = true,
                    (Some(_), MeasureOutcome::Tabulate) => {
                        return Err(invalid(format!(
                            "{at}: tabulate measures every remaining atom; drop `atom`"
                        )))
                    }
                    (None, _) => return Err(invalid(format!("{at}: measuring an outcome needs `atom`"))),
                    (Some(a), o) => {
                        check_atom(*a)?;
                        live.retain(|l| l != a);
                        let level = if *o == MeasureOutcome::E { Level::E } else { Level::G };
                        steps.push(Step::Measure {
                            atom: *a,
                            outcome: level,
                        });
                    }
                },
            }
        }

        let (reference, beta_ref) = match &self.reference {
            None => (ReferenceRule::None, None),
            Some(r) => {
                if !tabulate {
                    return Err(invalid("reference: needs a final tabulating measurement"));
                }
                let beta = r.beta();
                let rule = match r {
                    ReferenceSpec::Ghz { .. } => {
                        if live.len() != 1 {
                            return Err(invalid(format!(
                                "reference: ghz needs one tabulated atom, found {}",
                                live.len()
                            )));
                        }
                        ReferenceRule::Ghz { beta }
                    }
                    ReferenceSpec::W { weights, .. } => {
                        if live.len() != self.n_modes {
                            return Err(invalid(format!(
                                "reference: w needs one tabulated atom per mode, found {} for {} modes",
                                live.len(),
                                self.n_modes
                            )));
                        }
                        let weights = match weights {
                            Some(w) if w.len() != self.n_modes => {
                                return Err(invalid(format!(
                                    "reference: {} weights for {} modes",
                                    w.len(),
                                    self.n_modes
                                )))
                            }
                            Some(w) => Some(w.iter().map(Amplitude::value).collect()),
                            None => None,
                        };
                        ReferenceRule::W { beta, weights }
                    }
                };
                (rule, Some(beta))
            }
        };

        let damping = match &self.damping {
            None => None,
            Some(d) => {
                if !(d.kappa >= 0.0 && d.kappa.is_finite() && d.t >= 0.0 && d.t.is_finite()) {
                    return Err(invalid("damping: kappa and t must be finite and non-negative"));
                }
                let modes = d.modes.clone().unwrap_or_else(|| (0..self.n_modes).collect());
                if let Some(m) = modes.iter().find(|&&m| m >= self.n_modes) {
                    return Err(invalid(format!(
                        "damping: mode {m} out of range ({} modes)",
                        self.n_modes
                    )));
                }
                Some((d.kappa, d.t, modes))
            }
        };

        Ok(BuiltSpec {
            program: Program {
                initial,
                steps,
                tabulate,
                reference,
            },
            damping,
            beta_ref,
            transit_block: block,
        })
    }
}

fn transit(atom: usize, mode: usize, theta: &Angle) -> StepSpec {
    StepSpec::Transit {
        atom,
        mode,
        theta: Some(theta.clone()),
        g: None,
        delta: None,
        tau: None,
    }
}

fn register_block(block: &AtomBlock) -> CliResult<Vec<(AtomWord, C64)>> {
    match block {
        AtomBlock::Word { word } => Ok(vec![(parse_word(word)?, C64::new(1.0, 0.0))]),
        AtomBlock::Superposition { terms } => {
            if terms.is_empty() {
                return Err(invalid("superposition has no terms"));
            }
            let parsed = terms
                .iter()
                .map(|t| Ok((parse_word(&t.word)?, t.amplitude.value())))
                .collect::<CliResult<Vec<_>>>()?;
            if parsed.iter().any(|(w, _)| w.len() != parsed[0].0.len()) {
                return Err(invalid("superposition words differ in length"));
            }
            let norm2: f64 = parsed.iter().map(|(_, c)| c.norm_sqr()).sum();
            if norm2 <= ecs_core::ZERO_NORM_TOL {
                return Err(invalid("superposition amplitudes are all zero"));
            }
            let s = 1.0 / norm2.sqrt();
            Ok(parsed.into_iter().map(|(w, c)| (w, c * s)).collect())
        }
        AtomBlock::W { n, weights } => {
            if *n < 1 {
                return Err(invalid("w block needs at least one atom"));
            }
            let w: Option<Vec<C64>> = weights.as_ref().map(|w| w.iter().map(Amplitude::value).collect());
            Ok(ecs_core::protocol::w_register(*n, w.as_deref())?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn amp(s: &str) -> Amplitude {
        s.parse().unwrap()
    }

    fn angle(s: &str) -> Angle {
        s.parse().unwrap()
    }

    #[test]
    fn ghz_spec_round_trips() {
        let spec = ProtocolSpec::ghz(3, amp("1+1i"), angle("pi/2"));
        let text = spec.to_toml().unwrap();
        assert_eq!(ProtocolSpec::from_toml(&text).unwrap(), spec);
    }

    #[test]
    fn w_spec_builds_core_program() {
        let spec = ProtocolSpec::w(3, amp("1"), angle("pi/2"), None);
        let built = spec.build().unwrap();
        let core = ecs_core::protocol::w_program(3, C64::new(1.0, 0.0), std::f64::consts::FRAC_PI_2, None).unwrap();
        assert_eq!(built.program, core);
        let block = built.transit_block.unwrap();
        assert_eq!(block.transits, vec![(0, 0), (1, 1), (2, 2)]);
    }

    #[test]
    fn rejects_bad_indices() {
        let mut spec = ProtocolSpec::ghz(3, amp("1"), angle("pi/2"));
        spec.steps[4] = transit(5, 0, &angle("pi/2"));
        let err = spec.build().unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("step 4 (transit)"), "{err}");
    }

    #[test]
    fn rejects_use_after_measurement() {
        let mut spec = ProtocolSpec::ghz(1, amp("1"), angle("pi/2"));
        spec.reference = None;
        spec.steps.insert(
            2,
            StepSpec::Measure {
                atom: Some(0),
                outcome: MeasureOutcome::G,
            },
        );
        let err = spec.build().unwrap_err();
        assert!(err.to_string().contains("already measured"), "{err}");
    }

    #[test]
    fn transit_forms() {
        let text = r#"
n_modes = 1
[[atoms]]
kind = "word"
word = "e"
[[steps]]
op = "transit"
atom = 0
mode = 0
g = 1.0
delta = 50.0
tau = 2.0
"#;
        let built = ProtocolSpec::from_toml(text).unwrap().build().unwrap();
        assert_eq!(
            built.program.steps,
            vec![Step::Transit {
                atom: 0,
                mode: 0,
                theta: 2.0 / 50.0
            }]
        );
        let both = text.replace("tau = 2.0", "tau = 2.0\ntheta = \"pi\"");
        assert!(ProtocolSpec::from_toml(&both).unwrap().build().is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = "n_modes = 1\nsteps = []\nbogus = 3\n";
        assert!(ProtocolSpec::from_toml(text).is_err());
    }

    mod round_trip {
        use super::*;
        use proptest::prelude::*;

        fn amp_text() -> impl Strategy<Value = Amplitude> {
            (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(re, im)| format!("{re}{im:+}i").parse().unwrap())
        }

        fn angle_text() -> impl Strategy<Value = Angle> {
            prop_oneof![
                (-6.0f64..6.0).prop_map(|v| v.to_string().parse().unwrap()),
                (-4i32..5, 1u32..9).prop_map(|(k, d)| format!("{k}pi/{d}").parse().unwrap()),
            ]
        }

        fn step() -> impl Strategy<Value = StepSpec> {
            prop_oneof![
                (0usize..4, amp_text()).prop_map(|(mode, gamma)| StepSpec::Inject { mode, gamma }),
                (0usize..4, 0usize..4, angle_text()).prop_map(|(atom, mode, t)| transit(atom, mode, &t)),
                (0usize..4, 0usize..4, 0.1f64..2.0, 1.0f64..100.0, 0.0f64..50.0).prop_map(|(atom, mode, g, d, tau)| {
                    StepSpec::Transit {
                        atom,
                        mode,
                        theta: None,
                        g: Some(g),
                        delta: Some(d),
                        tau: Some(tau),
                    }
                }),
                (0usize..4).prop_map(|atom| StepSpec::Ramsey { atom }),
                (
                    proptest::option::of(0usize..4),
                    prop_oneof![
                        Just(MeasureOutcome::E),
                        Just(MeasureOutcome::G),
                        Just(MeasureOutcome::Tabulate)
                    ]
                )
                    .prop_map(|(atom, outcome)| StepSpec::Measure { atom, outcome }),
            ]
        }

        fn block() -> impl Strategy<Value = AtomBlock> {
            prop_oneof![
                "[eg]{1,3}".prop_map(|word| AtomBlock::Word { word }),
                proptest::collection::vec(("[eg]{2}", amp_text()), 1..4).prop_map(|t| AtomBlock::Superposition {
                    terms: t
                        .into_iter()
                        .map(|(word, amplitude)| RegisterTerm { word, amplitude })
                        .collect()
                }),
                (
                    2usize..4,
                    proptest::option::of(proptest::collection::vec(amp_text(), 3))
                )
                    .prop_map(|(n, weights)| AtomBlock::W { n, weights }),
            ]
        }

        prop_compose! {
            fn any_spec()(
                n_modes in 1usize..5,
                initial_alphas in proptest::collection::vec(amp_text(), 0..4),
                atoms in proptest::collection::vec(block(), 0..3),
                steps in proptest::collection::vec(step(), 0..8),
                damping in proptest::option::of((0.0f64..10.0, 0.0f64..1.0, proptest::option::of(proptest::collection::vec(0usize..4, 0..3)))),
                reference in proptest::option::of((amp_text(), angle_text(), any::<bool>())),
            ) -> ProtocolSpec {
                ProtocolSpec {
                    n_modes,
                    initial_alphas,
                    atoms,
                    steps,
                    damping: damping.map(|(kappa, t, modes)| DampingSpec { kappa, t, modes }),
                    reference: reference.map(|(alpha, theta, ghz)| if ghz {
                        ReferenceSpec::Ghz { alpha, theta }
                    } else {
                        ReferenceSpec::W { alpha, theta, weights: None }
                    }),
                }
            }
        }

        proptest! {
            #[test]
            fn parse_serialize_parse_is_identity(spec in any_spec()) {
                let text = spec.to_toml().unwrap();
                let back = ProtocolSpec::from_toml(&text).unwrap();
                prop_assert_eq!(&back, &spec);
                prop_assert_eq!(back.to_toml().unwrap(), text);
            }
        }
    }
}
