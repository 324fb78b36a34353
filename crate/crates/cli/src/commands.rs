use std::time::Instant;

use ecs_core::analysis::{bipartitions, entanglement_sweep, negativity, qubitize, reduced_entropy, Family};
use ecs_core::decoherence::{storage_fidelity, storage_fidelity_on, timescale_report, TimescaleParams};
use ecs_core::fock::{validate_transits, DispersiveCheck};
use ecs_core::protocol::Program;
use ecs_core::{AtomWord, HybridState, Level, ProtocolResult, Sign, C64};
use rand::distributions::WeightedIndex;
use rand::prelude::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::args::{Cli, Command, DecohereArgs, FamilyArg, Output, RunFlags, SweepArgs, TimescaleArgs, ValidateArgs};
use crate::error::{CliError, CliResult};
use crate::report::{
    check_probabilities, emit, fmt_f64, outcome_table, to_csv, to_json, DecoherenceBlock, GridReport, ModeEntanglement,
    RunReport, SampleBlock, TOOL, VERSION,
};
use crate::spec::{BuiltSpec, ProtocolSpec};

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::RunGhz(a) => {
            let spec = ProtocolSpec::ghz(a.n, a.alpha, a.theta);
            if a.emit_spec {
                return emit(&spec.to_toml()?, a.flags.output.out.as_deref());
            }
            run_and_emit(spec, &a.flags)
        }
        Command::RunW(a) => {
            let spec = ProtocolSpec::w(a.n, a.alpha, a.theta, a.weights);
            if a.emit_spec {
                return emit(&spec.to_toml()?, a.flags.output.out.as_deref());
            }
            run_and_emit(spec, &a.flags)
        }
        Command::RunSpec(a) => run_and_emit(ProtocolSpec::load(&a.path)?, &a.flags),
        Command::ValidateDispersive(a) => validate_dispersive(&a),
        Command::Decohere(a) => decohere(&a),
        Command::SweepEntanglement(a) => sweep(&a),
        Command::Timescales(a) => timescales(&a),
    }
}

fn run_and_emit(spec: ProtocolSpec, flags: &RunFlags) -> CliResult<()> {
    let report = run_spec(spec, flags)?;
    if let Some(path) = &flags.output.table {
        std::fs::write(path, outcome_table(&report.result)?)?;
    }
    emit(&to_json(&report)?, flags.output.out.as_deref())
}

/// Builds and runs `spec` with the optional blocks requested by `flags`.
pub fn run_spec(spec: ProtocolSpec, flags: &RunFlags) -> CliResult<RunReport> {
    let start = Instant::now();
    let built = spec.build()?;
    let result = built.program.run()?;
    check_probabilities(&result)?;

    let fock_validation = if flags.validate_fock {
        Some(fock_check(&built, flags.detuning_ratio, flags.tail_eps)?)
    } else {
        None
    };

    let damping = match (flags.kappa, flags.t) {
        (Some(kappa), Some(t)) => {
            if !(kappa >= 0.0 && t >= 0.0) {
                return Err(CliError::Validation("--kappa and --t must be non-negative".into()));
            }
            Some((kappa, t, (0..spec.n_modes).collect()))
        }
        _ => built.damping.clone(),
    };
    let decoherence = match damping {
        None => None,
        Some((kappa, t, modes)) => {
            let storage_fidelity = result
                .outcomes
                .iter()
                .map(|o| {
                    o.state
                        .as_ref()
                        .map(|s| storage_fidelity_on(s, &modes, kappa, t))
                        .transpose()
                })
                .collect::<ecs_core::Result<Vec<_>>>()?;
            Some(DecoherenceBlock {
                kappa,
                t,
                modes,
                storage_fidelity,
            })
        }
    };

    let entanglement = if flags.entanglement {
        let beta = built
            .beta_ref
            .ok_or_else(|| CliError::Validation("--entanglement needs a reference block to fix β".into()))?;
        Some(entanglement_block(&result, beta)?)
    } else {
        None
    };

    let sample = match (flags.sample, flags.seed) {
        (Some(shots), Some(seed)) => Some(sample(&result, shots, seed)?),
        _ => None,
    };

    Ok(RunReport {
        tool: TOOL,
        version: VERSION,
        spec,
        result,
        sample,
        fock_validation,
        decoherence,
        entanglement,
        wall_clock_seconds: flags.output.timing.then(|| start.elapsed().as_secs_f64()),
    })
}

/// Re-runs the first run of consecutive transits through the exact propagator.
fn fock_check(built: &BuiltSpec, ratio: f64, tail_eps: f64) -> CliResult<DispersiveCheck> {
    let block = built
        .transit_block
        .as_ref()
        .ok_or_else(|| CliError::Validation("--validate-fock: the protocol has no transit steps".into()))?;
    let theta = block.theta.ok_or_else(|| {
        CliError::Validation("--validate-fock: transits in the first block use different phases".into())
    })?;
    let prefix = Program {
        initial: built.program.initial.clone(),
        steps: built.program.steps[..block.start].to_vec(),
        tabulate: false,
        reference: ecs_core::protocol::ReferenceRule::None,
    };
    let (state, live, _) = prefix.evolve()?;
    let transits = block
        .transits
        .iter()
        .map(|&(atom, mode)| {
            let pos = live.iter().position(|&l| l == atom).ok_or_else(|| {
                CliError::Validation(format!(
                    "--validate-fock: atom {atom} is not present at the transit block"
                ))
            })?;
            Ok((pos, mode))
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(validate_transits(&state, &transits, theta, ratio, tail_eps)?)
}

fn entanglement_block(result: &ProtocolResult, beta: C64) -> CliResult<Vec<ModeEntanglement>> {
    result
        .outcomes
        .iter()
        .filter_map(|o| o.state.as_ref().map(|s| (o.word.to_string(), s)))
        .map(|(word, state)| {
            let q = qubitize(state, beta)?;
            let offset = q.n_atoms;
            let mode_entropy = (0..q.n_modes)
                .map(|m| reduced_entropy(&q, &[offset + m]))
                .collect::<ecs_core::Result<Vec<_>>>()?;
            let negativity = bipartitions(q.n_modes)
                .into_iter()
                .map(|cut| {
                    let shifted: Vec<usize> = cut.iter().map(|m| offset + m).collect();
                    Ok((cut, negativity(&q, &shifted)?))
                })
                .collect::<ecs_core::Result<Vec<_>>>()?;
            Ok(ModeEntanglement {
                word,
                qubits: q,
                mode_entropy,
                negativity,
            })
        })
        .collect()
}

fn sample(result: &ProtocolResult, shots: usize, seed: u64) -> CliResult<SampleBlock> {
    let weights: Vec<f64> = result.outcomes.iter().map(|o| o.probability.max(0.0)).collect();
    let dist = WeightedIndex::new(&weights).map_err(|e| CliError::Tolerance(format!("cannot sample outcomes: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0usize; weights.len()];
    for _ in 0..shots {
        counts[dist.sample(&mut rng)] += 1;
    }
    Ok(SampleBlock {
        seed,
        shots,
        counts: result.outcomes.iter().map(|o| o.word.to_string()).zip(counts).collect(),
    })
}

fn finish<P: Serialize, R: Serialize, S: Serialize>(
    command: &'static str,
    parameters: P,
    rows: Vec<R>,
    summary: S,
    table: (&[&str], Vec<Vec<String>>),
    output: &Output,
    start: Instant,
) -> CliResult<()> {
    if let Some(path) = &output.table {
        std::fs::write(path, to_csv(table.0, &table.1)?)?;
    }
    let report = GridReport {
        tool: TOOL,
        version: VERSION,
        command,
        parameters,
        rows,
        summary,
        wall_clock_seconds: output.timing.then(|| start.elapsed().as_secs_f64()),
    };
    emit(&to_json(&report)?, output.out.as_deref())
}

#[derive(Serialize)]
struct ValidateParams {
    alpha: String,
    theta: String,
    cavities: usize,
    tail_eps: f64,
}

#[derive(Serialize)]
struct ValidateSummary {
    /// Compensated fidelity strictly increases with δ/g.
    monotone: bool,
    min_compensated: f64,
}

/// Atom in `(|e⟩+|g⟩)/√2` crossing `cavities` cavities holding `|α⟩`.
pub fn dispersive_sweep(
    alpha: C64,
    theta: f64,
    cavities: usize,
    ratios: &[f64],
    tail_eps: f64,
) -> CliResult<Vec<DispersiveCheck>> {
    if cavities == 0 {
        return Err(CliError::Validation("--cavities must be at least 1".into()));
    }
    if ratios.is_empty() {
        return Err(CliError::Validation("--ratios is empty".into()));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let register = [
        (AtomWord::uniform(Level::E, 1), C64::new(h, 0.0)),
        (AtomWord::uniform(Level::G, 1), C64::new(h, 0.0)),
    ];
    let initial = HybridState::product(AtomWord::empty(), vec![alpha; cavities])?.with_atoms(&register)?;
    let transits: Vec<(usize, usize)> = (0..cavities).map(|m| (0, m)).collect();
    ratios
        .iter()
        .map(|&r| Ok(validate_transits(&initial, &transits, theta, r, tail_eps)?))
        .collect()
}

fn validate_dispersive(a: &ValidateArgs) -> CliResult<()> {
    let start = Instant::now();
    let rows = dispersive_sweep(a.alpha.value(), a.theta.value(), a.cavities, &a.ratios, a.tail_eps)?;
    let comp: Vec<f64> = rows.iter().map(|r| r.fidelity.compensated).collect();
    let summary = ValidateSummary {
        monotone: comp.windows(2).all(|w| w[1] > w[0]),
        min_compensated: comp.iter().copied().fold(f64::INFINITY, f64::min),
    };
    let table = rows
        .iter()
        .map(|r| {
            vec![
                fmt_f64(r.detuning_ratio),
                fmt_f64(r.params.g),
                fmt_f64(r.params.delta),
                fmt_f64(r.params.lambda),
                fmt_f64(r.params.tau),
                r.cutoff.to_string(),
                fmt_f64(r.tail_bound),
                fmt_f64(r.fidelity.raw),
                fmt_f64(r.fidelity.compensated),
            ]
        })
        .collect();
    let header = [
        "detuning_ratio",
        "g",
        "delta",
        "lambda",
        "tau",
        "cutoff",
        "tail_bound",
        "raw_fidelity",
        "compensated_fidelity",
    ];
    let params = ValidateParams {
        alpha: a.alpha.text().into(),
        theta: a.theta.text().into(),
        cavities: a.cavities,
        tail_eps: a.tail_eps,
    };
    finish(
        "validate-dispersive",
        params,
        rows,
        summary,
        (&header, table),
        &a.output,
        start,
    )
}

fn family(arg: FamilyArg, signs: Option<&str>, n: usize) -> CliResult<Family> {
    if n == 0 {
        return Err(CliError::Validation("--n must be at least 1".into()));
    }
    match (arg, signs) {
        (FamilyArg::GhzPlus, None) => Ok(Family::GhzPlus),
        (FamilyArg::GhzMinus, None) => Ok(Family::GhzMinus),
        (FamilyArg::W, None) => Ok(Family::W {
            signs: vec![Sign::Plus; n],
        }),
        (FamilyArg::W, Some(s)) => {
            let signs = Sign::parse_all(s)?;
            if signs.len() != n {
                return Err(CliError::Validation(format!(
                    "--signs has {} entries for --n {n}",
                    signs.len()
                )));
            }
            Ok(Family::W { signs })
        }
        (_, Some(_)) => Err(CliError::Validation("--signs applies only to --family w".into())),
    }
}

#[derive(Serialize)]
struct DecohereParams {
    family: String,
    n: usize,
    kappa: f64,
    t: f64,
}

#[derive(Serialize)]
pub struct DecohereRow {
    pub alpha: String,
    pub storage_fidelity: f64,
    /// `exp(−2|α|²(1−e^{−κt}))`: one mode's ±α coherence factor.
    pub mode_coherence: f64,
    pub total_coherence: f64,
}

#[derive(Serialize)]
struct DecohereSummary {
    /// Storage fidelity strictly decreases along the α list.
    decreasing: bool,
}

pub fn decohere_rows(
    fam: &Family,
    n: usize,
    alphas: &[(String, C64)],
    kappa: f64,
    t: f64,
) -> CliResult<Vec<DecohereRow>> {
    if !(kappa >= 0.0 && kappa.is_finite() && t >= 0.0 && t.is_finite()) {
        return Err(CliError::Validation(
            "--kappa and --t must be finite and non-negative".into(),
        ));
    }
    let loss = 1.0 - (-kappa * t).exp();
    alphas
        .iter()
        .map(|(text, alpha)| {
            let state = fam.state(n, *alpha)?.normalize()?;
            let mode = (-2.0 * alpha.norm_sqr() * loss).exp();
            Ok(DecohereRow {
                alpha: text.clone(),
                storage_fidelity: storage_fidelity(&state, kappa, t)?,
                mode_coherence: mode,
                total_coherence: mode.powi(n as i32),
            })
        })
        .collect()
}

fn decohere(a: &DecohereArgs) -> CliResult<()> {
    let start = Instant::now();
    let fam = family(a.family, a.signs.as_deref(), a.n)?;
    let alphas: Vec<(String, C64)> = a.alpha.iter().map(|x| (x.text().to_string(), x.value())).collect();
    let rows = decohere_rows(&fam, a.n, &alphas, a.kappa, a.t)?;
    let summary = DecohereSummary {
        decreasing: rows.windows(2).all(|w| w[1].storage_fidelity < w[0].storage_fidelity),
    };
    let table = rows
        .iter()
        .map(|r| {
            vec![
                r.alpha.clone(),
                fmt_f64(r.storage_fidelity),
                fmt_f64(r.mode_coherence),
                fmt_f64(r.total_coherence),
            ]
        })
        .collect();
    let params = DecohereParams {
        family: fam.label(),
        n: a.n,
        kappa: a.kappa,
        t: a.t,
    };
    let header = ["alpha", "storage_fidelity", "mode_coherence", "total_coherence"];
    finish("decohere", params, rows, summary, (&header, table), &a.output, start)
}

#[derive(Serialize)]
struct SweepParams {
    family: String,
    n: usize,
}

fn sweep(a: &SweepArgs) -> CliResult<()> {
    let start = Instant::now();
    let fam = family(a.family, a.signs.as_deref(), a.n)?;
    if a.n < 2 {
        return Err(CliError::Validation(
            "--n must be at least 2 to have a bipartition".into(),
        ));
    }
    let t = entanglement_sweep(&fam, a.n, &a.betas)?;
    let cut = |b: &[usize]| b.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(" ");
    let table = t
        .rows
        .iter()
        .map(|r| {
            vec![
                fmt_f64(r.beta),
                cut(&r.bipartition),
                fmt_f64(r.entropy),
                fmt_f64(r.negativity),
            ]
        })
        .collect();
    let header = ["beta", "bipartition", "entropy_bits", "negativity"];
    let params = SweepParams {
        family: t.family.clone(),
        n: t.n,
    };
    finish(
        "sweep-entanglement",
        params,
        t.rows,
        t.constancy,
        (&header, table),
        &a.output,
        start,
    )
}

fn timescales(a: &TimescaleArgs) -> CliResult<()> {
    let start = Instant::now();
    let p = TimescaleParams {
        t_atom: a.t_atom,
        t_cavity: a.t_cavity,
        transit: a.transit,
        quality_factor: a.q,
        nu0: a.nu0,
    };
    let r = timescale_report(&p)?;
    let rows = vec![
        ("transit_over_atomic_lifetime", r.transit_over_atomic_lifetime),
        ("transit_over_cavity_lifetime", r.transit_over_cavity_lifetime),
        ("kappa_t_per_transit", r.kappa_t_per_transit),
        ("cavity_lifetime_from_q", r.cavity_lifetime_from_q),
    ];
    let table = rows.iter().map(|(k, v)| vec![k.to_string(), fmt_f64(*v)]).collect();
    finish(
        "timescales",
        p,
        rows,
        r,
        (&["quantity", "value"], table),
        &a.output,
        start,
    )
}
