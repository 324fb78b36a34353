use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::value::{Amplitude, Angle};

#[derive(Debug, Parser)]
#[command(
    name = "ecs",
    version,
    about = "Entangled coherent state generation in dispersive cavity QED"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One atom crossing n cavities; GHZ-type field state.
    RunGhz(RunGhzArgs),
    /// n atoms in a W state, one per cavity; W-type field state.
    RunW(RunWArgs),
    /// Execute a protocol described in a TOML spec file.
    RunSpec(RunSpecArgs),
    /// Exact Jaynes-Cummings transits against the dispersive phase map.
    ValidateDispersive(ValidateArgs),
    /// Storage fidelity under photon loss over a grid of amplitudes.
    Decohere(DecohereArgs),
    /// Entropy and negativity of an ECS family over a grid of β.
    SweepEntanglement(SweepArgs),
    /// Transit time against atomic and cavity lifetimes.
    Timescales(TimescaleArgs),
}

fn amplitude(s: &str) -> Result<Amplitude, String> {
    s.parse()
}

fn angle(s: &str) -> Result<Angle, String> {
    s.parse()
}

fn number(s: &str) -> Result<f64, String> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("cannot parse number {s:?}"))
}

#[derive(Debug, Args)]
pub struct Output {
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the main table as comma-separated values.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Include wall-clock time in the report (makes output non-reproducible).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct RunFlags {
    /// Re-run the transits through the exact Jaynes-Cummings propagator.
    #[arg(long)]
    pub validate_fock: bool,
    /// δ/g for --validate-fock.
    #[arg(long, default_value_t = 50.0, allow_hyphen_values = true)]
    pub detuning_ratio: f64,
    /// Fock truncation tolerance for --validate-fock.
    #[arg(long, default_value_t = ecs_core::fock::DEFAULT_TAIL_EPS)]
    pub tail_eps: f64,
    /// Qubitize each outcome state and report entropies and negativities.
    #[arg(long)]
    pub entanglement: bool,
    /// Photon loss rate; with --t, overrides the damping block of a spec file.
    #[arg(long, requires = "t", allow_hyphen_values = true)]
    pub kappa: Option<f64>,
    /// Storage time for --kappa.
    #[arg(long, requires = "kappa", allow_hyphen_values = true)]
    pub t: Option<f64>,
    /// Draw this many detection records from the outcome distribution.
    #[arg(long, requires = "seed")]
    pub sample: Option<usize>,
    #[arg(long, requires = "sample")]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct RunGhzArgs {
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value = "1", value_parser = amplitude, allow_hyphen_values = true)]
    pub alpha: Amplitude,
    #[arg(long, default_value = "pi/2", value_parser = angle, allow_hyphen_values = true)]
    pub theta: Angle,
    /// Print the equivalent spec file and exit.
    #[arg(long)]
    pub emit_spec: bool,
    #[command(flatten)]
    pub flags: RunFlags,
}

#[derive(Debug, Args)]
pub struct RunWArgs {
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value = "1", value_parser = amplitude, allow_hyphen_values = true)]
    pub alpha: Amplitude,
    #[arg(long, default_value = "pi/2", value_parser = angle, allow_hyphen_values = true)]
    pub theta: Angle,
    /// Comma-separated complex weights of the initial W register.
    #[arg(long, value_parser = amplitude, value_delimiter = ',', allow_hyphen_values = true)]
    pub weights: Option<Vec<Amplitude>>,
    /// Print the equivalent spec file and exit.
    #[arg(long)]
    pub emit_spec: bool,
    #[command(flatten)]
    pub flags: RunFlags,
}

#[derive(Debug, Args)]
pub struct RunSpecArgs {
    pub path: PathBuf,
    #[command(flatten)]
    pub flags: RunFlags,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, default_value = "10,20,50,100", value_parser = number, value_delimiter = ',')]
    pub ratios: Vec<f64>,
    #[arg(long, default_value = "1", value_parser = amplitude, allow_hyphen_values = true)]
    pub alpha: Amplitude,
    #[arg(long, default_value = "pi/2", value_parser = angle, allow_hyphen_values = true)]
    pub theta: Angle,
    /// Number of cavities the atom crosses.
    #[arg(long, default_value_t = 1)]
    pub cavities: usize,
    #[arg(long, default_value_t = ecs_core::fock::DEFAULT_TAIL_EPS)]
    pub tail_eps: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    GhzPlus,
    GhzMinus,
    W,
}

#[derive(Debug, Args)]
pub struct DecohereArgs {
    #[arg(long, default_value = "0.5,1,2", value_parser = amplitude, value_delimiter = ',', allow_hyphen_values = true)]
    pub alpha: Vec<Amplitude>,
    #[arg(long, default_value_t = 1e3)]
    pub kappa: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub t: f64,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = FamilyArg::GhzPlus)]
    pub family: FamilyArg,
    /// W sign pattern such as `+-+`; all plus by default.
    #[arg(long, allow_hyphen_values = true)]
    pub signs: Option<String>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum, default_value_t = FamilyArg::GhzPlus)]
    pub family: FamilyArg,
    /// W sign pattern such as `+-+`; all plus by default.
    #[arg(long, allow_hyphen_values = true)]
    pub signs: Option<String>,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value = "0.25,0.5,0.75,1,1.5,2,2.5,3", value_parser = number, value_delimiter = ',')]
    pub betas: Vec<f64>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct TimescaleArgs {
    /// Atomic radiative lifetime (s).
    #[arg(long, default_value_t = 30e-3)]
    pub t_atom: f64,
    /// Cavity field lifetime (s).
    #[arg(long, default_value_t = 1e-3)]
    pub t_cavity: f64,
    /// Transit time through one cavity (s).
    #[arg(long, default_value_t = 1e-4)]
    pub transit: f64,
    /// Cavity quality factor.
    #[arg(long, default_value_t = 3e8)]
    pub q: f64,
    /// Atomic transition frequency (Hz).
    #[arg(long, default_value_t = 51e9)]
    pub nu0: f64,
    #[command(flatten)]
    pub output: Output,
}
