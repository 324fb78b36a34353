//! Report documents and their text encodings.
//!
//! Every float is written as `{:.16e}` (17 significant digits), so output
//! depends only on the computed bits.

use std::io::{self, Write};
use std::path::Path;

use ecs_core::analysis::QubitizedState;
use ecs_core::fock::DispersiveCheck;
use ecs_core::ProtocolResult;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{CliError, CliResult};
use crate::spec::ProtocolSpec;

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Allowed excess of a probability over 1, and of the total over 1.
pub const PROBABILITY_TOL: f64 = 1e-12;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

struct FixedFormatter<'a>(PrettyFormatter<'a>);

impl Formatter for FixedFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Pretty JSON with fixed-width scientific floats and a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFormatter(PrettyFormatter::with_indent(b"  ")));
    value
        .serialize(&mut ser)
        .map_err(|e| CliError::Tolerance(format!("cannot encode report: {e}")))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| CliError::Tolerance(e.to_string()))
}

/// Comma-separated table with a header row.
pub fn to_csv(header: &[&str], rows: &[Vec<String>]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Tolerance(format!("cannot encode table: {e}"));
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Tolerance(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Tolerance(e.to_string()))
}

/// Writes to `path`, or to stdout when absent.
pub fn emit(text: &str, path: Option<&Path>) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleBlock {
    pub seed: u64,
    pub shots: usize,
    /// `(word, count)` in tabulation order.
    pub counts: Vec<(String, usize)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecoherenceBlock {
    pub kappa: f64,
    pub t: f64,
    pub modes: Vec<usize>,
    /// Storage fidelity of each outcome's field state, in outcome order.
    pub storage_fidelity: Vec<Option<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ModeEntanglement {
    pub word: String,
    pub qubits: QubitizedState,
    /// Von Neumann entropy (bits) of each single mode.
    pub mode_entropy: Vec<f64>,
    /// Negativity of each bipartition containing mode 0.
    pub negativity: Vec<(Vec<usize>, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub spec: ProtocolSpec,
    pub result: ProtocolResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample: Option<SampleBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fock_validation: Option<DispersiveCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decoherence: Option<DecoherenceBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entanglement: Option<Vec<ModeEntanglement>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

/// Grid commands: the summary plus the rows that also go to the table.
#[derive(Clone, Debug, Serialize)]
pub struct GridReport<P: Serialize, R: Serialize, S: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub parameters: P,
    pub rows: Vec<R>,
    pub summary: S,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

/// Rejects results whose probabilities leave `[0, 1]` or do not sum to 1.
pub fn check_probabilities(result: &ProtocolResult) -> CliResult<()> {
    for o in &result.outcomes {
        let p = o.probability;
        if !(-PROBABILITY_TOL..=1.0 + PROBABILITY_TOL).contains(&p) {
            return Err(CliError::Tolerance(format!("outcome {} has probability {p}", o.word)));
        }
    }
    let total = result.total_probability();
    if (total - 1.0).abs() > PROBABILITY_TOL {
        return Err(CliError::Tolerance(format!("outcome probabilities sum to {total}")));
    }
    Ok(())
}

pub fn outcome_table(result: &ProtocolResult) -> CliResult<String> {
    let rows: Vec<Vec<String>> = result
        .outcomes
        .iter()
        .map(|o| {
            vec![
                o.word.to_string(),
                fmt_f64(o.probability),
                o.group.clone().unwrap_or_default(),
                o.fidelity.map(fmt_f64).unwrap_or_default(),
            ]
        })
        .collect();
    to_csv(&["word", "probability", "group", "fidelity"], &rows)
}
