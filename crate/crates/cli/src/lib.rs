//! Matrix ingestion, pipeline execution and result files for the `qpca` binary.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use qpca_core::{
    cost_baseline, cost_proposed, gate_ratio, run_qpca, HermitianInput, QpcaConfig, QpcaError,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_EIG_BITS: usize = 6;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: u64,
        column: u64,
        message: String,
    },
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Filtered(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Validation(_) => 2,
            CliError::Filtered(_) => 3,
            CliError::Internal(_) => 4,
        }
    }

    /// Machine-parsable prefix, e.g. `error[parse]`.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "parse",
            CliError::Validation(_) => "validation",
            CliError::Filtered(_) => "filtered",
            CliError::Internal(_) => "internal",
        }
    }

    /// Single-line rendering written to stderr.
    pub fn line(&self) -> String {
        format!("error[{}]: {}", self.kind(), self).replace('\n', " ")
    }
}

impl From<QpcaError> for CliError {
    fn from(e: QpcaError) -> Self {
        match e {
            QpcaError::AllComponentsFiltered { .. } => CliError::Filtered(e.to_string()),
            QpcaError::Invariant(_) | QpcaError::NonUnitary { .. } | QpcaError::InvalidGate(_) => {
                CliError::Internal(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunMode {
    Exact,
    Sampled,
}

#[derive(Clone, Debug)]
pub struct RunSpec {
    pub matrix_path: PathBuf,
    pub tau: f64,
    pub eig_bits: usize,
    pub mode: RunMode,
    pub shots: u64,
    pub seed: u64,
    pub out_path: PathBuf,
}

impl RunSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(CliError::Validation(format!("tau must be > 0, got {}", self.tau)));
        }
        if !(1..=MAX_EIG_BITS).contains(&self.eig_bits) {
            return Err(CliError::Validation(format!(
                "eig-bits must be in [1, {MAX_EIG_BITS}], got {}",
                self.eig_bits
            )));
        }
        if self.mode == RunMode::Sampled && self.shots == 0 {
            return Err(CliError::Validation("shots must be >= 1".into()));
        }
        Ok(())
    }

    fn config(&self) -> QpcaConfig {
        match self.mode {
            RunMode::Exact => QpcaConfig::exact(self.tau, self.eig_bits),
            RunMode::Sampled => QpcaConfig::sampled(self.tau, self.eig_bits, self.shots, self.seed),
        }
    }
}

/// Reads a CSV (one row per line) or JSON (`{"matrix": [[...]]}`) matrix.
/// JSON is chosen by a `.json` extension or a leading `{`.
pub fn parse_matrix(path: &Path) -> Result<HermitianInput> {
    let text = fs::read_to_string(path).map_err(|e| parse_error(path, 0, 0, e.to_string()))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
        || text.trim_start().starts_with('{');
    let rows = if is_json {
        parse_json_rows(path, &text)?
    } else {
        parse_csv_rows(path, &text)?
    };
    Ok(HermitianInput::from_rows(&rows)?)
}

fn parse_error(path: &Path, line: u64, column: u64, message: impl Into<String>) -> CliError {
    CliError::Parse {
        path: path.display().to_string(),
        line,
        column,
        message: message.into(),
    }
}

fn parse_csv_rows(path: &Path, text: &str) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(path, line, 0, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(col, field)| {
                field.parse::<f64>().map_err(|_| {
                    parse_error(path, line, col as u64 + 1, format!("not a number: {field:?}"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_error(path, 1, 1, "empty matrix"));
    }
    Ok(rows)
}

#[derive(Deserialize)]
struct MatrixDocument {
    matrix: Vec<Vec<f64>>,
}

fn parse_json_rows(path: &Path, text: &str) -> Result<Vec<Vec<f64>>> {
    let doc: MatrixDocument = serde_json::from_str(text)
        .map_err(|e| parse_error(path, e.line() as u64, e.column() as u64, e.to_string()))?;
    if doc.matrix.is_empty() {
        return Err(parse_error(path, 1, 1, "empty matrix"));
    }
    Ok(doc.matrix)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateCounts {
    pub proposed: u64,
    pub baseline: u64,
    pub ratio: f64,
}

/// The JSON result document written by `run`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// Encoded data-register amplitudes.
    pub input_state: Vec<f64>,
    pub tau: f64,
    pub eig_bits: usize,
    pub kept_eigenvalues: Vec<f64>,
    pub success_probability: f64,
    pub output_amplitudes: Vec<f64>,
    pub lambda_histogram: BTreeMap<usize, f64>,
    pub fidelity_vs_classical: f64,
    pub gate_counts: GateCounts,
    pub qubits: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<BTreeMap<usize, u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimated_amplitudes: Option<Vec<f64>>,
}

impl RunReport {
    /// Sanity checks applied to a re-read document.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::Validation(msg));
        if !(0.0..=1.0).contains(&self.success_probability) {
            return bad(format!("success_probability {} outside [0, 1]", self.success_probability));
        }
        if self.output_amplitudes.len() != self.input_state.len() {
            return bad("output and input state lengths differ".into());
        }
        let norm: f64 = self.output_amplitudes.iter().map(|a| a * a).sum();
        if (norm - 1.0).abs() > 1e-6 {
            return bad(format!("output amplitudes have norm² {norm}"));
        }
        Ok(())
    }

    /// Rows for the plot CSV: exact probabilities, or empirical ones in sampled mode.
    pub fn probabilities(&self) -> Vec<f64> {
        match &self.estimated_amplitudes {
            Some(est) => est.iter().map(|a| a * a).collect(),
            None => self.output_amplitudes.iter().map(|a| a * a).collect(),
        }
    }
}

/// Below this magnitude a value is simulation noise and written as zero.
pub const NOISE_FLOOR: f64 = 1e-12;

/// Rounds to 10 significant digits so emitted files are stable.
pub fn round_sig(x: f64) -> f64 {
    if x.abs() < NOISE_FLOOR {
        return 0.0;
    }
    if !x.is_finite() {
        return x;
    }
    let r: f64 = format!("{x:.9e}").parse().expect("formatted float parses");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn round_all(v: impl IntoIterator<Item = f64>) -> Vec<f64> {
    v.into_iter().map(round_sig).collect()
}

/// Runs the pipeline and returns the report without touching the filesystem.
pub fn execute(spec: &RunSpec) -> Result<RunReport> {
    spec.validate()?;
    let input = parse_matrix(&spec.matrix_path)?;
    let result = run_qpca(&input, &spec.config())?;
    let n = spec.eig_bits as u64;
    let m = result.qubits as u64 - 1 - 2 * n;
    let sampled = result.sampled.as_ref();
    Ok(RunReport {
        input_state: round_all(input.encoded_amplitudes()?),
        tau: spec.tau,
        eig_bits: spec.eig_bits,
        kept_eigenvalues: round_all(result.kept_eigenvalues.iter().copied()),
        success_probability: round_sig(result.success_prob),
        output_amplitudes: round_all(result.output_amps.iter().map(|a| a.re)),
        lambda_histogram: result
            .lambda_histogram
            .iter()
            .map(|(&k, &p)| (k, round_sig(p)))
            .collect(),
        fidelity_vs_classical: round_sig(result.fidelity),
        gate_counts: GateCounts {
            proposed: cost_proposed(n, m).total,
            baseline: cost_baseline(n, m).total,
            ratio: round_sig(gate_ratio(n)),
        },
        qubits: result.qubits,
        warnings: result.warnings.clone(),
        shots: sampled.map(|s| s.shots),
        seed: sampled.map(|_| spec.seed),
        counts: sampled.map(|s| s.counts.clone()),
        estimated_amplitudes: sampled.map(|s| round_all(s.amplitude_estimates.iter().copied())),
    })
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents)
        .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))
}

/// Path of the plot CSV written next to the JSON result.
pub fn plot_path(out: &Path) -> PathBuf {
    out.with_extension("csv")
}

/// Executes `spec`, writing the JSON report to `out_path` and the
/// `(basis_index, probability)` table next to it.
pub fn run_command(spec: &RunSpec) -> Result<RunReport> {
    let plot = plot_path(&spec.out_path);
    if plot == spec.matrix_path || spec.out_path == spec.matrix_path {
        return Err(CliError::Validation(format!(
            "output would overwrite the input matrix {}",
            spec.matrix_path.display()
        )));
    }
    let report = execute(spec)?;
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    write(&spec.out_path, &(json + "\n"))?;

    let mut csv = String::from("basis_index,probability\n");
    for (i, p) in report.probabilities().into_iter().enumerate() {
        csv.push_str(&format!("{i},{}\n", round_sig(p)));
    }
    write(&plot, &csv)?;
    Ok(report)
}

/// Re-reads and validates a result document.
pub fn read_report(path: &Path) -> Result<RunReport> {
    let text = fs::read_to_string(path)
        .map_err(|e| parse_error(path, 0, 0, e.to_string()))?;
    let report: RunReport = serde_json::from_str(&text)
        .map_err(|e| parse_error(path, e.line() as u64, e.column() as u64, e.to_string()))?;
    report.validate()?;
    Ok(report)
}

/// `n,proposed_total,baseline_total,ratio` rows for `n_min..=n_max`.
pub fn analyze_table(n_min: u64, n_max: u64) -> Result<String> {
    if n_min < 1 || n_min > n_max {
        return Err(CliError::Validation(format!(
            "need 1 <= n-min <= n-max, got {n_min}..{n_max}"
        )));
    }
    let mut out = String::from("n,proposed_total,baseline_total,ratio\n");
    for n in n_min..=n_max {
        out.push_str(&format!(
            "{n},{},{},{:.4}\n",
            cost_proposed(n, 0).total,
            cost_baseline(n, 0).total,
            gate_ratio(n)
        ));
    }
    Ok(out)
}

pub fn analyze_command(n_min: u64, n_max: u64, out: &Path) -> Result<()> {
    write(out, &analyze_table(n_min, n_max)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_ten_digits() {
        assert_eq!(round_sig(0.1234567890123), 0.123456789);
        assert_eq!(round_sig(-2.0 / 3.0), -0.6666666667);
        assert_eq!(round_sig(0.0), 0.0);
        assert_eq!(round_sig(-3e-17), 0.0);
        assert_eq!(round_sig(round_sig(1.0 / 7.0)), round_sig(1.0 / 7.0));
    }

    #[test]
    fn error_lines_are_prefixed() {
        let e = CliError::from(QpcaError::AllComponentsFiltered { tau: 5.0 });
        assert_eq!(e.exit_code(), 3);
        assert!(e.line().starts_with("error[filtered]: all components filtered"));
        assert_eq!(CliError::from(QpcaError::Invariant("x".into())).exit_code(), 4);
        assert_eq!(CliError::from(QpcaError::ZeroVector).exit_code(), 2);
    }

    #[test]
    fn analyze_rejects_empty_range() {
        assert!(analyze_table(0, 3).is_err());
        assert!(analyze_table(4, 3).is_err());
    }
}
