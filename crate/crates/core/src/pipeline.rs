//! The full qPCA pipeline and its classical oracle.
//!
//! Register order (qubit 0 first): ancilla, y-register (`n`), λ-register
//! (`n`), data register (`m`). The data register holds the matrix flattened
//! row-major, so its first `m/2` qubits index the row and the last `m/2`
//! index the column. Phase estimation acts on the row half.
//!
//! Steps, in order: state preparation, phase estimation, filter, ancilla
//! flip controlled on `y ≠ 0`, inverse filter, inverse phase estimation,
//! post-selection of ancilla = 1, and a second phase estimation that writes
//! the surviving eigenvalues back into the λ-register.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::builders::{build_phase_estimation, build_state_prep, PhaseEstimationSpec};
use crate::cost::cost_proposed;
use crate::error::{QpcaError, Result};
use crate::filter::{build_filter_table, build_filter_unitary, FilterParams, FilterTable};
use crate::linalg::SymmetricSpectrum;
use crate::sim::{Circuit, GateOp, StateVector, MAX_QUBITS};

/// Eigenvalues with magnitude below this count toward the null space.
const RANK_TOLERANCE: f64 = 1e-9;

/// Qubit assignment for the pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegisterLayout {
    n: usize,
    m: usize,
}

impl RegisterLayout {
    /// `n` eigenvalue bits and an `m`-qubit data register (`m` even).
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if n == 0 {
            return Err(QpcaError::InvalidParameter("n must be >= 1".into()));
        }
        if m == 0 || m % 2 != 0 {
            return Err(QpcaError::InvalidParameter(format!(
                "data register width must be even and positive, got {m}"
            )));
        }
        let layout = Self { n, m };
        if layout.total_qubits() > MAX_QUBITS {
            return Err(QpcaError::TooManyQubits {
                num_qubits: layout.total_qubits(),
                max: MAX_QUBITS,
            });
        }
        Ok(layout)
    }

    /// Layout for a `dim × dim` matrix, padded to the next power of two.
    pub fn for_dimension(dim: usize, n: usize) -> Result<Self> {
        let padded = dim.max(2).next_power_of_two();
        Self::new(n, 2 * padded.trailing_zeros() as usize)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn total_qubits(&self) -> usize {
        1 + 2 * self.n + self.m
    }

    pub fn ancilla(&self) -> usize {
        0
    }

    pub fn y_qubits(&self) -> Vec<usize> {
        (1..=self.n).collect()
    }

    pub fn lambda_qubits(&self) -> Vec<usize> {
        (1 + self.n..1 + 2 * self.n).collect()
    }

    pub fn data_qubits(&self) -> Vec<usize> {
        (1 + 2 * self.n..self.total_qubits()).collect()
    }

    /// The half of the data register indexing matrix rows.
    pub fn data_row_qubits(&self) -> Vec<usize> {
        (1 + 2 * self.n..1 + 2 * self.n + self.m / 2).collect()
    }

    /// Side length of the (padded) matrix the data register encodes.
    pub fn padded_dim(&self) -> usize {
        1 << (self.m / 2)
    }

    /// Basis index of `|ancilla⟩|y⟩|λ⟩|data⟩`.
    pub fn index(&self, ancilla: bool, y: usize, lambda: usize, data: usize) -> usize {
        let mut idx = usize::from(ancilla);
        idx = (idx << self.n) | y;
        idx = (idx << self.n) | lambda;
        (idx << self.m) | data
    }

    /// Inverse of [`RegisterLayout::index`].
    pub fn split(&self, index: usize) -> (bool, usize, usize, usize) {
        let mask = |w: usize| (1usize << w) - 1;
        let data = index & mask(self.m);
        let lambda = (index >> self.m) & mask(self.n);
        let y = (index >> (self.m + self.n)) & mask(self.n);
        let ancilla = (index >> (self.m + 2 * self.n)) & 1 == 1;
        (ancilla, y, lambda, data)
    }
}

/// A real symmetric input matrix with its eigendecomposition.
#[derive(Clone, Debug)]
pub struct HermitianInput {
    matrix: DMatrix<f64>,
    spectrum: SymmetricSpectrum,
}

impl HermitianInput {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(QpcaError::InvalidParameter("matrix entries must be finite".into()));
        }
        let spectrum = SymmetricSpectrum::of(&matrix)?;
        let scale = matrix.abs().max().max(1.0);
        let residual = (spectrum.map_values(|l| l) - &matrix).abs().max();
        if residual > 1e-9 * scale {
            return Err(QpcaError::Invariant(format!(
                "eigendecomposition residual {residual:e}"
            )));
        }
        Ok(Self { matrix, spectrum })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(QpcaError::NotSquare { rows: 0, cols: 0 });
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(QpcaError::NotSquare {
                rows: n,
                cols: bad.len(),
            });
        }
        Self::new(DMatrix::from_fn(n, n, |r, c| rows[r][c]))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn padded_dim(&self) -> usize {
        self.dim().max(2).next_power_of_two()
    }

    /// Eigenvalues, descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.spectrum.values
    }

    /// Column `k` pairs with `eigenvalues()[k]`.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.spectrum.vectors
    }

    /// `|λ_k|`, descending.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.spectrum.values.iter().map(|l| l.abs()).collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    pub fn rank(&self) -> usize {
        self.spectrum
            .values
            .iter()
            .filter(|l| l.abs() > RANK_TOLERANCE)
            .count()
    }

    /// The matrix zero-padded to [`HermitianInput::padded_dim`].
    pub fn padded_matrix(&self) -> DMatrix<f64> {
        let p = self.padded_dim();
        DMatrix::from_fn(p, p, |r, c| {
            if r < self.dim() && c < self.dim() {
                self.matrix[(r, c)]
            } else {
                0.0
            }
        })
    }

    /// Padded matrix flattened row-major and divided by its Frobenius norm.
    pub fn encoded_amplitudes(&self) -> Result<Vec<f64>> {
        let padded = self.padded_matrix();
        let norm = padded.norm();
        if norm == 0.0 {
            return Err(QpcaError::ZeroVector);
        }
        let p = self.padded_dim();
        Ok((0..p * p).map(|i| padded[(i / p, i % p)] / norm).collect())
    }
}

/// What the classical eigendecomposition predicts for a threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    /// Number of eigenpairs with `λ > τ`.
    pub kept_count: usize,
    pub kept_eigenvalues: Vec<f64>,
    /// `Σ_{λ>τ} λ u⊗u / ‖·‖` over the padded data register.
    pub expected_state: Vec<f64>,
    /// `Σ_{λ>τ} λ² / Σ λ²`.
    pub success_probability: f64,
}

/// Brute-force reference for the pipeline output.
pub fn classical_pca_oracle(input: &HermitianInput, tau: f64) -> Result<OracleResult> {
    let values = input.eigenvalues();
    let kept: Vec<usize> = (0..values.len()).filter(|&k| values[k] > tau).collect();
    if kept.is_empty() {
        return Err(QpcaError::AllComponentsFiltered { tau });
    }
    let d = input.dim();
    let p = input.padded_dim();
    let vecs = input.eigenvectors();
    let mut expected = vec![0.0; p * p];
    for &k in &kept {
        for r in 0..d {
            for c in 0..d {
                expected[r * p + c] += values[k] * vecs[(r, k)] * vecs[(c, k)];
            }
        }
    }
    let kept_mass: f64 = kept.iter().map(|&k| values[k] * values[k]).sum();
    let total_mass: f64 = values.iter().map(|l| l * l).sum();
    let norm = kept_mass.sqrt();
    expected.iter_mut().for_each(|v| *v /= norm);
    Ok(OracleResult {
        kept_count: kept.len(),
        kept_eigenvalues: kept.iter().map(|&k| values[k]).collect(),
        expected_state: expected,
        success_probability: kept_mass / total_mass,
    })
}

/// How the pipeline produces its output distribution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Exact post-selection on the statevector.
    Exact,
    /// `shots` samples with rejection of ancilla = 0 outcomes.
    Sampled { shots: u64, seed: u64 },
}

/// Which table drives the filter gate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FilterKind {
    /// Fixed-point Newton reciprocal.
    #[default]
    FixedPoint,
    /// Real-valued `(1 - τ/λ)₊` rounded to the register width.
    RealShrink,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QpcaConfig {
    pub tau: f64,
    pub n_bits: usize,
    pub mode: Mode,
    pub filter: FilterKind,
}

impl QpcaConfig {
    pub fn exact(tau: f64, n_bits: usize) -> Self {
        Self {
            tau,
            n_bits,
            mode: Mode::Exact,
            filter: FilterKind::FixedPoint,
        }
    }

    pub fn sampled(tau: f64, n_bits: usize, shots: u64, seed: u64) -> Self {
        Self {
            mode: Mode::Sampled { shots, seed },
            ..Self::exact(tau, n_bits)
        }
    }

    pub fn with_filter(mut self, filter: FilterKind) -> Self {
        self.filter = filter;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(QpcaError::InvalidParameter(format!(
                "tau must be > 0, got {}",
                self.tau
            )));
        }
        if let Mode::Sampled { shots: 0, .. } = self.mode {
            return Err(QpcaError::InvalidParameter("shots must be >= 1".into()));
        }
        Ok(())
    }
}

/// Shot-mode estimates of the post-selected data register.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledOutcome {
    pub shots: u64,
    /// Shots with ancilla = 1.
    pub accepted: u64,
    /// Data-register counts among accepted shots.
    pub counts: BTreeMap<usize, u64>,
    /// `sqrt(count / accepted)` per data basis state.
    pub amplitude_estimates: Vec<f64>,
    pub success_estimate: f64,
}

#[derive(Clone, Debug)]
pub struct QpcaResult {
    pub success_prob: f64,
    /// Post-selected data-register amplitudes.
    pub output_amps: Vec<Complex64>,
    pub kept_count: usize,
    pub kept_eigenvalues: Vec<f64>,
    /// λ-register distribution after the second phase estimation.
    pub lambda_histogram: BTreeMap<usize, f64>,
    pub fidelity: f64,
    pub total_gates: u64,
    pub qubits: usize,
    /// Probability left on nonzero y/λ values after uncomputation.
    pub residual_work_population: f64,
    /// Joint state after the second phase estimation.
    pub final_state: StateVector,
    pub sampled: Option<SampledOutcome>,
    pub warnings: Vec<String>,
}

/// `|⟨a|b⟩|`.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm().min(1.0))
}

/// Flips the ancilla on every branch whose y-register is nonzero.
pub fn controlled_flip_gate(layout: &RegisterLayout) -> Result<GateOp> {
    let n = layout.n();
    let y_mask = (1usize << n) - 1;
    let perm = (0..2usize << n)
        .map(|local| if local & y_mask != 0 { local ^ (1 << n) } else { local })
        .collect();
    let mut targets = vec![layout.ancilla()];
    targets.extend(layout.y_qubits());
    GateOp::permutation(perm, targets)
}

pub fn controlled_flip(state: &StateVector, layout: &RegisterLayout) -> Result<StateVector> {
    check_width(state, layout)?;
    state.apply(&controlled_flip_gate(layout)?)
}

/// Undoes the filter and the phase estimation, returning y and λ to `|0⟩`.
pub fn uncompute(
    state: &StateVector,
    layout: &RegisterLayout,
    filter: &GateOp,
    pe_circuit: &Circuit,
) -> Result<StateVector> {
    check_width(state, layout)?;
    state.apply(&filter.inverse())?.run(&pe_circuit.inverse())
}

pub fn second_phase_estimation(
    state: &StateVector,
    spec: &PhaseEstimationSpec,
    layout: &RegisterLayout,
) -> Result<StateVector> {
    check_width(state, layout)?;
    state.run(&build_phase_estimation(spec, layout)?)
}

fn check_width(state: &StateVector, layout: &RegisterLayout) -> Result<()> {
    if state.num_qubits() != layout.total_qubits() {
        return Err(QpcaError::DimensionMismatch {
            expected: layout.total_qubits(),
            found: state.num_qubits(),
        });
    }
    Ok(())
}

/// Marginal distribution of the λ-register, entries below `1e-12` dropped.
pub fn lambda_histogram(state: &StateVector, layout: &RegisterLayout) -> BTreeMap<usize, f64> {
    let mut hist = BTreeMap::new();
    for (i, a) in state.amplitudes().iter().enumerate() {
        let (_, _, lambda, _) = layout.split(i);
        *hist.entry(lambda).or_insert(0.0) += a.norm_sqr();
    }
    hist.retain(|_, p| *p > 1e-12);
    hist
}

/// Probability on basis states whose y- or λ-register is nonzero.
pub fn work_register_population(state: &StateVector, layout: &RegisterLayout) -> f64 {
    state
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let (_, y, lambda, _) = layout.split(*i);
            y != 0 || lambda != 0
        })
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

/// Every circuit block of the pipeline, built once for a given input.
#[derive(Clone, Debug)]
pub struct QpcaPipeline {
    input: HermitianInput,
    config: QpcaConfig,
    layout: RegisterLayout,
    pe_spec: PhaseEstimationSpec,
    state_prep: Circuit,
    pe: Circuit,
    table: FilterTable,
    filter: GateOp,
    flip: GateOp,
}

/// Intermediate states of one forward pass.
#[derive(Clone, Debug)]
pub struct Stages {
    pub prepared: StateVector,
    pub after_pe: StateVector,
    pub after_filter: StateVector,
    pub after_flip: StateVector,
    pub after_uncompute: StateVector,
}

impl QpcaPipeline {
    pub fn new(input: HermitianInput, config: QpcaConfig) -> Result<Self> {
        config.validate()?;
        if config.n_bits == 0 {
            return Err(QpcaError::InvalidParameter("n_bits must be >= 1".into()));
        }
        let layout = RegisterLayout::for_dimension(input.dim(), config.n_bits)?;
        let pe_spec = PhaseEstimationSpec::new(input.padded_matrix(), config.n_bits)?;

        let mut state_prep = Circuit::new(layout.total_qubits())?;
        let prep = build_state_prep(&input.encoded_amplitudes()?, layout.m())?;
        state_prep.append_mapped(&prep, &layout.data_qubits())?;

        let pe = build_phase_estimation(&pe_spec, &layout)?;
        let params = FilterParams::new(config.tau, config.n_bits as u32)?;
        let table = match config.filter {
            FilterKind::FixedPoint => build_filter_table(&params)?,
            FilterKind::RealShrink => FilterTable::from_shrink(&params),
        };
        let filter = build_filter_unitary(&table, &layout)?;
        let flip = controlled_flip_gate(&layout)?;
        Ok(Self {
            input,
            config,
            layout,
            pe_spec,
            state_prep,
            pe,
            table,
            filter,
            flip,
        })
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn input(&self) -> &HermitianInput {
        &self.input
    }

    pub fn config(&self) -> &QpcaConfig {
        &self.config
    }

    pub fn pe_spec(&self) -> &PhaseEstimationSpec {
        &self.pe_spec
    }

    pub fn pe_circuit(&self) -> &Circuit {
        &self.pe
    }

    pub fn filter_table(&self) -> &FilterTable {
        &self.table
    }

    pub fn filter_gate(&self) -> &GateOp {
        &self.filter
    }

    /// `|0⟩|0⟩|0⟩|ψ_A⟩`.
    pub fn prepared_state(&self) -> Result<StateVector> {
        StateVector::zero(self.layout.total_qubits())?.run(&self.state_prep)
    }

    /// Runs every block up to (not including) the measurement.
    pub fn forward(&self) -> Result<Stages> {
        let prepared = self.prepared_state()?;
        let after_pe = prepared.run(&self.pe)?;
        let after_filter = after_pe.apply(&self.filter)?;
        let after_flip = after_filter.apply(&self.flip)?;
        let after_uncompute = uncompute(&after_flip, &self.layout, &self.filter, &self.pe)?;
        Ok(Stages {
            prepared,
            after_pe,
            after_filter,
            after_flip,
            after_uncompute,
        })
    }

    pub fn run(&self) -> Result<QpcaResult> {
        let oracle = classical_pca_oracle(&self.input, self.config.tau)?;
        let layout = &self.layout;
        let stages = self.forward()?;
        let (success_prob, collapsed) = stages.after_uncompute.post_select(layout.ancilla(), true)?;
        let residual = work_register_population(&collapsed, layout);

        let base = layout.index(true, 0, 0, 0);
        let output_amps: Vec<Complex64> = collapsed.amplitudes()[base..base + (1 << layout.m())].to_vec();

        let final_state = second_phase_estimation(&collapsed, &self.pe_spec, layout)?;
        let histogram = lambda_histogram(&final_state, layout);

        let expected = StateVector::from_real_unnormalized(&oracle.expected_state)?;
        let output = StateVector::from_amplitudes(output_amps.clone()).or_else(|_| {
            // residual work-register population leaves the slice slightly short
            let norm = output_amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            StateVector::from_amplitudes(output_amps.iter().map(|a| a / norm).collect())
        })?;
        let fid = fidelity(&output, &expected)?;

        let sampled = match self.config.mode {
            Mode::Exact => None,
            Mode::Sampled { shots, seed } => Some(self.sample(&stages.after_uncompute, shots, seed)?),
        };

        let mut warnings = self.pe_spec.warnings();
        if self.pe_spec.is_exact() && !self.table_matches_threshold() {
            return Err(QpcaError::Invariant(
                "filter table and classical threshold disagree".into(),
            ));
        }
        if residual > 1e-9 {
            warnings.push(format!("work registers not clean after uncompute ({residual:e})"));
        }

        Ok(QpcaResult {
            success_prob,
            output_amps,
            kept_count: oracle.kept_count,
            kept_eigenvalues: oracle.kept_eigenvalues,
            lambda_histogram: histogram,
            fidelity: fid,
            total_gates: cost_proposed(layout.n() as u64, layout.m() as u64).total,
            qubits: layout.total_qubits(),
            residual_work_population: residual,
            final_state,
            sampled,
            warnings,
        })
    }

    /// For an integral spectrum, the table keeps exactly the eigenvalues above `τ`.
    fn table_matches_threshold(&self) -> bool {
        self.pe_spec.spectrum().values.iter().all(|&l| {
            let kept = self.table.y_raw(l.round() as usize) != 0;
            kept == (l > self.config.tau)
        })
    }

    fn sample(&self, state: &StateVector, shots: u64, seed: u64) -> Result<SampledOutcome> {
        let layout = &self.layout;
        let raw = state.sample(shots, seed)?;
        let mut counts = BTreeMap::new();
        let mut accepted = 0;
        for (&idx, &k) in &raw {
            let (ancilla, _, _, data) = layout.split(idx);
            if ancilla {
                accepted += k;
                *counts.entry(data).or_insert(0) += k;
            }
        }
        if accepted == 0 {
            return Err(QpcaError::ZeroProbabilityOutcome { probability: 0.0 });
        }
        let amplitude_estimates = (0..1usize << layout.m())
            .map(|d| (counts.get(&d).copied().unwrap_or(0) as f64 / accepted as f64).sqrt())
            .collect();
        Ok(SampledOutcome {
            shots,
            accepted,
            counts,
            amplitude_estimates,
            success_estimate: accepted as f64 / shots as f64,
        })
    }
}

/// Builds and runs the pipeline in one call.
pub fn run_qpca(input: &HermitianInput, config: &QpcaConfig) -> Result<QpcaResult> {
    QpcaPipeline::new(input.clone(), *config)?.run()
}
