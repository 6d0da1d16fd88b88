//! Dense statevector simulation.
//!
//! Qubit 0 is the most significant bit of a basis-state index: in an
//! `n`-qubit register the basis state `|q0 q1 ... q(n-1)⟩` has index
//! `q0·2^(n-1) + ... + q(n-1)`. Every builder in this crate follows that
//! ordering, so the ancilla (qubit 0) is the leading bit of the index.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{QpcaError, Result};

/// A single probability amplitude.
pub type Amplitude = Complex64;

/// Largest register the simulator will allocate.
pub const MAX_QUBITS: usize = 20;
/// Tolerance on the squared norm of a state.
pub const NORM_TOLERANCE: f64 = 1e-9;
/// Tolerance on `max |M†M - I|` for a dense gate matrix.
pub const UNITARITY_TOLERANCE: f64 = 1e-10;
/// Outcomes below this probability cannot be post-selected.
pub const MIN_OUTCOME_PROBABILITY: f64 = 1e-12;

const ZERO: Amplitude = Complex64::new(0.0, 0.0);
const ONE: Amplitude = Complex64::new(1.0, 0.0);

fn check_qubit_count(num_qubits: usize) -> Result<()> {
    if num_qubits > MAX_QUBITS {
        return Err(QpcaError::TooManyQubits {
            num_qubits,
            max: MAX_QUBITS,
        });
    }
    Ok(())
}

#[inline]
fn shift_of(num_qubits: usize, qubit: usize) -> usize {
    num_qubits - 1 - qubit
}

/// Normalized state of `num_qubits` qubits stored as `2^num_qubits` amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Amplitude>,
}

impl StateVector {
    /// The all-zero basis state `|0...0⟩`.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        Self::basis(num_qubits, 0)
    }

    /// The computational basis state with the given index.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        check_qubit_count(num_qubits)?;
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(QpcaError::DimensionMismatch {
                expected: dim,
                found: index,
            });
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ok(Self { num_qubits, amps })
    }

    /// Wraps an already normalized amplitude vector.
    ///
    /// The length must be a power of two, every entry finite, and the squared
    /// norm within [`NORM_TOLERANCE`] of one.
    pub fn from_amplitudes(amps: Vec<Amplitude>) -> Result<Self> {
        let num_qubits = qubits_for_len(amps.len())?;
        check_qubit_count(num_qubits)?;
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(QpcaError::InvalidParameter(
                "amplitudes must be finite".into(),
            ));
        }
        let norm_sqr: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > NORM_TOLERANCE {
            return Err(QpcaError::InvalidParameter(format!(
                "state is not normalized (squared norm {norm_sqr})"
            )));
        }
        Ok(Self { num_qubits, amps })
    }

    /// Normalizes an arbitrary nonzero real vector of power-of-two length.
    pub fn from_real_unnormalized(values: &[f64]) -> Result<Self> {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(QpcaError::ZeroVector);
        }
        Self::from_amplitudes(
            values
                .iter()
                .map(|v| Complex64::new(v / norm, 0.0))
                .collect(),
        )
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Amplitude] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Amplitude {
        self.amps[index]
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(QpcaError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Returns `op|ψ⟩`.
    pub fn apply(&self, op: &GateOp) -> Result<StateVector> {
        let mut out = self.clone();
        out.apply_in_place(op)?;
        Ok(out)
    }

    /// Applies every operation of `circuit` in order.
    pub fn run(&self, circuit: &Circuit) -> Result<StateVector> {
        if circuit.num_qubits() != self.num_qubits {
            return Err(QpcaError::DimensionMismatch {
                expected: self.num_qubits,
                found: circuit.num_qubits(),
            });
        }
        let mut out = self.clone();
        for op in circuit.ops() {
            out.apply_in_place(op)?;
        }
        Ok(out)
    }

    fn apply_in_place(&mut self, op: &GateOp) -> Result<()> {
        if let Some(q) = op.max_qubit() {
            if q >= self.num_qubits {
                return Err(QpcaError::IndexOutOfRange {
                    index: q,
                    num_qubits: self.num_qubits,
                });
            }
        }
        let n = self.num_qubits;
        let offsets: Vec<usize> = (0..op.local_dim())
            .map(|local| {
                op.targets
                    .iter()
                    .enumerate()
                    .filter(|(pos, _)| local >> (op.targets.len() - 1 - pos) & 1 == 1)
                    .map(|(_, &q)| 1usize << shift_of(n, q))
                    .sum()
            })
            .collect();
        let target_mask: usize = offsets.iter().fold(0, |m, o| m | o);
        let (control_mask, control_value) =
            op.controls.iter().fold((0usize, 0usize), |(m, v), c| {
                let bit = 1usize << shift_of(n, c.qubit);
                (m | bit, if c.polarity { v | bit } else { v })
            });

        let mut scratch = vec![ZERO; offsets.len()];
        for base in 0..self.amps.len() {
            if base & target_mask != 0 || base & control_mask != control_value {
                continue;
            }
            for (slot, off) in scratch.iter_mut().zip(&offsets) {
                *slot = self.amps[base + off];
            }
            match &op.kernel {
                Kernel::Dense(m) => {
                    for (row, off) in offsets.iter().enumerate() {
                        let mut acc = ZERO;
                        for (col, v) in scratch.iter().enumerate() {
                            acc += m[(row, col)] * v;
                        }
                        self.amps[base + off] = acc;
                    }
                }
                Kernel::Permutation(perm) => {
                    for (local, v) in scratch.iter().enumerate() {
                        self.amps[base + offsets[perm[local]]] = *v;
                    }
                }
            }
        }
        Ok(())
    }

    /// Probability that measuring `qubit` yields `outcome`.
    pub fn outcome_probability(&self, qubit: usize, outcome: bool) -> Result<f64> {
        let bit = self.qubit_bit(qubit)?;
        Ok(self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| (i & bit != 0) == outcome)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Projects `qubit` onto `outcome` and renormalizes.
    ///
    /// Returns the outcome probability together with the collapsed state.
    pub fn post_select(&self, qubit: usize, outcome: bool) -> Result<(f64, StateVector)> {
        let bit = self.qubit_bit(qubit)?;
        let probability = self.outcome_probability(qubit, outcome)?;
        if probability < MIN_OUTCOME_PROBABILITY {
            return Err(QpcaError::ZeroProbabilityOutcome { probability });
        }
        let scale = 1.0 / probability.sqrt();
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(i, a)| {
                if (i & bit != 0) == outcome {
                    a * scale
                } else {
                    ZERO
                }
            })
            .collect();
        Ok((
            probability,
            StateVector {
                num_qubits: self.num_qubits,
                amps,
            },
        ))
    }

    /// Draws `shots` basis-state samples from `|amps|²` with a seeded generator.
    pub fn sample(&self, shots: u64, seed: u64) -> Result<BTreeMap<usize, u64>> {
        if shots == 0 {
            return Err(QpcaError::InvalidParameter("shots must be >= 1".into()));
        }
        let dist = WeightedIndex::new(self.probabilities())
            .map_err(|e| QpcaError::Invariant(format!("sampling weights: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut counts = BTreeMap::new();
        for _ in 0..shots {
            *counts.entry(dist.sample(&mut rng)).or_insert(0) += 1;
        }
        Ok(counts)
    }

    /// Value of the register formed by `qubits` (first listed qubit most
    /// significant) in basis state `index`.
    pub fn register_value(&self, index: usize, qubits: &[usize]) -> usize {
        qubits.iter().fold(0, |acc, &q| {
            (acc << 1) | (index >> shift_of(self.num_qubits, q) & 1)
        })
    }

    fn qubit_bit(&self, qubit: usize) -> Result<usize> {
        if qubit >= self.num_qubits {
            return Err(QpcaError::IndexOutOfRange {
                index: qubit,
                num_qubits: self.num_qubits,
            });
        }
        Ok(1 << shift_of(self.num_qubits, qubit))
    }
}

fn qubits_for_len(len: usize) -> Result<usize> {
    if len == 0 || !len.is_power_of_two() {
        return Err(QpcaError::InvalidParameter(format!(
            "state length {len} is not a power of two"
        )));
    }
    Ok(len.trailing_zeros() as usize)
}

/// A control condition: the gate fires when `qubit` is in state `polarity`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Control {
    pub qubit: usize,
    pub polarity: bool,
}

/// How a gate acts on its target subspace.
#[derive(Clone, Debug, PartialEq)]
pub enum Kernel {
    /// Dense `2^k × 2^k` unitary.
    Dense(DMatrix<Complex64>),
    /// Basis permutation: local basis state `i` maps to `perm[i]`.
    Permutation(Vec<usize>),
}

/// A unitary acting on `targets`, conditioned on `controls`.
///
/// Matrix rows and columns are indexed by the target register with
/// `targets[0]` as the most significant bit.
#[derive(Clone, Debug, PartialEq)]
pub struct GateOp {
    kernel: Kernel,
    targets: Vec<usize>,
    controls: Vec<Control>,
}

impl GateOp {
    /// Dense gate; `matrix` must be `2^k × 2^k` and unitary.
    pub fn new(matrix: DMatrix<Complex64>, targets: Vec<usize>) -> Result<Self> {
        check_targets(&targets)?;
        let dim = 1usize << targets.len();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(QpcaError::DimensionMismatch {
                expected: dim,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        let deviation = unitarity_deviation(&matrix);
        if !(deviation < UNITARITY_TOLERANCE) {
            return Err(QpcaError::NonUnitary { deviation });
        }
        Ok(Self {
            kernel: Kernel::Dense(matrix),
            targets,
            controls: Vec::new(),
        })
    }

    /// Permutation gate; `perm` must be a bijection on `0..2^k`.
    pub fn permutation(perm: Vec<usize>, targets: Vec<usize>) -> Result<Self> {
        check_targets(&targets)?;
        let dim = 1usize << targets.len();
        if perm.len() != dim {
            return Err(QpcaError::DimensionMismatch {
                expected: dim,
                found: perm.len(),
            });
        }
        let mut seen = vec![false; dim];
        for &p in &perm {
            if p >= dim || std::mem::replace(&mut seen[p], true) {
                return Err(QpcaError::InvalidGate(
                    "permutation is not a bijection".into(),
                ));
            }
        }
        Ok(Self {
            kernel: Kernel::Permutation(perm),
            targets,
            controls: Vec::new(),
        })
    }

    /// Adds a control on `qubit` that fires when the qubit is `|1⟩`.
    pub fn controlled(self, qubit: usize) -> Result<Self> {
        self.with_control(qubit, true)
    }

    pub fn with_control(mut self, qubit: usize, polarity: bool) -> Result<Self> {
        if self.targets.contains(&qubit) || self.controls.iter().any(|c| c.qubit == qubit) {
            return Err(QpcaError::InvalidGate(format!(
                "qubit {qubit} used twice in one gate"
            )));
        }
        self.controls.push(Control { qubit, polarity });
        Ok(self)
    }

    /// Relabels every qubit `q` of this gate as `mapping[q]`.
    pub fn retarget(&self, mapping: &[usize]) -> Result<Self> {
        let map = |q: usize| {
            mapping.get(q).copied().ok_or(QpcaError::IndexOutOfRange {
                index: q,
                num_qubits: mapping.len(),
            })
        };
        let targets = self.targets.iter().map(|&q| map(q)).collect::<Result<Vec<_>>>()?;
        check_targets(&targets)?;
        let mut op = Self {
            kernel: self.kernel.clone(),
            targets,
            controls: Vec::new(),
        };
        for c in &self.controls {
            op = op.with_control(map(c.qubit)?, c.polarity)?;
        }
        Ok(op)
    }

    /// The inverse gate with the same targets and controls.
    pub fn inverse(&self) -> Self {
        let kernel = match &self.kernel {
            Kernel::Dense(m) => Kernel::Dense(m.adjoint()),
            Kernel::Permutation(p) => {
                let mut inv = vec![0; p.len()];
                for (i, &j) in p.iter().enumerate() {
                    inv[j] = i;
                }
                Kernel::Permutation(inv)
            }
        };
        Self {
            kernel,
            targets: self.targets.clone(),
            controls: self.controls.clone(),
        }
    }

    /// Dense matrix of the action on the target register (controls excluded).
    pub fn matrix(&self) -> DMatrix<Complex64> {
        match &self.kernel {
            Kernel::Dense(m) => m.clone(),
            Kernel::Permutation(p) => {
                let mut m = DMatrix::zeros(p.len(), p.len());
                for (i, &j) in p.iter().enumerate() {
                    m[(j, i)] = ONE;
                }
                m
            }
        }
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn controls(&self) -> &[Control] {
        &self.controls
    }

    fn local_dim(&self) -> usize {
        1 << self.targets.len()
    }

    fn max_qubit(&self) -> Option<usize> {
        self.targets
            .iter()
            .copied()
            .chain(self.controls.iter().map(|c| c.qubit))
            .max()
    }

    pub fn h(qubit: usize) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self::dense_unchecked(real_matrix(2, &[s, s, s, -s]), vec![qubit])
    }

    pub fn x(qubit: usize) -> Self {
        Self {
            kernel: Kernel::Permutation(vec![1, 0]),
            targets: vec![qubit],
            controls: Vec::new(),
        }
    }

    /// `Ry(θ) = [[cos θ/2, -sin θ/2], [sin θ/2, cos θ/2]]`.
    pub fn ry(qubit: usize, theta: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        Self::dense_unchecked(real_matrix(2, &[c, -s, s, c]), vec![qubit])
    }

    /// `diag(1, e^{iφ})`.
    pub fn phase(qubit: usize, phi: f64) -> Self {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            ONE,
            Complex64::from_polar(1.0, phi),
        ]));
        Self::dense_unchecked(m, vec![qubit])
    }

    pub fn swap(a: usize, b: usize) -> Result<Self> {
        Self::permutation(vec![0, 2, 1, 3], vec![a, b])
    }

    fn dense_unchecked(matrix: DMatrix<Complex64>, targets: Vec<usize>) -> Self {
        Self {
            kernel: Kernel::Dense(matrix),
            targets,
            controls: Vec::new(),
        }
    }
}

fn check_targets(targets: &[usize]) -> Result<()> {
    if targets.is_empty() {
        return Err(QpcaError::InvalidGate("gate has no target qubits".into()));
    }
    for (i, q) in targets.iter().enumerate() {
        if targets[..i].contains(q) {
            return Err(QpcaError::InvalidGate(format!(
                "qubit {q} used twice in one gate"
            )));
        }
    }
    if targets.len() > MAX_QUBITS {
        return Err(QpcaError::TooManyQubits {
            num_qubits: targets.len(),
            max: MAX_QUBITS,
        });
    }
    Ok(())
}

fn real_matrix(dim: usize, row_major: &[f64]) -> DMatrix<Complex64> {
    DMatrix::from_row_iterator(
        dim,
        dim,
        row_major.iter().map(|&v| Complex64::new(v, 0.0)),
    )
}

/// `max |M†M - I|` over all entries.
pub fn unitarity_deviation(m: &DMatrix<Complex64>) -> f64 {
    let product = m.adjoint() * m;
    let mut worst = 0.0f64;
    for r in 0..product.nrows() {
        for c in 0..product.ncols() {
            let expected = if r == c { ONE } else { ZERO };
            let d = (product[(r, c)] - expected).norm();
            if d.is_nan() {
                return f64::INFINITY;
            }
            worst = worst.max(d);
        }
    }
    worst
}

/// Ordered list of gates over a fixed number of qubits.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    ops: Vec<GateOp>,
    labels: Vec<Option<String>>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Result<Self> {
        check_qubit_count(num_qubits)?;
        Ok(Self {
            num_qubits,
            ops: Vec::new(),
            labels: Vec::new(),
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    pub fn labels(&self) -> &[Option<String>] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn push(&mut self, op: GateOp) -> Result<()> {
        self.push_inner(op, None)
    }

    pub fn push_labeled(&mut self, op: GateOp, label: impl Into<String>) -> Result<()> {
        self.push_inner(op, Some(label.into()))
    }

    fn push_inner(&mut self, op: GateOp, label: Option<String>) -> Result<()> {
        if let Some(q) = op.max_qubit() {
            if q >= self.num_qubits {
                return Err(QpcaError::IndexOutOfRange {
                    index: q,
                    num_qubits: self.num_qubits,
                });
            }
        }
        self.ops.push(op);
        self.labels.push(label);
        Ok(())
    }

    /// Appends `other`, relabelling its qubit `q` as `mapping[q]`.
    pub fn append_mapped(&mut self, other: &Circuit, mapping: &[usize]) -> Result<()> {
        for (op, label) in other.ops.iter().zip(&other.labels) {
            self.push_inner(op.retarget(mapping)?, label.clone())?;
        }
        Ok(())
    }

    /// Appends `other`, which must act on the same number of qubits.
    pub fn append(&mut self, other: &Circuit) -> Result<()> {
        if other.num_qubits != self.num_qubits {
            return Err(QpcaError::DimensionMismatch {
                expected: self.num_qubits,
                found: other.num_qubits,
            });
        }
        self.ops.extend(other.ops.iter().cloned());
        self.labels.extend(other.labels.iter().cloned());
        Ok(())
    }

    /// The adjoint circuit: reversed order, every gate inverted.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            num_qubits: self.num_qubits,
            ops: self.ops.iter().rev().map(GateOp::inverse).collect(),
            labels: self.labels.iter().rev().cloned().collect(),
        }
    }

    /// Number of operations carrying `label`.
    pub fn count_labeled(&self, label: &str) -> usize {
        self.labels
            .iter()
            .filter(|l| l.as_deref() == Some(label))
            .count()
    }

    /// Full `2^Q × 2^Q` unitary, built column by column. Only for small circuits.
    pub fn unitary(&self) -> Result<DMatrix<Complex64>> {
        let dim = 1usize << self.num_qubits;
        let mut out = DMatrix::zeros(dim, dim);
        for col in 0..dim {
            let state = StateVector::basis(self.num_qubits, col)?.run(self)?;
            for (row, a) in state.amplitudes().iter().enumerate() {
                out[(row, col)] = *a;
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "circuit on {} qubits, {} ops", self.num_qubits, self.ops.len())?;
        for (op, label) in self.ops.iter().zip(&self.labels) {
            let kind = match op.kernel {
                Kernel::Dense(_) => "U",
                Kernel::Permutation(_) => "P",
            };
            write!(f, "  {kind} targets={:?}", op.targets)?;
            if !op.controls.is_empty() {
                let ctl: Vec<String> = op
                    .controls
                    .iter()
                    .map(|c| format!("{}{}", if c.polarity { "" } else { "!" }, c.qubit))
                    .collect();
                write!(f, " controls=[{}]", ctl.join(","))?;
            }
            if let Some(l) = label {
                write!(f, " ({l})")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
