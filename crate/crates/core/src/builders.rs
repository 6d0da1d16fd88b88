//! Reusable circuit blocks: QFT, phase estimation and binary-tree state preparation.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{QpcaError, Result};
use crate::linalg::SymmetricSpectrum;
use crate::pipeline::RegisterLayout;
use crate::sim::{Circuit, GateOp};

/// Eigenvalues closer than this to an integer count as integral.
const INTEGER_SPECTRUM_TOLERANCE: f64 = 1e-9;

/// `n`-qubit quantum Fourier transform, `|x⟩ → 2^{-n/2} Σ_k e^{2πi·xk/2^n} |k⟩`.
///
/// Hadamard and controlled-phase ladder followed by the qubit-order reversal.
pub fn build_qft(n: usize) -> Result<Circuit> {
    if n == 0 {
        return Err(QpcaError::InvalidParameter("QFT needs at least one qubit".into()));
    }
    let mut c = Circuit::new(n)?;
    for target in 0..n {
        c.push_labeled(GateOp::h(target), "qft")?;
        for control in target + 1..n {
            let phi = 2.0 * PI / (1u64 << (control - target + 1)) as f64;
            c.push_labeled(GateOp::phase(target, phi).controlled(control)?, "qft")?;
        }
    }
    for q in 0..n / 2 {
        c.push_labeled(GateOp::swap(q, n - 1 - q)?, "qft")?;
    }
    Ok(c)
}

pub fn build_inverse_qft(n: usize) -> Result<Circuit> {
    Ok(build_qft(n)?.inverse())
}

/// Phase estimation of `e^{2πi·A/2^n}` for a real symmetric `A`.
///
/// An eigenvalue `λ` is stored as the `n`-bit binary fraction `λ/2^n`, so
/// integer eigenvalues in `[0, 2^n)` are written to the register verbatim.
#[derive(Clone, Debug)]
pub struct PhaseEstimationSpec {
    matrix: DMatrix<f64>,
    eig_bits: usize,
    spectrum: SymmetricSpectrum,
}

impl PhaseEstimationSpec {
    pub fn new(matrix: DMatrix<f64>, eig_bits: usize) -> Result<Self> {
        if eig_bits == 0 {
            return Err(QpcaError::InvalidParameter("eig_bits must be >= 1".into()));
        }
        let spectrum = SymmetricSpectrum::of(&matrix)?;
        if !matrix.nrows().is_power_of_two() {
            return Err(QpcaError::InvalidParameter(format!(
                "phase estimation needs a power-of-two dimension, got {}",
                matrix.nrows()
            )));
        }
        Ok(Self {
            matrix,
            eig_bits,
            spectrum,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn eig_bits(&self) -> usize {
        self.eig_bits
    }

    pub fn spectrum(&self) -> &SymmetricSpectrum {
        &self.spectrum
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Qubits spanned by the system register the unitary acts on.
    pub fn system_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    /// Every eigenvalue is an integer in `[0, 2^n)`, so estimation is exact.
    pub fn is_exact(&self) -> bool {
        let limit = (1u64 << self.eig_bits) as f64;
        self.spectrum.values.iter().all(|&l| {
            (l - l.round()).abs() < INTEGER_SPECTRUM_TOLERANCE
                && l.round() >= 0.0
                && l.round() < limit
        })
    }

    /// Human-readable reasons estimation will not be exact (empty when exact).
    pub fn warnings(&self) -> Vec<String> {
        if self.is_exact() {
            return Vec::new();
        }
        vec![format!(
            "spectrum {:?} is not integral in [0, {}); phase estimation will leak",
            self.spectrum.values,
            1u64 << self.eig_bits
        )]
    }

    /// `exp(2πi·A·2^j / 2^n)` via the eigendecomposition.
    pub fn unitary_power(&self, power: usize) -> Result<DMatrix<Complex64>> {
        if power >= self.eig_bits {
            return Err(QpcaError::InvalidParameter(format!(
                "power {power} out of range for {} eigenvalue bits",
                self.eig_bits
            )));
        }
        let scale = (1u64 << power) as f64 / (1u64 << self.eig_bits) as f64;
        Ok(self.spectrum.map_complex(|lambda| {
            // reduce before exponentiating so large powers keep full precision
            let turns = (lambda * scale).rem_euclid(1.0);
            Complex64::from_polar(1.0, 2.0 * PI * turns)
        }))
    }
}

/// `exp(2πi·A·2^power / 2^n)` as a gate on qubits `0..log2(d)`.
pub fn matrix_exponential_unitary(spec: &PhaseEstimationSpec, power: usize) -> Result<GateOp> {
    GateOp::new(
        spec.unitary_power(power)?,
        (0..spec.system_qubits()).collect(),
    )
}

/// Phase estimation on explicit qubit lists of a `num_qubits`-qubit circuit.
///
/// `eig_qubits` is the estimation register (most significant first) and
/// `system_qubits` carries the eigenvector.
pub fn build_phase_estimation_on(
    spec: &PhaseEstimationSpec,
    num_qubits: usize,
    eig_qubits: &[usize],
    system_qubits: &[usize],
) -> Result<Circuit> {
    let n = spec.eig_bits();
    if eig_qubits.len() != n {
        return Err(QpcaError::DimensionMismatch {
            expected: n,
            found: eig_qubits.len(),
        });
    }
    if system_qubits.len() != spec.system_qubits() {
        return Err(QpcaError::DimensionMismatch {
            expected: spec.system_qubits(),
            found: system_qubits.len(),
        });
    }
    let mut c = Circuit::new(num_qubits)?;
    for &q in eig_qubits {
        c.push_labeled(GateOp::h(q), "pe")?;
    }
    for power in 0..n {
        let control = eig_qubits[n - 1 - power];
        let op = matrix_exponential_unitary(spec, power)?
            .retarget(system_qubits)?
            .controlled(control)?;
        c.push_labeled(op, "pe")?;
    }
    c.append_mapped(&build_inverse_qft(n)?, eig_qubits)?;
    Ok(c)
}

/// Phase estimation writing eigenvalues of `spec` into the λ-register of
/// `layout`, acting on the row half of the data register.
pub fn build_phase_estimation(spec: &PhaseEstimationSpec, layout: &RegisterLayout) -> Result<Circuit> {
    if layout.n() != spec.eig_bits() {
        return Err(QpcaError::DimensionMismatch {
            expected: layout.n(),
            found: spec.eig_bits(),
        });
    }
    build_phase_estimation_on(
        spec,
        layout.total_qubits(),
        &layout.lambda_qubits(),
        &layout.data_row_qubits(),
    )
}

/// Binary tree of `Ry` angles that prepares a real vector from `|0...0⟩`.
///
/// Level `l` holds `2^l` angles; node `p` of level `l` splits the mass of
/// leaves `[p·2^(m-l), (p+1)·2^(m-l))` between its two halves.
#[derive(Clone, Debug)]
pub struct StatePrepTree {
    leaf_values: Vec<f64>,
    node_angles: Vec<Vec<f64>>,
}

impl StatePrepTree {
    pub fn new(vector: &[f64]) -> Result<Self> {
        if vector.is_empty() || !vector.len().is_power_of_two() {
            return Err(QpcaError::InvalidParameter(format!(
                "state-prep vector length {} is not a power of two",
                vector.len()
            )));
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(QpcaError::InvalidParameter("state-prep vector must be finite".into()));
        }
        let norm = vector.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(QpcaError::ZeroVector);
        }
        let leaf_values: Vec<f64> = vector.iter().map(|v| v / norm).collect();
        let m = leaf_values.len().trailing_zeros() as usize;

        let mut node_angles = Vec::with_capacity(m);
        for level in 0..m {
            let span = leaf_values.len() >> level;
            let angles = leaf_values
                .chunks(span)
                .map(|node| {
                    if span == 2 {
                        // the last level carries signs
                        2.0 * node[1].atan2(node[0])
                    } else {
                        let (left, right) = node.split_at(span / 2);
                        let mass = |s: &[f64]| s.iter().map(|v| v * v).sum::<f64>().sqrt();
                        2.0 * mass(right).atan2(mass(left))
                    }
                })
                .collect();
            node_angles.push(angles);
        }
        Ok(Self {
            leaf_values,
            node_angles,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.node_angles.len()
    }

    pub fn leaf_values(&self) -> &[f64] {
        &self.leaf_values
    }

    pub fn node_angles(&self) -> &[Vec<f64>] {
        &self.node_angles
    }

    /// Leaf amplitudes implied by the angles: the product of `cos(θ/2)` on
    /// left branches and `sin(θ/2)` on right branches.
    pub fn reconstruct(&self) -> Vec<f64> {
        let m = self.num_qubits();
        (0..1usize << m)
            .map(|leaf| {
                (0..m)
                    .map(|level| {
                        let node = leaf >> (m - level);
                        let half = self.node_angles[level][node] / 2.0;
                        if leaf >> (m - 1 - level) & 1 == 1 {
                            half.sin()
                        } else {
                            half.cos()
                        }
                    })
                    .product()
            })
            .collect()
    }

    /// One uniformly controlled `Ry` layer per tree level.
    pub fn circuit(&self) -> Result<Circuit> {
        let m = self.num_qubits();
        let mut c = Circuit::new(m)?;
        for (level, angles) in self.node_angles.iter().enumerate() {
            for (node, &theta) in angles.iter().enumerate() {
                let mut op = GateOp::ry(level, theta);
                for ctl in 0..level {
                    op = op.with_control(ctl, node >> (level - 1 - ctl) & 1 == 1)?;
                }
                c.push_labeled(op, "state_prep")?;
            }
        }
        Ok(c)
    }
}

/// Circuit on `m` qubits mapping `|0...0⟩` to `vector / ‖vector‖`.
pub fn build_state_prep(vector: &[f64], m: usize) -> Result<Circuit> {
    if vector.len() != 1usize << m {
        return Err(QpcaError::DimensionMismatch {
            expected: 1usize << m,
            found: vector.len(),
        });
    }
    if m == 0 {
        return Err(QpcaError::InvalidParameter("state prep needs m >= 1".into()));
    }
    StatePrepTree::new(vector)?.circuit()
}
