//! Statevector simulation of a low-complexity quantum principal component
//! analysis.
//!
//! A real symmetric matrix is amplitude-encoded into a data register, its
//! eigenvalues are written into a λ-register by phase estimation, and an
//! ancilla is flipped for every eigenvalue above a threshold `τ`. After the
//! work registers are uncomputed, post-selecting the ancilla on `|1⟩`
//! leaves only the principal components `Σ_{λ_k>τ} λ_k |u_k⟩|u_k⟩`.
//!
//! ```
//! use qpca_core::{run_qpca, HermitianInput, QpcaConfig};
//!
//! let input = HermitianInput::from_rows(&[vec![1.5, 0.5], vec![0.5, 1.5]]).unwrap();
//! let result = run_qpca(&input, &QpcaConfig::exact(1.0, 2)).unwrap();
//! assert!((result.success_prob - 0.8).abs() < 1e-9);
//! for a in &result.output_amps {
//!     assert!((a.re - 0.5).abs() < 1e-6);
//! }
//! ```

pub mod builders;
pub mod cost;
pub mod error;
pub mod filter;
pub mod linalg;
pub mod pipeline;
pub mod sim;

pub use builders::{
    build_inverse_qft, build_phase_estimation, build_phase_estimation_on, build_qft,
    build_state_prep, matrix_exponential_unitary, PhaseEstimationSpec, StatePrepTree,
};
pub use cost::{cost_baseline, cost_proposed, gate_ratio, CostReport};
pub use error::{QpcaError, Result};
pub use filter::{
    build_filter_table, build_filter_unitary, build_qft_adder, count_filter_gates,
    newton_reciprocal, shrink, FilterParams, FilterTable, FixedPoint,
};
pub use pipeline::{
    classical_pca_oracle, controlled_flip, fidelity, run_qpca, second_phase_estimation,
    uncompute, FilterKind, HermitianInput, Mode, OracleResult, QpcaConfig, QpcaPipeline,
    QpcaResult, RegisterLayout, SampledOutcome,
};
pub use sim::{Amplitude, Circuit, GateOp, StateVector};
