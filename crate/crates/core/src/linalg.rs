//! Small dense real-symmetric helpers shared by the builders and the pipeline.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{QpcaError, Result};

/// Largest tolerated `|a_ij - a_ji|` for a matrix to count as symmetric.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

/// Rejects non-square or asymmetric input, reporting the worst offending pair.
pub fn check_symmetric(matrix: &DMatrix<f64>, tolerance: f64) -> Result<()> {
    if matrix.nrows() != matrix.ncols() {
        return Err(QpcaError::NotSquare {
            rows: matrix.nrows(),
            cols: matrix.ncols(),
        });
    }
    let mut worst = (0, 0, 0.0f64);
    for r in 0..matrix.nrows() {
        for c in r + 1..matrix.ncols() {
            let d = (matrix[(r, c)] - matrix[(c, r)]).abs();
            if d > worst.2 || d.is_nan() {
                worst = (r, c, d);
            }
        }
    }
    if worst.2 > tolerance || worst.2.is_nan() {
        return Err(QpcaError::NotSymmetric {
            row: worst.0,
            col: worst.1,
            asymmetry: worst.2,
        });
    }
    Ok(())
}

/// Eigenpairs of a real symmetric matrix, eigenvalues in descending order.
#[derive(Clone, Debug)]
pub struct SymmetricSpectrum {
    pub values: Vec<f64>,
    /// Column `k` is the unit eigenvector for `values[k]`.
    pub vectors: DMatrix<f64>,
}

impl SymmetricSpectrum {
    pub fn of(matrix: &DMatrix<f64>) -> Result<Self> {
        check_symmetric(matrix, SYMMETRY_TOLERANCE)?;
        // symmetrize away the tolerated asymmetry before decomposing
        let sym = (matrix + matrix.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(matrix.nrows(), order.len(), |r, c| {
            eig.eigenvectors[(r, order[c])]
        });
        Ok(Self { values, vectors })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `Σ f(λ_k) u_k u_kᵀ`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        self.map_complex(|l| Complex64::new(f(l), 0.0)).map(|z| z.re)
    }

    /// `Σ f(λ_k) u_k u_kᵀ` for a complex-valued spectral function.
    pub fn map_complex(&self, f: impl Fn(f64) -> Complex64) -> DMatrix<Complex64> {
        let d = self.dim();
        let mut out = DMatrix::<Complex64>::zeros(d, d);
        for (k, &lambda) in self.values.iter().enumerate() {
            let w = f(lambda);
            let u = self.vectors.column(k);
            for r in 0..d {
                for c in 0..d {
                    out[(r, c)] += w * (u[r] * u[c]);
                }
            }
        }
        out
    }
}
