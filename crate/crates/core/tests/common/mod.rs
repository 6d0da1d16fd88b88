#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use qpca_core::{HermitianInput, RegisterLayout};
use rand::Rng;

pub fn matrix_a() -> HermitianInput {
    HermitianInput::from_rows(&[vec![1.5, 0.5], vec![0.5, 1.5]]).unwrap()
}

pub fn matrix_c() -> HermitianInput {
    HermitianInput::new(DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0, 2.0, 3.0])))
        .unwrap()
}

pub fn random_orthogonal<R: Rng>(rng: &mut R, d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0)).qr().q()
}

/// `Q diag(values) Qᵀ` for a random orthogonal `Q`.
pub fn symmetric_with_spectrum<R: Rng>(rng: &mut R, values: &[f64]) -> DMatrix<f64> {
    let q = random_orthogonal(rng, values.len());
    &q * DMatrix::from_diagonal(&DVector::from_vec(values.to_vec())) * q.transpose()
}

/// `Σ_{λ_k>τ} λ_k |1⟩|0⟩|λ_k⟩|u_k u_k⟩`, normalized, over the full register.
///
/// Built from the eigenvalues and eigenvectors directly; the λ-register
/// value is the rounded eigenvalue.
pub fn expected_joint_state(input: &HermitianInput, tau: f64, layout: &RegisterLayout) -> Vec<f64> {
    let p = input.padded_dim();
    let d = input.dim();
    let mut out = vec![0.0; 1 << layout.total_qubits()];
    let vecs = input.eigenvectors();
    for (k, &lambda) in input.eigenvalues().iter().enumerate() {
        if lambda <= tau {
            continue;
        }
        for r in 0..d {
            for c in 0..d {
                let idx = layout.index(true, 0, lambda.round() as usize, r * p + c);
                out[idx] += lambda * vecs[(r, k)] * vecs[(c, k)];
            }
        }
    }
    let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
    out.iter().map(|v| v / norm).collect()
}

/// Mass `Σ_{λ_k = v} λ_k² / Σ_{kept} λ_j²` at each kept register value `v`.
pub fn expected_histogram(input: &HermitianInput, tau: f64) -> Vec<(usize, f64)> {
    let kept: Vec<f64> = input.eigenvalues().iter().copied().filter(|&l| l > tau).collect();
    let total: f64 = kept.iter().map(|l| l * l).sum();
    let mut out: Vec<(usize, f64)> = Vec::new();
    for l in kept {
        let v = l.round() as usize;
        match out.iter_mut().find(|(k, _)| *k == v) {
            Some((_, m)) => *m += l * l / total,
            None => out.push((v, l * l / total)),
        }
    }
    out.sort_by_key(|(k, _)| *k);
    out
}
