//! Circuit blocks checked against independently computed references.

mod common;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use qpca_core::{
    build_phase_estimation, build_phase_estimation_on, build_state_prep, matrix_exponential_unitary,
    HermitianInput, PhaseEstimationSpec, RegisterLayout, StatePrepTree, StateVector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{matrix_a, matrix_c, symmetric_with_spectrum};

fn max_dev(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).map(|z| z.norm()).max()
}

fn diag(values: &[Complex64]) -> DMatrix<Complex64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_vec(values.to_vec()))
}

#[test]
fn exponential_of_c_matches_printed_unitaries() {
    let spec = PhaseEstimationSpec::new(matrix_c().matrix().clone(), 2).unwrap();
    let i = Complex64::i();
    let one = Complex64::new(1.0, 0.0);
    let u1 = matrix_exponential_unitary(&spec, 0).unwrap().matrix();
    assert!(max_dev(&u1, &diag(&[one, i, -one, -i])) < 1e-10);
    let u2 = matrix_exponential_unitary(&spec, 1).unwrap().matrix();
    assert!(max_dev(&u2, &diag(&[one, -one, one, -one])) < 1e-10);
}

#[test]
fn phase_estimation_reads_eigenvalues() {
    // A with u1 = (1,1)/√2: λ = 2 → register |10⟩
    let spec = PhaseEstimationSpec::new(matrix_a().matrix().clone(), 2).unwrap();
    let pe = build_phase_estimation_on(&spec, 3, &[0, 1], &[2]).unwrap();
    let s = 0.5f64.sqrt();
    let input = StateVector::from_real_unnormalized(&[s, s, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
    let out = input.run(&pe).unwrap();
    let p: f64 = (0b100..=0b101).map(|i| out.amplitude(i).norm_sqr()).sum();
    assert!(p > 1.0 - 1e-9, "λ-register mass on |10⟩ = {p}");

    // C on e_3: λ = 3 → register |11⟩
    let spec = PhaseEstimationSpec::new(matrix_c().matrix().clone(), 2).unwrap();
    let pe = build_phase_estimation_on(&spec, 4, &[0, 1], &[2, 3]).unwrap();
    let out = StateVector::basis(4, 0b0011).unwrap().run(&pe).unwrap();
    assert!(out.amplitude(0b1111).norm_sqr() > 1.0 - 1e-9);

    // zero matrix: register stays |00⟩
    let spec = PhaseEstimationSpec::new(DMatrix::zeros(2, 2), 2).unwrap();
    let pe = build_phase_estimation_on(&spec, 3, &[0, 1], &[2]).unwrap();
    let input = StateVector::from_real_unnormalized(&[0.6, 0.8, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
    let out = input.run(&pe).unwrap();
    assert!((out.amplitude(0).re - 0.6).abs() < 1e-12 && (out.amplitude(1).re - 0.8).abs() < 1e-12);
}

#[test]
fn phase_estimation_width_mismatch() {
    let spec = PhaseEstimationSpec::new(matrix_c().matrix().clone(), 2).unwrap();
    assert!(build_phase_estimation(&spec, &RegisterLayout::new(3, 4).unwrap()).is_err());
    assert!(build_phase_estimation(&spec, &RegisterLayout::new(2, 2).unwrap()).is_err());
    assert!(build_phase_estimation_on(&spec, 5, &[0], &[1, 2]).is_err());
}

#[test]
fn phase_estimation_round_trip_on_random_integer_spectra() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for trial in 0..20 {
        let n = 2 + trial % 2;
        let d: usize = if trial % 3 == 0 { 2 } else { 4 };
        // distinct integers in [0, 2^n)
        let mut pool: Vec<f64> = (0..1u32 << n).map(f64::from).collect();
        let values: Vec<f64> = (0..d).map(|_| pool.swap_remove(rng.gen_range(0..pool.len()))).collect();
        let a = symmetric_with_spectrum(&mut rng, &values);
        let spec = PhaseEstimationSpec::new(a, n).unwrap();
        assert!(spec.is_exact());
        let sys = d.trailing_zeros() as usize;
        let eig: Vec<usize> = (0..n).collect();
        let system: Vec<usize> = (n..n + sys).collect();
        let pe = build_phase_estimation_on(&spec, n + sys, &eig, &system).unwrap();

        let amps: Vec<f64> = (0..1 << (n + sys)).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let s = StateVector::from_real_unnormalized(&amps).unwrap();
        let back = s.run(&pe).unwrap().run(&pe.inverse()).unwrap();
        let f = s.inner(&back).unwrap().norm();
        assert!(f > 1.0 - 1e-9, "trial {trial}: fidelity {f}");

        // each eigenvector lands on its eigenvalue
        for (k, &lambda) in spec.spectrum().values.iter().enumerate() {
            let u: Vec<f64> = spec.spectrum().vectors.column(k).iter().copied().collect();
            let mut amps = vec![0.0; 1 << (n + sys)];
            amps[..d].copy_from_slice(&u);
            let out = StateVector::from_real_unnormalized(&amps).unwrap().run(&pe).unwrap();
            let reg = lambda.round() as usize;
            let mass: f64 = (0..d).map(|j| out.amplitude((reg << sys) | j).norm_sqr()).sum();
            assert!(mass > 1.0 - 1e-9, "trial {trial} λ={lambda}: mass {mass}");
        }
    }
}

#[test]
fn controlled_powers_are_consistent() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let values: Vec<f64> = (0..4).map(|_| rng.gen_range(-3.0..9.0)).collect();
        let spec = PhaseEstimationSpec::new(symmetric_with_spectrum(&mut rng, &values), 4).unwrap();
        let u0 = spec.unitary_power(0).unwrap();
        for j in 1..4 {
            let mut p = u0.clone();
            for _ in 0..j {
                p = &p * &p;
            }
            assert!(max_dev(&spec.unitary_power(j).unwrap(), &p) < 1e-9);
        }
    }
}

#[test]
fn state_prep_worked_example_vectors() {
    let a = matrix_a().encoded_amplitudes().unwrap();
    let out = StateVector::zero(2).unwrap().run(&build_state_prep(&a, 2).unwrap()).unwrap();
    for (x, e) in out.amplitudes().iter().zip([0.6708, 0.2236, 0.2236, 0.6708]) {
        assert!((x.re - e).abs() < 5e-5 && x.im.abs() < 1e-12);
    }

    let c = matrix_c().encoded_amplitudes().unwrap();
    let out = StateVector::zero(4).unwrap().run(&build_state_prep(&c, 4).unwrap()).unwrap();
    for (i, a) in out.amplitudes().iter().enumerate() {
        match i {
            5 => assert!((a.re - 0.2673).abs() < 5e-5),
            10 => assert!((a.re - 0.5345).abs() < 5e-5),
            15 => assert!((a.re - 0.8018).abs() < 5e-5),
            _ => assert!(a.norm() < 1e-9, "index {i}: {a}"),
        }
    }
}

#[test]
fn ry_tree_angles_follow_node_masses() {
    let tree = StatePrepTree::new(&HermitianInput::from_rows(&[vec![1.5, 0.5], vec![0.5, 1.5]])
        .unwrap()
        .encoded_amplitudes()
        .unwrap())
    .unwrap();
    // root splits 0.5 / 0.5, leaves 0.6708 / 0.2236 and 0.2236 / 0.6708
    assert!((tree.node_angles()[0][0] - PI / 2.0).abs() < 1e-12);
    let expected = 2.0 * (1.0f64 / 3.0).atan();
    assert!((tree.node_angles()[1][0] - expected).abs() < 1e-12);
    assert!((tree.node_angles()[1][1] - (PI - expected)).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn state_prep_reproduces_random_vectors(
        m in 1usize..=5,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = (0..1 << m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-6);
        let out = StateVector::zero(m).unwrap().run(&build_state_prep(&v, m).unwrap()).unwrap();
        for (a, x) in out.amplitudes().iter().zip(&v) {
            prop_assert!((a.re - x / norm).abs() < 1e-8);
            prop_assert!(a.im.abs() < 1e-12);
        }
        let tree = StatePrepTree::new(&v).unwrap();
        for (r, x) in tree.reconstruct().iter().zip(&v) {
            prop_assert!((r - x / norm).abs() < 1e-9);
        }
    }
}
